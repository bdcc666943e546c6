#pragma once
// Triple classification (per-relation threshold protocol) and filtered link
// prediction (Hit@k, Mean Rank), both deterministic under a seed. The core
// routines take injected scores so tests can drive them directly.

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "fkge/kg/graph.hpp"
#include "fkge/kge/model.hpp"

namespace fkge::eval {

struct EvalReport {
    double accuracy = 0.0;
    double hit1 = 0.0;
    double hit3 = 0.0;
    double hit10 = 0.0;
    double mean_rank = 0.0;
    double wall_time_sec = 0.0;
    kg::Split split = kg::Split::Valid;
};

struct EvalConfig {
    int norm_order = 1;
    bool type_constraint = false;   // restrict candidates to train-observed slot fillers
    bool filter_train = false;      // also remove train corruptions (standard variant)
};

using ScoreFn = std::function<double(const kg::Triple&)>;

struct LabeledScore {
    double score;
    bool positive;
};

// Best decision threshold for "score <= theta => positive" on one relation's
// labeled scores. Deterministic: lowest of the maximizing candidates.
double fit_threshold(std::vector<LabeledScore> scores);

// Fits per-relation thresholds on `fit` (global fallback when a relation has
// no fit data) and returns accuracy over `evaluate`.
double classify_with_thresholds(
    const std::map<kg::RelationId, std::vector<LabeledScore>>& fit,
    const std::map<kg::RelationId, std::vector<LabeledScore>>& evaluate);

double triple_classification(const kg::KnowledgeGraph& g, const kge::EmbeddingTable& tbl,
                             kg::Split split, std::uint64_t seed, const EvalConfig& cfg = {});

// Same protocol with an injected score function (test hook).
double triple_classification_scored(const kg::KnowledgeGraph& g, const ScoreFn& score,
                                    kg::Split split, std::uint64_t seed,
                                    std::size_t entity_universe = 0);

EvalReport link_prediction(const kg::KnowledgeGraph& g, const kge::EmbeddingTable& tbl,
                           kg::Split split, const EvalConfig& cfg = {});

EvalReport link_prediction_scored(const kg::KnowledgeGraph& g, const ScoreFn& score,
                                  kg::Split split, const EvalConfig& cfg = {},
                                  std::size_t entity_universe = 0);

}  // namespace fkge::eval
