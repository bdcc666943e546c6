#include "fkge/eval/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "fkge/kg/store.hpp"

namespace fkge::eval {

namespace {

std::size_t universe_or_base(const kg::KnowledgeGraph& g, std::size_t requested) {
    if (requested) return requested;
    // Virtual rows are train-time scaffolding; they never act as candidates
    // or corruption targets.
    return g.has_virtual() ? g.base_entity_count() : g.entity_count();
}

// One corruption per eval triple, kept outside the full triple set.
std::vector<kg::Triple> corrupt_once(const kg::KnowledgeGraph& g,
                                     const std::vector<kg::Triple>& positives,
                                     std::uint64_t seed, std::size_t n_entities) {
    util::Rng rng(seed);
    std::vector<kg::Triple> out;
    out.reserve(positives.size());
    for (const auto& pos : positives) {
        kg::Triple neg = pos;
        for (std::size_t attempt = 0; attempt < 1000; ++attempt) {
            neg = pos;
            const auto cand = static_cast<kg::EntityId>(rng.uniform_int(n_entities));
            if (rng.coin()) neg.head = cand;
            else neg.tail = cand;
            if (neg != pos && !g.contains(neg)) break;
        }
        out.push_back(neg);
    }
    return out;
}

std::vector<kg::Triple> split_triples_of(const kg::KnowledgeGraph& g, kg::Split split) {
    std::vector<kg::Triple> out;
    for (std::size_t i = 0; i < g.triple_count(); ++i)
        if (g.split_of(i) == split) out.push_back(g.triples()[i]);
    return out;
}

}  // namespace

double fit_threshold(std::vector<LabeledScore> scores) {
    if (scores.empty()) return 0.0;
    std::sort(scores.begin(), scores.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });
    // Sweep candidate thresholds between consecutive distinct scores. With
    // k items at or below theta classified positive, accuracy is
    // (positives <= theta) + (negatives > theta).
    const std::size_t n = scores.size();
    std::size_t total_pos = 0;
    for (const auto& s : scores) total_pos += s.positive ? 1u : 0u;

    double best_theta = scores.front().score - 1.0;
    std::size_t pos_below = 0;
    std::size_t best_correct = total_pos == 0 ? n : n - total_pos;  // everything negative
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[j].score == scores[i].score) {
            pos_below += scores[j].positive ? 1u : 0u;
            ++j;
        }
        const std::size_t correct = pos_below + ((n - total_pos) - (j - pos_below));
        if (correct > best_correct) {
            best_correct = correct;
            best_theta = j < n ? (scores[j - 1].score + scores[j].score) / 2.0
                               : scores[j - 1].score + 1.0;
        }
        i = j;
    }
    return best_theta;
}

double classify_with_thresholds(
    const std::map<kg::RelationId, std::vector<LabeledScore>>& fit,
    const std::map<kg::RelationId, std::vector<LabeledScore>>& evaluate) {
    std::vector<LabeledScore> pooled;
    for (const auto& [rel, scores] : fit) pooled.insert(pooled.end(), scores.begin(), scores.end());
    if (pooled.empty()) throw std::invalid_argument("no fit data for threshold classification");
    const double global_theta = fit_threshold(pooled);

    std::map<kg::RelationId, double> theta;
    for (const auto& [rel, scores] : fit) theta[rel] = fit_threshold(scores);

    std::size_t correct = 0, total = 0;
    for (const auto& [rel, scores] : evaluate) {
        const auto it = theta.find(rel);
        const double th = it != theta.end() ? it->second : global_theta;
        for (const auto& s : scores) {
            const bool predicted_positive = s.score <= th;
            correct += predicted_positive == s.positive ? 1u : 0u;
            ++total;
        }
    }
    if (total == 0) throw std::invalid_argument("empty evaluation split");
    return static_cast<double>(correct) / static_cast<double>(total);
}

double triple_classification_scored(const kg::KnowledgeGraph& g, const ScoreFn& score,
                                    kg::Split split, std::uint64_t seed,
                                    std::size_t entity_universe) {
    const std::size_t n_ent = universe_or_base(g, entity_universe);
    const auto valid_pos = split_triples_of(g, kg::Split::Valid);
    if (valid_pos.empty()) throw std::invalid_argument("empty valid split");
    const auto valid_neg =
        corrupt_once(g, valid_pos, util::derive_seed(seed, 0x76616C69ull), n_ent);

    auto collect = [&](const std::vector<kg::Triple>& pos, const std::vector<kg::Triple>& neg) {
        std::map<kg::RelationId, std::vector<LabeledScore>> by_rel;
        for (const auto& t : pos) by_rel[t.relation].push_back({score(t), true});
        for (const auto& t : neg) by_rel[t.relation].push_back({score(t), false});
        return by_rel;
    };

    const auto fit = collect(valid_pos, valid_neg);
    if (split == kg::Split::Valid) return classify_with_thresholds(fit, fit);

    const auto eval_pos = split_triples_of(g, split);
    if (eval_pos.empty()) throw std::invalid_argument("empty evaluation split");
    const auto eval_neg =
        corrupt_once(g, eval_pos, util::derive_seed(seed, 0x6576616Cull), n_ent);
    return classify_with_thresholds(fit, collect(eval_pos, eval_neg));
}

double triple_classification(const kg::KnowledgeGraph& g, const kge::EmbeddingTable& tbl,
                             kg::Split split, std::uint64_t seed, const EvalConfig& cfg) {
    return triple_classification_scored(
        g, [&](const kg::Triple& t) { return kge::score_triple(tbl, t, cfg.norm_order); }, split,
        seed);
}

namespace {

struct RankAccumulator {
    double rank_sum = 0.0;
    double hit1 = 0.0, hit3 = 0.0, hit10 = 0.0;
    std::size_t count = 0;

    void add(double rank) {
        rank_sum += rank;
        hit1 += rank <= 1.0 ? 1.0 : 0.0;
        hit3 += rank <= 3.0 ? 1.0 : 0.0;
        hit10 += rank <= 10.0 ? 1.0 : 0.0;
        ++count;
    }
};

// Entities observed per (relation, slot) in train; used by type constraint.
struct SlotIndex {
    std::map<kg::RelationId, std::vector<kg::EntityId>> heads, tails;
};

SlotIndex build_slot_index(const kg::KnowledgeGraph& g, std::size_t n_entities) {
    SlotIndex idx;
    std::map<kg::RelationId, std::unordered_set<kg::EntityId>> hs, ts;
    for (std::size_t i = 0; i < g.triple_count(); ++i) {
        if (g.split_of(i) != kg::Split::Train) continue;
        const auto& t = g.triples()[i];
        if (t.head < n_entities) hs[t.relation].insert(t.head);
        if (t.tail < n_entities) ts[t.relation].insert(t.tail);
    }
    for (auto& [r, s] : hs) {
        idx.heads[r] = std::vector<kg::EntityId>(s.begin(), s.end());
        std::sort(idx.heads[r].begin(), idx.heads[r].end());
    }
    for (auto& [r, s] : ts) {
        idx.tails[r] = std::vector<kg::EntityId>(s.begin(), s.end());
        std::sort(idx.tails[r].begin(), idx.tails[r].end());
    }
    return idx;
}

}  // namespace

EvalReport link_prediction_scored(const kg::KnowledgeGraph& g, const ScoreFn& score,
                                  kg::Split split, const EvalConfig& cfg,
                                  std::size_t entity_universe) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n_ent = universe_or_base(g, entity_universe);
    const auto eval_triples = split_triples_of(g, split);
    if (eval_triples.empty()) throw std::invalid_argument("empty evaluation split");

    // Filter set: known true triples whose corruptions are discarded.
    kg::TripleSet filter;
    for (std::size_t i = 0; i < g.triple_count(); ++i) {
        const auto s = g.split_of(i);
        if (s == kg::Split::Valid || s == kg::Split::Test ||
            (cfg.filter_train && s == kg::Split::Train))
            filter.insert(g.triples()[i]);
    }

    SlotIndex slots;
    if (cfg.type_constraint) slots = build_slot_index(g, n_ent);

    RankAccumulator acc;
    std::vector<kg::EntityId> all_entities(n_ent);
    for (std::size_t i = 0; i < n_ent; ++i) all_entities[i] = static_cast<kg::EntityId>(i);

    auto rank_direction = [&](const kg::Triple& truth, bool corrupt_head) {
        const kg::EntityId true_id = corrupt_head ? truth.head : truth.tail;
        const std::vector<kg::EntityId>* candidates = &all_entities;
        if (cfg.type_constraint) {
            const auto& index = corrupt_head ? slots.heads : slots.tails;
            const auto it = index.find(truth.relation);
            if (it != index.end()) candidates = &it->second;
        }
        const double true_score = score(truth);
        std::size_t less = 0, equal = 1;  // the true completion itself
        for (const auto cand : *candidates) {
            if (cand == true_id) continue;
            kg::Triple corrupted = truth;
            if (corrupt_head) corrupted.head = cand;
            else corrupted.tail = cand;
            if (filter.count(corrupted)) continue;
            const double s = score(corrupted);
            if (s < true_score) ++less;
            else if (s == true_score) ++equal;
        }
        // Tie block occupies ranks [less+1, less+equal]; take its mean.
        const double rank =
            static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
        acc.add(rank);
    };

    for (const auto& t : eval_triples) {
        rank_direction(t, true);
        rank_direction(t, false);
    }

    EvalReport report;
    report.split = split;
    report.mean_rank = acc.rank_sum / static_cast<double>(acc.count);
    report.hit1 = acc.hit1 / static_cast<double>(acc.count);
    report.hit3 = acc.hit3 / static_cast<double>(acc.count);
    report.hit10 = acc.hit10 / static_cast<double>(acc.count);
    report.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

EvalReport link_prediction(const kg::KnowledgeGraph& g, const kge::EmbeddingTable& tbl,
                           kg::Split split, const EvalConfig& cfg) {
    return link_prediction_scored(
        g, [&](const kg::Triple& t) { return kge::score_triple(tbl, t, cfg.norm_order); }, split,
        cfg);
}

}  // namespace fkge::eval
