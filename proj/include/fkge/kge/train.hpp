#pragma once
// Margin-ranking SGD over a graph's train split, with per-batch norm
// re-projection and a NaN abort.

#include "fkge/kge/model.hpp"

namespace fkge::kge {

struct TrainStats {
    double first_epoch_loss = 0.0;  // mean hinge over the first epoch's batches
    double last_epoch_loss = 0.0;
    std::size_t epochs = 0;
    std::size_t active_pairs = 0;   // pairs with a non-zero hinge in the last epoch
};

// Minimizes sum of max(0, margin + score(pos) - score(neg)) with one negative
// per positive. Deterministic for a fixed (graph, table, config, seed).
TrainStats train_epochs(const kg::KnowledgeGraph& g, EmbeddingTable& tbl, const TrainConfig& cfg,
                        std::uint64_t seed, int epochs_override = 0);

// Mean hinge loss over the train split with seeded negatives; evaluation only.
double mean_margin_loss(const kg::KnowledgeGraph& g, const EmbeddingTable& tbl,
                        const TrainConfig& cfg, std::uint64_t seed);

}  // namespace fkge::kge
