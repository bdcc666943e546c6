#include "fkge/kge/train.hpp"

#include <stdexcept>
#include <unordered_set>

#include "fkge/kg/store.hpp"

namespace fkge::kge {

namespace {

struct TouchedRows {
    std::unordered_set<kg::EntityId> entities;
    std::unordered_set<kg::RelationId> relations;
};

void apply_grad(EmbeddingTable& tbl, const kg::Triple& t, const ScoreGrad& g, double step,
                TouchedRows& touched) {
    tbl.entities().row(t.head) -= step * g.head.transpose();
    tbl.entities().row(t.tail) -= step * g.tail.transpose();
    tbl.relations().row(t.relation) -= step * g.relation.transpose();
    touched.entities.insert(t.head);
    touched.entities.insert(t.tail);
    touched.relations.insert(t.relation);
    switch (tbl.model()) {
        case ModelKind::TransE: break;
        case ModelKind::TransH:
            tbl.transh_normals().row(t.relation) -= step * g.transh_normal.transpose();
            break;
        case ModelKind::TransR:
            tbl.transr_proj()[t.relation] -= step * g.transr_proj;
            break;
        case ModelKind::TransD:
            tbl.transd_ent_proj().row(t.head) -= step * g.transd_head_proj.transpose();
            tbl.transd_ent_proj().row(t.tail) -= step * g.transd_tail_proj.transpose();
            tbl.transd_rel_proj().row(t.relation) -= step * g.transd_rel_proj.transpose();
            break;
    }
}

// Entity vectors are kept inside the unit ball; TransH normals stay unit.
void project_norms(EmbeddingTable& tbl, const TouchedRows& touched) {
    for (const auto e : touched.entities) {
        const double n = tbl.entities().row(e).norm();
        if (n > 1.0) tbl.entities().row(e) /= n;
    }
    if (tbl.model() == ModelKind::TransH) {
        for (const auto r : touched.relations) {
            const double n = tbl.transh_normals().row(r).norm();
            if (n > 0.0) tbl.transh_normals().row(r) /= n;
        }
    }
}

}  // namespace

TrainStats train_epochs(const kg::KnowledgeGraph& g, EmbeddingTable& tbl, const TrainConfig& cfg,
                        std::uint64_t seed, int epochs_override) {
    cfg.validate();
    if (tbl.dim() != cfg.dim) throw std::invalid_argument("table dimension does not match config");
    if (tbl.entity_count() != static_cast<Eigen::Index>(g.entity_count()) ||
        tbl.relation_count() != static_cast<Eigen::Index>(g.relation_count()))
        throw std::invalid_argument("table shape does not match graph");

    const auto train_idx = g.split_indices(kg::Split::Train);
    if (train_idx.empty()) throw std::invalid_argument("graph has no train triples");

    const int epochs = epochs_override > 0 ? epochs_override : cfg.epochs_per_round;
    util::Rng rng(util::derive_seed(seed, 0x747261696Eull));

    TrainStats stats;
    stats.epochs = static_cast<std::size_t>(epochs);
    std::vector<std::size_t> order = train_idx;
    ScoreGrad gpos, gneg;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_active = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<kg::Triple> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(g.triples()[order[i]]);
            const auto negatives = kg::sample_negatives(g, batch, rng);

            TouchedRows touched;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const double s_pos = score_triple_grad(tbl, batch[i], cfg.norm_order, gpos);
                const double s_neg = score_triple_grad(tbl, negatives[i], cfg.norm_order, gneg);
                const double hinge = cfg.margin + s_pos - s_neg;
                epoch_loss += std::max(0.0, hinge);
                if (hinge <= 0.0) continue;
                ++epoch_active;
                apply_grad(tbl, batch[i], gpos, cfg.learning_rate, touched);
                apply_grad(tbl, negatives[i], gneg, -cfg.learning_rate, touched);
            }
            project_norms(tbl, touched);
        }
        epoch_loss /= static_cast<double>(order.size());
        if (epoch == 0) stats.first_epoch_loss = epoch_loss;
        stats.last_epoch_loss = epoch_loss;
        stats.active_pairs = epoch_active;
        if (!std::isfinite(epoch_loss) || !tbl.all_finite())
            throw std::runtime_error(
                "NaN detected during training; learning rate is likely too high");
    }
    return stats;
}

double mean_margin_loss(const kg::KnowledgeGraph& g, const EmbeddingTable& tbl,
                        const TrainConfig& cfg, std::uint64_t seed) {
    const auto train_idx = g.split_indices(kg::Split::Train);
    if (train_idx.empty()) return 0.0;
    util::Rng rng(util::derive_seed(seed, 0x6C6F7373ull));
    std::vector<kg::Triple> batch;
    batch.reserve(train_idx.size());
    for (const auto i : train_idx) batch.push_back(g.triples()[i]);
    const auto negatives = kg::sample_negatives(g, batch, rng);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double s_pos = score_triple(tbl, batch[i], cfg.norm_order);
        const double s_neg = score_triple(tbl, negatives[i], cfg.norm_order);
        total += std::max(0.0, cfg.margin + s_pos - s_neg);
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace fkge::kge
