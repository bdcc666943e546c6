#include "fkge/fed/runner.hpp"

#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace fkge::fed {

OwnerActor& FederationResult::actor(const std::string& id) {
    for (auto& a : actors)
        if (a->actor_id() == id) return *a;
    throw std::out_of_range("no actor with id " + id);
}

double FederationResult::max_epsilon() const {
    double best = -1.0;
    for (const auto& a : actors) best = std::max(best, a->max_session_epsilon());
    return best;
}

std::vector<EffectiveAlignment> apply_alignment_ablation(std::vector<kg::AlignmentSet> alignments,
                                                         double ratio, bool entities_only,
                                                         bool relations_only, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio > 1.0)
        throw std::invalid_argument("sample-aligned ratio must lie in (0, 1]");
    if (entities_only && relations_only)
        throw std::invalid_argument("entities-only and relations-only are mutually exclusive");
    std::vector<EffectiveAlignment> out;
    for (std::size_t ai = 0; ai < alignments.size(); ++ai) {
        EffectiveAlignment ea;
        ea.align = alignments[ai];
        if (relations_only) {
            for (const auto& [a, b] : ea.align.entity_pairs) {
                ea.excluded_a.insert(a);
                ea.excluded_b.insert(b);
            }
            ea.align.entity_pairs.clear();
        }
        if (entities_only) ea.align.relation_pairs.clear();
        if (!ea.align.entity_pairs.empty()) {
            // Shuffle even at ratio 1.0 so every ratio sees the same pair-order
            // distribution and differs only in how many pairs survive.
            util::Rng rng(util::derive_seed(seed, 0x61626Cull, ai));
            auto pairs = ea.align.entity_pairs;
            rng.shuffle(pairs);
            const auto keep = std::max<std::size_t>(
                1, static_cast<std::size_t>(ratio * static_cast<double>(pairs.size()) + 0.5));
            for (std::size_t p = std::min(keep, pairs.size()); p < pairs.size(); ++p) {
                ea.excluded_a.insert(pairs[p].first);
                ea.excluded_b.insert(pairs[p].second);
            }
            pairs.resize(std::min(keep, pairs.size()));
            ea.align.entity_pairs = std::move(pairs);
        }
        if (ea.align.size() > 0) out.push_back(std::move(ea));
    }
    return out;
}

FederationResult run_federation(FederationSetup setup) {
    if (setup.graphs.empty()) throw std::invalid_argument("federation needs at least one graph");

    FederationResult result;
    result.effective_alignments =
        apply_alignment_ablation(setup.alignments, setup.sample_aligned_ratio,
                                 setup.entities_only, setup.relations_only, setup.ablation_seed);

    result.bus = std::make_unique<SimBus>(setup.policy, setup.scheduler_seed);
    if (!setup.pair_script.empty()) result.bus->set_pair_script(setup.pair_script);

    for (std::size_t i = 0; i < setup.graphs.size(); ++i) {
        ActorConfig cfg = setup.actor_defaults;
        if (i < setup.models.size()) cfg.train.model = setup.models[i];
        auto actor =
            std::make_unique<OwnerActor>(*result.bus, std::move(setup.graphs[i]), cfg);
        actor->set_raw_registry(&result.raw_registry);
        result.actors.push_back(std::move(actor));
    }
    for (auto& actor : result.actors) result.bus->register_actor(actor.get());
    for (const auto& ea : result.effective_alignments) {
        for (auto& actor : result.actors) {
            if (!ea.align.involves(actor->actor_id())) continue;
            const auto* excluded =
                ea.align.graph_a == actor->actor_id() ? &ea.excluded_a : &ea.excluded_b;
            actor->add_alignment(&ea.align, excluded);
        }
    }

    // Baseline training is embarrassingly parallel: one actor per task, no
    // shared state, per-actor seeds. Messages only start flowing afterwards.
    const int threads = std::max(1, setup.threads);
    if (threads == 1 || result.actors.size() == 1) {
        for (auto& actor : result.actors) actor->initialize();
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        for (int t = 0; t < std::min<int>(threads, static_cast<int>(result.actors.size())); ++t) {
            pool.emplace_back([&] {
                while (true) {
                    std::size_t mine;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (next >= result.actors.size()) return;
                        mine = next++;
                    }
                    result.actors[mine]->initialize();
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    result.delivered_messages = result.bus->run();
    return result;
}

std::size_t scan_trace_for_raw_rows(const std::vector<TraceEntry>& trace,
                                    const std::vector<std::vector<std::uint8_t>>& payloads,
                                    const RawRowRegistry& registry, int dim) {
    if (trace.size() != payloads.size())
        throw std::invalid_argument("trace and payload streams must align (keep_payloads on)");
    const std::size_t row_bytes = sizeof(double) * static_cast<std::size_t>(dim);

    // Index every raw row by its first 8 bytes for cheap candidate lookup.
    std::unordered_map<std::uint64_t, std::vector<const double*>> index;
    for (const auto& table : registry.tables()) {
        for (Eigen::Index r = 0; r < table.rows(); ++r) {
            const double* row = table.row(r).data();
            std::uint64_t key;
            std::memcpy(&key, row, sizeof(key));
            index[key].push_back(row);
        }
    }

    std::size_t hits = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto kind = trace[i].kind;
        if (kind != MessageKind::AdvBatch && kind != MessageKind::TranslatedBundle) continue;
        const auto& payload = payloads[i];
        // Scan every aligned 8-byte offset so bundle headers cannot hide rows.
        if (payload.size() < row_bytes) continue;
        for (std::size_t off = 0; off + row_bytes <= payload.size(); off += sizeof(double)) {
            std::uint64_t key;
            std::memcpy(&key, payload.data() + off, sizeof(key));
            const auto it = index.find(key);
            if (it == index.end()) continue;
            for (const double* row : it->second)
                if (std::memcmp(payload.data() + off, row, row_bytes) == 0) {
                    ++hits;
                    break;
                }
        }
    }
    return hits;
}

}  // namespace fkge::fed
