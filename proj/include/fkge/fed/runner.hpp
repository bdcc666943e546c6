#pragma once
// Assembles a federation run: applies alignment ablations, trains baselines
// (optionally on a thread pool), runs the bus to quiescence, and offers the
// trace-level privacy checks.

#include <memory>

#include "fkge/fed/actor.hpp"

namespace fkge::fed {

struct FederationSetup {
    std::vector<kg::KnowledgeGraph> graphs;     // split already assigned
    std::vector<kg::AlignmentSet> alignments;   // pre-ablation
    ActorConfig actor_defaults;
    std::vector<kge::ModelKind> models;         // per graph; empty = config model
    SchedulerPolicy policy = SchedulerPolicy::Fifo;
    std::uint64_t scheduler_seed = 0;
    std::vector<std::pair<std::string, std::string>> pair_script;
    double sample_aligned_ratio = 1.0;          // entity-pair subsampling
    bool entities_only = false;
    bool relations_only = false;
    std::uint64_t ablation_seed = 0;
    int threads = 1;                            // baseline-training parallelism
};

// Ratio-sampled alignment plus the known-shared entities that were NOT
// sampled this run: those stay out of neighbor contexts (they are still
// covered by the alignment, just not fused).
struct EffectiveAlignment {
    kg::AlignmentSet align;
    std::unordered_set<kg::EntityId> excluded_a;
    std::unordered_set<kg::EntityId> excluded_b;
};

struct FederationResult {
    std::vector<std::unique_ptr<OwnerActor>> actors;
    std::unique_ptr<SimBus> bus;
    std::vector<EffectiveAlignment> effective_alignments;
    RawRowRegistry raw_registry;
    std::uint64_t delivered_messages = 0;

    OwnerActor& actor(const std::string& id);
    double max_epsilon() const;
};

// Entity pairs subsampled at `ratio`; flags reduce the set to entities or
// relations only. Alignments that end up empty are dropped.
std::vector<EffectiveAlignment> apply_alignment_ablation(std::vector<kg::AlignmentSet> alignments,
                                                         double ratio, bool entities_only,
                                                         bool relations_only, std::uint64_t seed);

FederationResult run_federation(FederationSetup setup);

// Scans serialized traffic for any raw client row (bitwise match against the
// tables registered at session starts). Returns the number of hits.
std::size_t scan_trace_for_raw_rows(const std::vector<TraceEntry>& trace,
                                    const std::vector<std::vector<std::uint8_t>>& payloads,
                                    const RawRowRegistry& registry, int dim);

}  // namespace fkge::fed
