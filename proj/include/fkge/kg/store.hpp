#pragma once
// Dataset ingestion and preparation: TSV loaders, the FKG1 binary cache,
// split assignment, negative sampling, and the synthetic federation
// generator used by the benchmarks.

#include <filesystem>
#include <iosfwd>

#include "fkge/kg/graph.hpp"
#include "fkge/util/rng.hpp"

namespace fkge::kg {

enum class TripleFormat { Tsv };

struct SplitRatio {
    int train = 90;
    int valid = 5;
    int test = 5;
};

// One UTF-8 line per triple: head<TAB>relation<TAB>tail.
// Duplicate lines are dropped and counted on the graph.
KnowledgeGraph load_graph(const std::filesystem::path& path, TripleFormat format,
                          const std::string& graph_id = "");
KnowledgeGraph load_graph_stream(std::istream& in, TripleFormat format,
                                 const std::string& graph_id);
void save_graph_tsv(const KnowledgeGraph& g, const std::filesystem::path& path);

// Alignment file: header "#pair<TAB>graphA<TAB>graphB", then "#entities" /
// "#relations" section markers with labelA<TAB>labelB rows.
AlignmentSet load_alignment(const std::filesystem::path& path, const KnowledgeGraph& a,
                            const KnowledgeGraph& b);
void save_alignment(const AlignmentSet& align, const KnowledgeGraph& a,
                    const KnowledgeGraph& b, const std::filesystem::path& path);

// Binary cache, magic "FKG1". Round-trips ids, labels and splits exactly.
void save_graph_cache(const KnowledgeGraph& g, const std::filesystem::path& path);
KnowledgeGraph load_graph_cache(const std::filesystem::path& path);

// Deterministic split assignment. Every entity and relation that occurs in
// valid/test is guaranteed to occur in at least one train triple; offending
// triples are reassigned to train.
void split_triples(KnowledgeGraph& g, SplitRatio ratio, std::uint64_t seed);

// One corrupted triple per input positive: exactly one of head/tail replaced
// by a uniform entity, resampled until absent from the full triple set.
std::vector<Triple> sample_negatives(const KnowledgeGraph& g, const std::vector<Triple>& batch,
                                     util::Rng& rng, std::size_t max_retries = 200);

struct SynthGraphSpec {
    std::string id;
    std::size_t entities = 500;
    std::size_t relations = 8;
    std::size_t triples = 2000;
};

struct SynthOverlapSpec {
    std::size_t graph_a = 0;  // indices into SynthConfig::graphs
    std::size_t graph_b = 1;
    std::size_t entities = 50;
    std::size_t relations = 0;
};

struct SynthConfig {
    std::vector<SynthGraphSpec> graphs;
    std::vector<SynthOverlapSpec> overlaps;
    std::size_t type_count = 8;     // latent entity types driving edge structure
    double noise_fraction = 0.05;   // fraction of fully random triples
    double overlap_skew = 0.75;     // share of an overlap block's edges given to one side
    // When positive, overlap entities on their disfavored side keep at most
    // this many incident edges: the favored partner then holds knowledge the
    // poor side cannot recover locally.
    std::size_t poor_degree_cap = 0;
};

struct SynthFederation {
    std::vector<KnowledgeGraph> graphs;
    std::vector<AlignmentSet> alignments;
};

// Graphs share a latent typed world; overlapping entity blocks carry the same
// world identity on both sides, with the edge budget split asymmetrically so
// each owner knows something the other does not.
SynthFederation generate_synthetic_federation(const SynthConfig& spec, std::uint64_t seed);

struct DividedPairConfig {
    std::size_t world_entities = 1000;
    std::size_t world_relations = 8;
    std::size_t world_triples = 4000;
    std::size_t type_count = 8;
    double overlap_fraction = 0.5;  // shared middle slice of the entity range
    double edge_keep = 0.8;         // per-side independent edge subsampling
    std::size_t aligned_relations = 4;
    // The first `paired_relations` relations are within-type one-to-one
    // matchings: facts about specific partners that a side missing the edge
    // can only learn through federation.
    std::size_t paired_relations = 0;
};

// One world graph divided into two same-sized owners with a shared middle
// region; each side keeps an independent subsample of the shared edges, so
// both hold knowledge the other is missing while the underlying geometry is
// the same up to each side's training symmetry.
SynthFederation generate_divided_pair(const DividedPairConfig& spec, std::uint64_t seed);

}  // namespace fkge::kg
