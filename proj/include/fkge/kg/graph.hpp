#pragma once
// Per-owner knowledge graph storage: interned entities/relations, triples
// with train/valid/test tags, alignment sets between graph pairs, and the
// 1-hop neighbor contexts used to build virtual additions.

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fkge::kg {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

enum class Split : std::uint8_t { Train = 0, Valid = 1, Test = 2 };

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    bool operator==(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t x = (std::uint64_t(t.head) << 32) | t.tail;
        x ^= std::uint64_t(t.relation) * 0x9E3779B97F4A7C15ull;
        x ^= x >> 33;
        x *= 0xFF51AFD7ED558CCDull;
        x ^= x >> 33;
        return static_cast<std::size_t>(x);
    }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    explicit KnowledgeGraph(std::string id) : id_(std::move(id)) {}

    const std::string& id() const { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }

    std::size_t entity_count() const { return entity_labels_.size(); }
    std::size_t relation_count() const { return relation_labels_.size(); }
    std::size_t triple_count() const { return triples_.size(); }

    EntityId intern_entity(const std::string& label);
    RelationId intern_relation(const std::string& label);
    std::optional<EntityId> find_entity(const std::string& label) const;
    std::optional<RelationId> find_relation(const std::string& label) const;

    const std::string& entity_label(EntityId id) const { return entity_labels_[id]; }
    const std::string& relation_label(RelationId id) const { return relation_labels_[id]; }

    // Returns false (and leaves the graph unchanged) when the triple already exists.
    bool add_triple(const Triple& t, Split split = Split::Train);
    bool contains(const Triple& t) const { return triple_set_.count(t) != 0; }

    const std::vector<Triple>& triples() const { return triples_; }
    const std::vector<Split>& splits() const { return splits_; }
    Split split_of(std::size_t idx) const { return splits_[idx]; }
    void set_split(std::size_t idx, Split s) { splits_[idx] = s; }

    std::vector<std::size_t> split_indices(Split s) const;
    std::size_t split_count(Split s) const;

    std::size_t duplicate_count() const { return duplicate_count_; }
    void note_duplicate() { ++duplicate_count_; }

    // --- virtual additions (session-scoped training scaffolding) ---
    // Virtual rows are always appended after the watermark and stripped by
    // truncation, so base ids never move.
    void mark_base();
    bool has_virtual() const;
    void strip_virtual();
    std::size_t base_entity_count() const { return base_entities_; }
    std::size_t base_relation_count() const { return base_relations_; }
    std::size_t base_triple_count() const { return base_triples_; }
    EntityId add_virtual_entity(const std::string& label);
    RelationId add_virtual_relation(const std::string& label);
    void add_virtual_triple(const Triple& t);

private:
    std::string id_;
    std::vector<std::string> entity_labels_;
    std::vector<std::string> relation_labels_;
    std::unordered_map<std::string, EntityId> entity_index_;
    std::unordered_map<std::string, RelationId> relation_index_;
    std::vector<Triple> triples_;
    std::vector<Split> splits_;
    TripleSet triple_set_;
    std::size_t duplicate_count_ = 0;
    std::size_t base_entities_ = 0;
    std::size_t base_relations_ = 0;
    std::size_t base_triples_ = 0;
    bool base_marked_ = false;
};

struct AlignmentSet {
    std::string graph_a;
    std::string graph_b;
    std::vector<std::pair<EntityId, EntityId>> entity_pairs;      // (a-local, b-local)
    std::vector<std::pair<RelationId, RelationId>> relation_pairs;

    std::size_t size() const { return entity_pairs.size() + relation_pairs.size(); }
    bool involves(const std::string& graph_id) const {
        return graph_a == graph_id || graph_b == graph_id;
    }
    // Pair ids as seen from `client_id`: first = client-local, second = host-local.
    AlignmentSet oriented(const std::string& client_id) const;
};

// Validates side-injectivity of every pairing; throws on violation.
void check_alignment_injective(const AlignmentSet& align);

struct NeighborEdge {
    EntityId neighbor;
    RelationId relation;
    bool center_is_head;  // center --r--> neighbor when true
};

struct NeighborContext {
    EntityId center;  // aligned entity, client-local id
    std::vector<NeighborEdge> edges;

    std::vector<EntityId> adjacent_entities() const;    // deduped, first-seen order
    std::vector<RelationId> joining_relations() const;  // deduped, first-seen order
};

// One context per aligned entity of the client side of `align`.
// Aligned entities themselves never appear as adjacent entities; callers may
// exclude further client-local ids (e.g. known-shared entities an ablation
// chose not to fuse this run).
std::vector<NeighborContext> extract_neighbor_context(
    const KnowledgeGraph& g, const AlignmentSet& align, const std::string& client_id,
    const std::unordered_set<EntityId>* extra_excluded = nullptr);

}  // namespace fkge::kg
