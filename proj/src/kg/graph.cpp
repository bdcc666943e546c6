#include "fkge/kg/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace fkge::kg {

EntityId KnowledgeGraph::intern_entity(const std::string& label) {
    auto it = entity_index_.find(label);
    if (it != entity_index_.end()) return it->second;
    const auto id = static_cast<EntityId>(entity_labels_.size());
    entity_labels_.push_back(label);
    entity_index_.emplace(label, id);
    return id;
}

RelationId KnowledgeGraph::intern_relation(const std::string& label) {
    auto it = relation_index_.find(label);
    if (it != relation_index_.end()) return it->second;
    const auto id = static_cast<RelationId>(relation_labels_.size());
    relation_labels_.push_back(label);
    relation_index_.emplace(label, id);
    return id;
}

std::optional<EntityId> KnowledgeGraph::find_entity(const std::string& label) const {
    auto it = entity_index_.find(label);
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(const std::string& label) const {
    auto it = relation_index_.find(label);
    if (it == relation_index_.end()) return std::nullopt;
    return it->second;
}

bool KnowledgeGraph::add_triple(const Triple& t, Split split) {
    if (t.head >= entity_count() || t.tail >= entity_count() || t.relation >= relation_count())
        throw std::out_of_range("triple references unknown entity or relation id");
    if (!triple_set_.insert(t).second) return false;
    triples_.push_back(t);
    splits_.push_back(split);
    return true;
}

std::vector<std::size_t> KnowledgeGraph::split_indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < triples_.size(); ++i)
        if (splits_[i] == s) out.push_back(i);
    return out;
}

std::size_t KnowledgeGraph::split_count(Split s) const {
    return static_cast<std::size_t>(std::count(splits_.begin(), splits_.end(), s));
}

void KnowledgeGraph::mark_base() {
    base_entities_ = entity_labels_.size();
    base_relations_ = relation_labels_.size();
    base_triples_ = triples_.size();
    base_marked_ = true;
}

bool KnowledgeGraph::has_virtual() const {
    return base_marked_ && (entity_labels_.size() > base_entities_ ||
                            relation_labels_.size() > base_relations_ ||
                            triples_.size() > base_triples_);
}

void KnowledgeGraph::strip_virtual() {
    if (!base_marked_) return;
    for (std::size_t i = base_triples_; i < triples_.size(); ++i) triple_set_.erase(triples_[i]);
    triples_.resize(base_triples_);
    splits_.resize(base_triples_);
    for (std::size_t i = base_entities_; i < entity_labels_.size(); ++i)
        entity_index_.erase(entity_labels_[i]);
    entity_labels_.resize(base_entities_);
    for (std::size_t i = base_relations_; i < relation_labels_.size(); ++i)
        relation_index_.erase(relation_labels_[i]);
    relation_labels_.resize(base_relations_);
}

EntityId KnowledgeGraph::add_virtual_entity(const std::string& label) {
    if (!base_marked_) throw std::logic_error("mark_base() before adding virtual rows");
    if (entity_index_.count(label)) throw std::invalid_argument("virtual entity label collision: " + label);
    return intern_entity(label);
}

RelationId KnowledgeGraph::add_virtual_relation(const std::string& label) {
    if (!base_marked_) throw std::logic_error("mark_base() before adding virtual rows");
    if (relation_index_.count(label)) throw std::invalid_argument("virtual relation label collision: " + label);
    return intern_relation(label);
}

void KnowledgeGraph::add_virtual_triple(const Triple& t) {
    if (!base_marked_) throw std::logic_error("mark_base() before adding virtual rows");
    add_triple(t, Split::Train);
}

AlignmentSet AlignmentSet::oriented(const std::string& client_id) const {
    if (client_id == graph_a) return *this;
    if (client_id != graph_b)
        throw std::invalid_argument("graph " + client_id + " is not part of this alignment");
    AlignmentSet flipped;
    flipped.graph_a = graph_b;
    flipped.graph_b = graph_a;
    flipped.entity_pairs.reserve(entity_pairs.size());
    for (auto [a, b] : entity_pairs) flipped.entity_pairs.emplace_back(b, a);
    flipped.relation_pairs.reserve(relation_pairs.size());
    for (auto [a, b] : relation_pairs) flipped.relation_pairs.emplace_back(b, a);
    return flipped;
}

namespace {
template <typename Pairs>
void check_injective_side(const Pairs& pairs, const char* what) {
    std::unordered_set<std::uint64_t> left, right;
    for (const auto& [a, b] : pairs) {
        if (!left.insert(a).second)
            throw std::invalid_argument(std::string(what) + " alignment repeats left-side id " + std::to_string(a));
        if (!right.insert(b).second)
            throw std::invalid_argument(std::string(what) + " alignment repeats right-side id " + std::to_string(b));
    }
}
}  // namespace

void check_alignment_injective(const AlignmentSet& align) {
    check_injective_side(align.entity_pairs, "entity");
    check_injective_side(align.relation_pairs, "relation");
}

std::vector<EntityId> NeighborContext::adjacent_entities() const {
    std::vector<EntityId> out;
    std::unordered_set<EntityId> seen;
    for (const auto& e : edges)
        if (seen.insert(e.neighbor).second) out.push_back(e.neighbor);
    return out;
}

std::vector<RelationId> NeighborContext::joining_relations() const {
    std::vector<RelationId> out;
    std::unordered_set<RelationId> seen;
    for (const auto& e : edges)
        if (seen.insert(e.relation).second) out.push_back(e.relation);
    return out;
}

std::vector<NeighborContext> extract_neighbor_context(
    const KnowledgeGraph& g, const AlignmentSet& align, const std::string& client_id,
    const std::unordered_set<EntityId>* extra_excluded) {
    const AlignmentSet view = align.oriented(client_id);
    std::unordered_set<EntityId> aligned;
    for (auto [local, _] : view.entity_pairs) aligned.insert(local);
    if (extra_excluded) aligned.insert(extra_excluded->begin(), extra_excluded->end());

    std::vector<NeighborContext> contexts;
    contexts.reserve(view.entity_pairs.size());
    std::unordered_map<EntityId, std::size_t> slot;
    for (auto [local, _] : view.entity_pairs) {
        slot.emplace(local, contexts.size());
        contexts.push_back(NeighborContext{local, {}});
    }

    for (const auto& t : g.triples()) {
        auto hit = slot.find(t.head);
        if (hit != slot.end() && !aligned.count(t.tail) && t.tail != t.head)
            contexts[hit->second].edges.push_back({t.tail, t.relation, true});
        auto tit = slot.find(t.tail);
        if (tit != slot.end() && !aligned.count(t.head) && t.head != t.tail)
            contexts[tit->second].edges.push_back({t.head, t.relation, false});
    }
    return contexts;
}

}  // namespace fkge::kg
