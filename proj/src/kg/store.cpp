#include "fkge/kg/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fkge/util/binary_io.hpp"

namespace fkge::kg {

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    return in;
}

// Splits a line on tabs; trailing \r from CRLF files is stripped.
std::vector<std::string> split_tabs(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

}  // namespace

KnowledgeGraph load_graph_stream(std::istream& in, TripleFormat format,
                                 const std::string& graph_id) {
    if (format != TripleFormat::Tsv) throw std::invalid_argument("unsupported triple format");
    KnowledgeGraph g(graph_id);
    std::string line;
    std::size_t line_no = 0;
    std::size_t records = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
            throw std::runtime_error("malformed triple at line " + std::to_string(line_no) +
                                     " (expected head<TAB>relation<TAB>tail)");
        const EntityId h = g.intern_entity(fields[0]);
        const RelationId r = g.intern_relation(fields[1]);
        const EntityId t = g.intern_entity(fields[2]);
        if (!g.add_triple({h, r, t})) g.note_duplicate();
        ++records;
    }
    if (records == 0) throw std::runtime_error("empty triple file");
    return g;
}

KnowledgeGraph load_graph(const std::filesystem::path& path, TripleFormat format,
                          const std::string& graph_id) {
    auto in = open_or_throw(path);
    return load_graph_stream(in, format, graph_id.empty() ? path.stem().string() : graph_id);
}

void save_graph_tsv(const KnowledgeGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    for (const auto& t : g.triples())
        out << g.entity_label(t.head) << '\t' << g.relation_label(t.relation) << '\t'
            << g.entity_label(t.tail) << '\n';
}

AlignmentSet load_alignment(const std::filesystem::path& path, const KnowledgeGraph& a,
                            const KnowledgeGraph& b) {
    auto in = open_or_throw(path);
    AlignmentSet align;
    std::string line;
    std::size_t line_no = 0;
    enum class Section { Entities, Relations } section = Section::Entities;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_tabs(line);
        if (fields[0] == "#pair") {
            if (fields.size() != 3)
                throw std::runtime_error("bad #pair header at line " + std::to_string(line_no));
            align.graph_a = fields[1];
            align.graph_b = fields[2];
            if (align.graph_a != a.id() || align.graph_b != b.id())
                throw std::runtime_error("alignment header names pair (" + align.graph_a + ", " +
                                         align.graph_b + "), got graphs (" + a.id() + ", " +
                                         b.id() + ")");
            header_seen = true;
            continue;
        }
        if (fields[0] == "#entities") { section = Section::Entities; continue; }
        if (fields[0] == "#relations") { section = Section::Relations; continue; }
        if (!header_seen)
            throw std::runtime_error("alignment file must start with a #pair header");
        if (fields.size() != 2)
            throw std::runtime_error("malformed alignment pair at line " + std::to_string(line_no));
        if (section == Section::Entities) {
            auto ia = a.find_entity(fields[0]);
            auto ib = b.find_entity(fields[1]);
            if (!ia || !ib)
                throw std::runtime_error("alignment entity not present in graph at line " +
                                         std::to_string(line_no) + ": " + fields[0] + " / " + fields[1]);
            align.entity_pairs.emplace_back(*ia, *ib);
        } else {
            auto ia = a.find_relation(fields[0]);
            auto ib = b.find_relation(fields[1]);
            if (!ia || !ib)
                throw std::runtime_error("alignment relation not present in graph at line " +
                                         std::to_string(line_no) + ": " + fields[0] + " / " + fields[1]);
            align.relation_pairs.emplace_back(*ia, *ib);
        }
    }
    if (align.size() == 0) throw std::runtime_error("alignment file holds no pairs");
    check_alignment_injective(align);
    return align;
}

void save_alignment(const AlignmentSet& align, const KnowledgeGraph& a,
                    const KnowledgeGraph& b, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << "#pair\t" << align.graph_a << '\t' << align.graph_b << '\n';
    out << "#entities\n";
    for (auto [ia, ib] : align.entity_pairs)
        out << a.entity_label(ia) << '\t' << b.entity_label(ib) << '\n';
    if (!align.relation_pairs.empty()) {
        out << "#relations\n";
        for (auto [ia, ib] : align.relation_pairs)
            out << a.relation_label(ia) << '\t' << b.relation_label(ib) << '\n';
    }
}

void save_graph_cache(const KnowledgeGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out.write("FKG1", 4);
    util::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.entity_count()));
    util::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.relation_count()));
    util::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.triple_count()));
    util::write_string(out, g.id());
    for (std::size_t i = 0; i < g.entity_count(); ++i)
        util::write_string(out, g.entity_label(static_cast<EntityId>(i)));
    for (std::size_t i = 0; i < g.relation_count(); ++i)
        util::write_string(out, g.relation_label(static_cast<RelationId>(i)));
    for (std::size_t i = 0; i < g.triple_count(); ++i) {
        const auto& t = g.triples()[i];
        util::write_pod<std::uint32_t>(out, t.head);
        util::write_pod<std::uint32_t>(out, t.relation);
        util::write_pod<std::uint32_t>(out, t.tail);
        util::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(g.split_of(i)));
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

KnowledgeGraph load_graph_cache(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    util::expect_magic(in, "FKG1", "FKG1 graph cache");
    const auto n_ent = util::read_pod<std::uint32_t>(in, "entity count");
    const auto n_rel = util::read_pod<std::uint32_t>(in, "relation count");
    const auto n_tri = util::read_pod<std::uint32_t>(in, "triple count");
    KnowledgeGraph g(util::read_string(in, "graph id"));
    for (std::uint32_t i = 0; i < n_ent; ++i) g.intern_entity(util::read_string(in, "entity label"));
    for (std::uint32_t i = 0; i < n_rel; ++i) g.intern_relation(util::read_string(in, "relation label"));
    for (std::uint32_t i = 0; i < n_tri; ++i) {
        Triple t;
        t.head = util::read_pod<std::uint32_t>(in, "triple head");
        t.relation = util::read_pod<std::uint32_t>(in, "triple relation");
        t.tail = util::read_pod<std::uint32_t>(in, "triple tail");
        const auto s = util::read_pod<std::uint8_t>(in, "triple split");
        if (s > 2) throw std::runtime_error("corrupt split tag in cache file");
        if (!g.add_triple(t, static_cast<Split>(s)))
            throw std::runtime_error("duplicate triple in cache file");
    }
    return g;
}

void split_triples(KnowledgeGraph& g, SplitRatio ratio, std::uint64_t seed) {
    if (ratio.train <= 0 || ratio.valid <= 0 || ratio.test <= 0)
        throw std::invalid_argument("split ratio components must be positive");
    if (ratio.train + ratio.valid + ratio.test != 100)
        throw std::invalid_argument("split ratio must sum to 100");
    const std::size_t n = g.triple_count();
    std::size_t n_valid = n * static_cast<std::size_t>(ratio.valid) / 100;
    std::size_t n_test = n * static_cast<std::size_t>(ratio.test) / 100;
    if (n_valid == 0 || n_test == 0 || n_valid + n_test >= n)
        throw std::invalid_argument("graph too small to populate all three splits");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    util::Rng rng(seed);
    rng.shuffle(order);

    for (std::size_t i = 0; i < n; ++i) {
        Split s = Split::Train;
        if (i < n_valid) s = Split::Valid;
        else if (i < n_valid + n_test) s = Split::Test;
        g.set_split(order[i], s);
    }

    // Entities/relations that only occur outside train cannot be scored;
    // pull the offending eval triples back into train until stable.
    const std::size_t n_ent = g.entity_count();
    const std::size_t n_rel = g.relation_count();
    std::vector<std::uint32_t> ent_train(n_ent, 0), rel_train(n_rel, 0);
    auto recount = [&] {
        std::fill(ent_train.begin(), ent_train.end(), 0);
        std::fill(rel_train.begin(), rel_train.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (g.split_of(i) != Split::Train) continue;
            const auto& t = g.triples()[i];
            ++ent_train[t.head];
            ++ent_train[t.tail];
            ++rel_train[t.relation];
        }
    };
    recount();
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (g.split_of(i) == Split::Train) continue;
            const auto& t = g.triples()[i];
            if (ent_train[t.head] == 0 || ent_train[t.tail] == 0 || rel_train[t.relation] == 0) {
                g.set_split(i, Split::Train);
                ++ent_train[t.head];
                ++ent_train[t.tail];
                ++rel_train[t.relation];
                changed = true;
            }
        }
    }
    if (g.split_count(Split::Valid) == 0 || g.split_count(Split::Test) == 0)
        throw std::invalid_argument("graph too small: coverage reassignment emptied a split");
}

std::vector<Triple> sample_negatives(const KnowledgeGraph& g, const std::vector<Triple>& batch,
                                     util::Rng& rng, std::size_t max_retries) {
    const auto n_ent = static_cast<std::uint64_t>(g.entity_count());
    std::vector<Triple> out;
    out.reserve(batch.size());
    for (const auto& pos : batch) {
        Triple neg = pos;
        bool ok = false;
        for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
            neg = pos;
            const auto candidate = static_cast<EntityId>(rng.uniform_int(n_ent));
            if (rng.coin()) neg.head = candidate;
            else neg.tail = candidate;
            if (neg != pos && !g.contains(neg)) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw std::runtime_error(
                "negative sampling retry bound exceeded; graph too dense to corrupt triple");
        out.push_back(neg);
    }
    return out;
}

namespace {

struct WorldEntity {
    std::uint32_t type;
    std::string label;
};

}  // namespace

SynthFederation generate_divided_pair(const DividedPairConfig& spec, std::uint64_t seed) {
    if (spec.overlap_fraction <= 0.0 || spec.overlap_fraction >= 1.0)
        throw std::invalid_argument("overlap fraction must lie in (0,1)");
    if (spec.edge_keep <= 0.0 || spec.edge_keep > 1.0)
        throw std::invalid_argument("edge keep fraction must lie in (0,1]");
    const std::size_t types = std::max<std::size_t>(2, spec.type_count);
    util::Rng rng(seed);

    // World triples over typed entities.
    std::vector<std::vector<EntityId>> by_type(types);
    for (std::size_t e = 0; e < spec.world_entities; ++e)
        by_type[e % types].push_back(static_cast<EntityId>(e));
    struct Pattern {
        std::uint32_t src, dst;
    };
    std::vector<Pattern> patterns;
    for (std::size_t r = 0; r < spec.world_relations; ++r)
        patterns.push_back({static_cast<std::uint32_t>(rng.uniform_int(types)),
                            static_cast<std::uint32_t>(rng.uniform_int(types))});
    TripleSet world;
    std::vector<Triple> world_triples;
    // Pairing relations: a random within-type matching per relation. The fact
    // "h's partner is t" is per-entity knowledge, not type-level.
    const auto n_paired = std::min(spec.paired_relations, spec.world_relations);
    for (std::size_t r = 0; r < n_paired; ++r) {
        for (std::size_t ty = 0; ty < types; ++ty) {
            auto members = by_type[ty];
            rng.shuffle(members);
            for (std::size_t i = 0; i + 1 < members.size(); i += 2) {
                const Triple t{members[i], static_cast<RelationId>(r), members[i + 1]};
                if (world.insert(t).second) world_triples.push_back(t);
            }
        }
    }
    std::size_t guard = 0;
    while (world_triples.size() < spec.world_triples && guard++ < spec.world_triples * 50) {
        const auto r = static_cast<RelationId>(
            n_paired + rng.uniform_int(spec.world_relations - n_paired));
        const auto& heads = by_type[patterns[r].src];
        const auto& tails = by_type[patterns[r].dst];
        if (heads.empty() || tails.empty()) continue;
        const Triple t{heads[rng.uniform_int(heads.size())], r,
                       tails[rng.uniform_int(tails.size())]};
        if (t.head == t.tail) continue;
        if (world.insert(t).second) world_triples.push_back(t);
    }

    // Entity ranges: [0, hi_a) for side A, [lo_b, n) for side B.
    const auto n = spec.world_entities;
    const auto shared = static_cast<std::size_t>(spec.overlap_fraction * static_cast<double>(n));
    const auto exclusive = (n - shared) / 2;
    const auto hi_a = exclusive + shared;
    const auto lo_b = exclusive;

    SynthFederation out;
    out.graphs.emplace_back("twinA");
    out.graphs.emplace_back("twinB");
    AlignmentSet align;
    align.graph_a = "twinA";
    align.graph_b = "twinB";

    auto build_side = [&](KnowledgeGraph& g, std::size_t lo, std::size_t hi,
                          std::uint64_t side_tag) {
        for (std::size_t e = lo; e < hi; ++e) g.intern_entity("w" + std::to_string(e));
        for (std::size_t r = 0; r < spec.world_relations; ++r)
            g.intern_relation("r" + std::to_string(r));
        util::Rng keep_rng(util::derive_seed(seed, side_tag));
        for (const auto& t : world_triples) {
            if (t.head < lo || t.head >= hi || t.tail < lo || t.tail >= hi) continue;
            if (keep_rng.uniform() > spec.edge_keep) continue;  // independent gaps per side
            g.add_triple({static_cast<EntityId>(t.head - lo), t.relation,
                          static_cast<EntityId>(t.tail - lo)});
        }
    };
    build_side(out.graphs[0], 0, hi_a, 0x74776E41ull);
    build_side(out.graphs[1], lo_b, n, 0x74776E42ull);

    for (std::size_t e = lo_b; e < hi_a; ++e)
        align.entity_pairs.emplace_back(static_cast<EntityId>(e),
                                        static_cast<EntityId>(e - lo_b));
    for (std::size_t r = 0; r < std::min(spec.aligned_relations, spec.world_relations); ++r)
        align.relation_pairs.emplace_back(static_cast<RelationId>(r), static_cast<RelationId>(r));
    check_alignment_injective(align);
    out.alignments.push_back(std::move(align));
    return out;
}

SynthFederation generate_synthetic_federation(const SynthConfig& spec, std::uint64_t seed) {
    if (spec.graphs.empty()) throw std::invalid_argument("synthetic config lists no graphs");
    for (const auto& ov : spec.overlaps) {
        if (ov.graph_a >= spec.graphs.size() || ov.graph_b >= spec.graphs.size() ||
            ov.graph_a == ov.graph_b)
            throw std::invalid_argument("overlap references invalid graph indices");
        const std::size_t smaller =
            std::min(spec.graphs[ov.graph_a].entities, spec.graphs[ov.graph_b].entities);
        if (ov.entities > smaller)
            throw std::invalid_argument("overlap entity count exceeds smaller graph's entity count");
        const std::size_t fewer_rel =
            std::min(spec.graphs[ov.graph_a].relations, spec.graphs[ov.graph_b].relations);
        if (ov.relations > fewer_rel)
            throw std::invalid_argument("overlap relation count exceeds smaller graph's relation count");
    }
    // Total overlap budget per graph must fit.
    std::vector<std::size_t> overlap_total(spec.graphs.size(), 0);
    for (const auto& ov : spec.overlaps) {
        overlap_total[ov.graph_a] += ov.entities;
        overlap_total[ov.graph_b] += ov.entities;
    }
    for (std::size_t k = 0; k < spec.graphs.size(); ++k)
        if (overlap_total[k] > spec.graphs[k].entities)
            throw std::invalid_argument("combined overlaps exceed entity count of graph " +
                                        spec.graphs[k].id);

    util::Rng rng(seed);
    const std::size_t types = std::max<std::size_t>(2, spec.type_count);

    // World ids are globally unique; each overlap block is one contiguous
    // range shared verbatim by its two member graphs.
    std::uint64_t next_world = 0;
    auto world_entity = [&](std::uint64_t world_id) {
        return WorldEntity{static_cast<std::uint32_t>(world_id % types),
                           "w" + std::to_string(world_id)};
    };

    struct GraphBuild {
        KnowledgeGraph g;
        std::vector<std::uint64_t> world_of;            // local id -> world id
        std::vector<std::vector<EntityId>> by_type;     // type -> local ids
    };
    std::vector<GraphBuild> builds(spec.graphs.size());
    for (std::size_t k = 0; k < spec.graphs.size(); ++k) {
        builds[k].g = KnowledgeGraph(spec.graphs[k].id);
        builds[k].by_type.resize(types);
    }

    auto add_entity = [&](std::size_t k, std::uint64_t world_id) {
        auto we = world_entity(world_id);
        const EntityId local = builds[k].g.intern_entity(we.label);
        if (local == builds[k].world_of.size()) {
            builds[k].world_of.push_back(world_id);
            builds[k].by_type[we.type].push_back(local);
        }
        return local;
    };

    // Overlap blocks first so alignments are well defined.
    struct Block {
        std::size_t a, b;
        std::vector<std::uint64_t> world_ids;
        std::vector<RelationId> shared_relations_a, shared_relations_b;
    };
    std::vector<Block> blocks;
    for (const auto& ov : spec.overlaps) {
        Block blk;
        blk.a = ov.graph_a;
        blk.b = ov.graph_b;
        for (std::size_t i = 0; i < ov.entities; ++i) {
            const std::uint64_t wid = next_world++;
            blk.world_ids.push_back(wid);
            add_entity(ov.graph_a, wid);
            add_entity(ov.graph_b, wid);
        }
        blocks.push_back(std::move(blk));
    }
    // Private entities fill each graph to its configured size.
    for (std::size_t k = 0; k < spec.graphs.size(); ++k)
        while (builds[k].g.entity_count() < spec.graphs[k].entities) add_entity(k, next_world++);

    // Relations: typed patterns (source type, target type). Overlapping
    // relations share the same world pattern and label on both graphs.
    struct RelationPattern {
        std::uint32_t src_type, dst_type;
    };
    std::vector<std::vector<RelationPattern>> rel_patterns(spec.graphs.size());
    std::uint64_t next_world_rel = 0;
    auto add_relation = [&](std::size_t k, std::uint64_t world_rel) {
        const RelationId local = builds[k].g.intern_relation("r" + std::to_string(world_rel));
        if (local == rel_patterns[k].size()) {
            util::Rng pat(util::derive_seed(seed, 0x72656Cull, world_rel));
            rel_patterns[k].push_back({static_cast<std::uint32_t>(pat.uniform_int(types)),
                                       static_cast<std::uint32_t>(pat.uniform_int(types))});
        }
        return local;
    };
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const auto& ov = spec.overlaps[bi];
        for (std::size_t i = 0; i < ov.relations; ++i) {
            const std::uint64_t wr = next_world_rel++;
            blocks[bi].shared_relations_a.push_back(add_relation(ov.graph_a, wr));
            blocks[bi].shared_relations_b.push_back(add_relation(ov.graph_b, wr));
        }
    }
    for (std::size_t k = 0; k < spec.graphs.size(); ++k)
        while (builds[k].g.relation_count() < spec.graphs[k].relations)
            add_relation(k, next_world_rel++);

    // Edges. Overlap entities get a deliberately skewed edge budget so the
    // pair members hold complementary knowledge about the shared region: the
    // disfavored side may be capped to a few incident edges per entity.
    std::vector<std::unordered_map<EntityId, std::size_t>> poor_degree(spec.graphs.size());
    if (spec.poor_degree_cap > 0) {
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const auto& blk = blocks[bi];
            for (std::size_t i = 0; i < blk.world_ids.size(); ++i) {
                const bool favor_a = (i % 2 == 0);
                const std::size_t poor_side = favor_a ? blk.b : blk.a;
                const auto label = world_entity(blk.world_ids[i]).label;
                if (const auto local = builds[poor_side].g.find_entity(label))
                    poor_degree[poor_side].emplace(*local, 0);
            }
        }
    }
    for (std::size_t k = 0; k < spec.graphs.size(); ++k) {
        auto& b = builds[k];
        const auto& gs = spec.graphs[k];
        util::Rng grng(util::derive_seed(seed, 0x67726170ull, k));
        auto capped = [&](EntityId e) {
            const auto it = poor_degree[k].find(e);
            return it != poor_degree[k].end() && it->second >= spec.poor_degree_cap;
        };
        auto bump = [&](EntityId e) {
            const auto it = poor_degree[k].find(e);
            if (it != poor_degree[k].end()) ++it->second;
        };
        std::size_t made = 0;
        std::size_t guard = 0;
        const std::size_t guard_max = gs.triples * 50;
        while (made < gs.triples && guard++ < guard_max) {
            const auto r = static_cast<RelationId>(grng.uniform_int(b.g.relation_count()));
            const auto& pat = rel_patterns[k][r];
            const auto& heads = b.by_type[pat.src_type];
            const auto& tails = b.by_type[pat.dst_type];
            if (heads.empty() || tails.empty()) continue;
            EntityId h = heads[grng.uniform_int(heads.size())];
            EntityId t = tails[grng.uniform_int(tails.size())];
            if (grng.uniform() < spec.noise_fraction) {
                h = static_cast<EntityId>(grng.uniform_int(b.g.entity_count()));
                t = static_cast<EntityId>(grng.uniform_int(b.g.entity_count()));
            }
            if (h == t) continue;
            if (spec.poor_degree_cap > 0 && (capped(h) || capped(t))) continue;
            if (b.g.add_triple({h, r, t})) {
                ++made;
                bump(h);
                bump(t);
            }
        }
        if (made < gs.triples / 2)
            throw std::runtime_error("synthetic generator could not place enough distinct triples for " +
                                     gs.id);
    }

    // Skew: move a share of each overlap entity's incident edges to one side.
    // Implemented by adding extra block-local edges on the favored side.
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        auto& blk = blocks[bi];
        util::Rng brng(util::derive_seed(seed, 0x626C6Bull, bi));
        for (std::size_t i = 0; i < blk.world_ids.size(); ++i) {
            const bool favor_a = (i % 2 == 0);
            const std::size_t k = favor_a ? blk.a : blk.b;
            auto& b = builds[k];
            const auto local = b.g.find_entity(world_entity(blk.world_ids[i]).label);
            if (!local) continue;
            const std::size_t extra =
                static_cast<std::size_t>(spec.overlap_skew * 4.0);
            for (std::size_t e = 0; e < extra; ++e) {
                const auto r = static_cast<RelationId>(brng.uniform_int(b.g.relation_count()));
                const auto& pat = rel_patterns[k][r];
                const auto& tails = b.by_type[pat.dst_type];
                if (tails.empty()) continue;
                const EntityId t = tails[brng.uniform_int(tails.size())];
                if (t != *local) b.g.add_triple({*local, r, t});
            }
        }
    }

    SynthFederation out;
    for (auto& b : builds) out.graphs.push_back(std::move(b.g));
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const auto& blk = blocks[bi];
        AlignmentSet align;
        align.graph_a = out.graphs[blk.a].id();
        align.graph_b = out.graphs[blk.b].id();
        for (const auto wid : blk.world_ids) {
            const auto label = world_entity(wid).label;
            align.entity_pairs.emplace_back(*out.graphs[blk.a].find_entity(label),
                                            *out.graphs[blk.b].find_entity(label));
        }
        for (std::size_t i = 0; i < blk.shared_relations_a.size(); ++i)
            align.relation_pairs.emplace_back(blk.shared_relations_a[i], blk.shared_relations_b[i]);
        check_alignment_injective(align);
        out.alignments.push_back(std::move(align));
    }
    return out;
}

}  // namespace fkge::kg
