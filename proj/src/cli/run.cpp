#include "fkge/cli/run.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace fkge::cli {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<kge::ModelKind> resolve_models(const RunConfig& cfg, std::size_t n_graphs) {
    std::vector<kge::ModelKind> models;
    util::Rng rng(util::derive_seed(cfg.seeds.train, 0x6D6F64656Cull));
    const auto pick_random = [&] {
        return static_cast<kge::ModelKind>(rng.uniform_int(4));
    };
    if (cfg.models.size() == 1) {
        for (std::size_t i = 0; i < n_graphs; ++i)
            models.push_back(cfg.models[0] == "random" ? pick_random()
                                                       : kge::model_from_name(cfg.models[0]));
    } else {
        if (cfg.models.size() != n_graphs)
            throw std::invalid_argument("per-graph model list must match the number of graphs");
        for (const auto& name : cfg.models)
            models.push_back(name == "random" ? pick_random() : kge::model_from_name(name));
    }
    return models;
}

struct LoadedData {
    std::vector<kg::KnowledgeGraph> graphs;
    std::vector<kg::AlignmentSet> alignments;
};

LoadedData load_inputs(const RunConfig& cfg) {
    LoadedData data;
    if (cfg.synthetic) {
        auto fed = kg::generate_synthetic_federation(*cfg.synthetic,
                                                     util::derive_seed(cfg.seeds.data, 0x73796Eull));
        data.graphs = std::move(fed.graphs);
        data.alignments = std::move(fed.alignments);
    } else {
        for (const auto& src : cfg.graph_files)
            data.graphs.push_back(kg::load_graph(src.path, kg::TripleFormat::Tsv, src.id));
        auto find_graph = [&](const std::string& id) -> const kg::KnowledgeGraph* {
            for (const auto& g : data.graphs)
                if (g.id() == id) return &g;
            return nullptr;
        };
        for (const auto& path : cfg.alignment_files) {
            // The #pair header names the two graphs; peek it first.
            std::ifstream in(path);
            if (!in) throw std::invalid_argument("cannot open alignment file: " + path.string());
            std::string header;
            std::getline(in, header);
            const auto t1 = header.find('\t');
            const auto t2 = header.find('\t', t1 + 1);
            if (header.rfind("#pair", 0) != 0 || t1 == std::string::npos || t2 == std::string::npos)
                throw std::invalid_argument("alignment file must start with '#pair\\tA\\tB': " +
                                            path.string());
            std::string ida = header.substr(t1 + 1, t2 - t1 - 1);
            std::string idb = header.substr(t2 + 1);
            if (!idb.empty() && idb.back() == '\r') idb.pop_back();
            const auto* ga = find_graph(ida);
            const auto* gb = find_graph(idb);
            if (!ga || !gb)
                throw std::invalid_argument("alignment references unknown graphs: " + ida + ", " +
                                            idb);
            data.alignments.push_back(kg::load_alignment(path, *ga, *gb));
        }
    }
    for (auto& graph : data.graphs)
        kg::split_triples(graph, cfg.split_ratio,
                          util::derive_seed(cfg.seeds.data, 0x73706C6974ull,
                                            util::fnv1a(graph.id())));
    return data;
}

fed::ActorConfig actor_defaults(const RunConfig& cfg) {
    fed::ActorConfig a;
    a.train = cfg.train;
    a.train.dim = cfg.dim;
    a.initial_epochs = cfg.initial_epochs;
    a.round_budget = cfg.round_budget;
    a.self_train_when_idle = cfg.self_train_when_idle;
    a.federate = cfg.mode == RunMode::Fkge;
    a.fkge_simple = cfg.fkge_simple;
    a.lambda = cfg.lambda;
    a.delta = cfg.delta;
    a.max_moment = cfg.max_moment;
    a.ppat = cfg.ppat;
    a.train_seed = cfg.seeds.train;
    a.eval_seed = util::derive_seed(cfg.seeds.train, 0x6576616Cull);
    a.session_seed = cfg.seeds.noise;
    a.eval_norm_order = cfg.eval_norm_order;
    return a;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::unique_ptr<fed::OwnerActor>>& actors) {
    std::ofstream out(path, std::ios::binary);
    out << "time,graph,round,event,peer,score,best_score,improved,virtual_triples,epsilon_hat\n";
    for (const auto& actor : actors) {
        const auto& hist = actor->history();
        for (std::size_t i = 0; i < hist.size(); ++i) {
            const auto& r = hist[i];
            out << r.logical_time << ',' << actor->actor_id() << ',' << i << ',' << r.event << ','
                << r.peer << ',' << fmt_double(r.score) << ',' << fmt_double(r.best_score) << ','
                << (r.improved ? 1 : 0) << ',' << r.virtual_triples << ','
                << (r.epsilon_hat < 0 ? "" : fmt_double(r.epsilon_hat)) << '\n';
        }
    }
}

void write_trace_jsonl(const std::filesystem::path& path, const fed::SimBus& bus) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& e : bus.trace()) {
        out << "{\"seq\":" << e.seq << ",\"kind\":\"" << fed::message_kind_name(e.kind)
            << "\",\"from\":\"" << e.from << "\",\"to\":\"" << e.to << "\",\"digest\":\""
            << hex64(e.digest) << "\",\"size\":" << e.payload_size << "}\n";
    }
}

GraphFinal final_for(const kg::KnowledgeGraph& g, const kge::EmbeddingTable& best,
                     const RunConfig& cfg, std::uint64_t eval_seed, int rounds_used,
                     double best_score) {
    GraphFinal f;
    f.id = g.id();
    eval::EvalConfig ecfg;
    ecfg.norm_order = cfg.eval_norm_order;
    ecfg.type_constraint = cfg.type_constraint;
    ecfg.filter_train = cfg.filter_train;
    f.valid_accuracy = eval::triple_classification(g, best, kg::Split::Valid, eval_seed, ecfg);
    f.test_accuracy = eval::triple_classification(g, best, kg::Split::Test, eval_seed, ecfg);
    const auto link = eval::link_prediction(g, best, kg::Split::Test, ecfg);
    f.hit1 = link.hit1;
    f.hit3 = link.hit3;
    f.hit10 = link.hit10;
    f.mean_rank = link.mean_rank;
    f.best_score = best_score;
    f.rounds_used = rounds_used;
    return f;
}

void write_summary(const std::filesystem::path& dir, const RunConfig& cfg,
                   const RunOutputs& outputs) {
    nlohmann::json j;
    j["mode"] = mode_name(cfg.mode);
    j["max_epsilon"] = outputs.max_epsilon;
    j["sample_aligned_ratio"] = cfg.sample_aligned_ratio;
    j["fkge_simple"] = cfg.fkge_simple;
    auto& graphs = j["graphs"];
    for (const auto& f : outputs.finals) {
        nlohmann::json gj;
        gj["id"] = f.id;
        gj["valid_accuracy"] = f.valid_accuracy;
        gj["test_accuracy"] = f.test_accuracy;
        gj["hit1"] = f.hit1;
        gj["hit3"] = f.hit3;
        gj["hit10"] = f.hit10;
        gj["mean_rank"] = f.mean_rank;
        gj["best_score"] = f.best_score;
        gj["rounds_used"] = f.rounds_used;
        graphs.push_back(gj);
    }
    std::ofstream out(dir / "summary.json", std::ios::binary);
    out << j.dump(2) << '\n';
}

RunOutputs execute_unified(const RunConfig& cfg, LoadedData data);

}  // namespace

int effective_threads(const RunConfig& cfg) {
    int threads = cfg.threads;
    if (const char* env = std::getenv("FKGE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) threads = std::min(threads, cap);
    }
    return std::max(1, threads);
}

PreparedRun prepare(const RunConfig& cfg) {
    auto data = load_inputs(cfg);
    PreparedRun prepared;
    prepared.setup.models = resolve_models(cfg, data.graphs.size());
    prepared.setup.graphs = std::move(data.graphs);
    prepared.setup.alignments = std::move(data.alignments);
    prepared.setup.actor_defaults = actor_defaults(cfg);
    prepared.setup.policy = cfg.scheduler;
    prepared.setup.scheduler_seed = cfg.seeds.scheduler;
    prepared.setup.pair_script = cfg.pair_script;
    prepared.setup.sample_aligned_ratio = cfg.sample_aligned_ratio;
    prepared.setup.entities_only = cfg.entities_only;
    prepared.setup.relations_only = cfg.relations_only;
    prepared.setup.ablation_seed = util::derive_seed(cfg.seeds.data, 0x726174696Full);
    prepared.setup.threads = effective_threads(cfg);
    return prepared;
}

RunOutputs execute(const RunConfig& cfg) {
    if (cfg.mode == RunMode::Unified) return execute_unified(cfg, load_inputs(cfg));

    auto prepared = prepare(cfg);
    // Keep graph copies for final evaluation (actors own the originals).
    std::vector<kg::KnowledgeGraph> graphs_copy = prepared.setup.graphs;
    auto result = fed::run_federation(std::move(prepared.setup));

    std::filesystem::create_directories(cfg.output_dir);
    std::filesystem::create_directories(cfg.output_dir / "ledgers");
    std::filesystem::create_directories(cfg.output_dir / "checkpoints");

    RunOutputs outputs;
    outputs.dir = cfg.output_dir;
    outputs.delivered_messages = result.delivered_messages;
    outputs.max_epsilon = result.max_epsilon();

    const auto eval_seed = util::derive_seed(cfg.seeds.train, 0x66696E616Cull);
    for (auto& actor : result.actors) {
        outputs.finals.push_back(final_for(actor->graph(), actor->best_table(), cfg, eval_seed,
                                           actor->rounds_used(), actor->best_score()));
        kge::save_embeddings_file(actor->best_table(),
                                  cfg.output_dir / "checkpoints" / (actor->actor_id() + ".fke1"));
        kg::save_graph_cache(actor->graph(),
                             cfg.output_dir / "checkpoints" / (actor->actor_id() + ".fkg1"));
        for (std::size_t k = 0; k < actor->session_ledgers().size(); ++k) {
            std::ofstream lout(cfg.output_dir / "ledgers" /
                                   (actor->actor_id() + "_session" + std::to_string(k) + ".json"),
                               std::ios::binary);
            lout << actor->session_ledgers()[k] << '\n';
        }
    }

    write_metrics_csv(cfg.output_dir / "metrics.csv", result.actors);
    write_trace_jsonl(cfg.output_dir / "trace.jsonl", *result.bus);
    write_summary(cfg.output_dir, cfg, outputs);
    return outputs;
}

namespace {

// Unified baseline: all graphs merged on aligned ids into one graph, trained
// once, evaluated per original graph through split views.
RunOutputs execute_unified(const RunConfig& cfg, LoadedData data) {
    const auto n_graphs = data.graphs.size();

    // Union-find over (graph, local id) nodes for entities and relations.
    struct UnionFind {
        std::vector<std::size_t> parent;
        std::size_t find(std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        }
        void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
    };
    std::vector<std::size_t> ent_offset(n_graphs, 0), rel_offset(n_graphs, 0);
    std::size_t total_ents = 0, total_rels = 0;
    for (std::size_t gi = 0; gi < n_graphs; ++gi) {
        ent_offset[gi] = total_ents;
        rel_offset[gi] = total_rels;
        total_ents += data.graphs[gi].entity_count();
        total_rels += data.graphs[gi].relation_count();
    }
    UnionFind ents, rels;
    ents.parent.resize(total_ents);
    rels.parent.resize(total_rels);
    for (std::size_t i = 0; i < total_ents; ++i) ents.parent[i] = i;
    for (std::size_t i = 0; i < total_rels; ++i) rels.parent[i] = i;

    auto graph_index = [&](const std::string& id) {
        for (std::size_t gi = 0; gi < n_graphs; ++gi)
            if (data.graphs[gi].id() == id) return gi;
        throw std::invalid_argument("alignment references unknown graph " + id);
    };
    for (const auto& align : data.alignments) {
        const auto a = graph_index(align.graph_a);
        const auto b = graph_index(align.graph_b);
        for (const auto& [ea, eb] : align.entity_pairs)
            ents.unite(ent_offset[a] + ea, ent_offset[b] + eb);
        for (const auto& [ra, rb] : align.relation_pairs)
            rels.unite(rel_offset[a] + ra, rel_offset[b] + rb);
    }

    kg::KnowledgeGraph merged("unified");
    std::vector<kg::EntityId> ent_map(total_ents);
    std::vector<kg::RelationId> rel_map(total_rels);
    std::map<std::size_t, kg::EntityId> ent_canon;
    std::map<std::size_t, kg::RelationId> rel_canon;
    for (std::size_t gi = 0; gi < n_graphs; ++gi) {
        const auto& g = data.graphs[gi];
        for (std::size_t e = 0; e < g.entity_count(); ++e) {
            const auto root = ents.find(ent_offset[gi] + e);
            auto it = ent_canon.find(root);
            if (it == ent_canon.end()) {
                const auto id = merged.intern_entity(g.id() + "::" +
                                                     g.entity_label(static_cast<kg::EntityId>(e)));
                it = ent_canon.emplace(root, id).first;
            }
            ent_map[ent_offset[gi] + e] = it->second;
        }
        for (std::size_t r = 0; r < g.relation_count(); ++r) {
            const auto root = rels.find(rel_offset[gi] + r);
            auto it = rel_canon.find(root);
            if (it == rel_canon.end()) {
                const auto id = merged.intern_relation(
                    g.id() + "::" + g.relation_label(static_cast<kg::RelationId>(r)));
                it = rel_canon.emplace(root, id).first;
            }
            rel_map[rel_offset[gi] + r] = it->second;
        }
    }
    struct OriginTriple {
        std::size_t graph;
        kg::Triple merged_triple;
        kg::Split split;
    };
    std::vector<OriginTriple> origins;
    for (std::size_t gi = 0; gi < n_graphs; ++gi) {
        const auto& g = data.graphs[gi];
        for (std::size_t ti = 0; ti < g.triple_count(); ++ti) {
            const auto& t = g.triples()[ti];
            const kg::Triple mt{ent_map[ent_offset[gi] + t.head],
                                rel_map[rel_offset[gi] + t.relation],
                                ent_map[ent_offset[gi] + t.tail]};
            if (merged.add_triple(mt, g.split_of(ti)))
                origins.push_back({gi, mt, g.split_of(ti)});
        }
    }

    // One actor, no federation: iterative training with backtrack.
    fed::FederationSetup setup;
    setup.actor_defaults = actor_defaults(cfg);
    setup.actor_defaults.federate = false;
    setup.models = {resolve_models(cfg, 1)[0]};
    setup.graphs.push_back(std::move(merged));
    setup.scheduler_seed = cfg.seeds.scheduler;
    setup.threads = 1;
    auto result = fed::run_federation(std::move(setup));
    auto& actor = *result.actors.front();

    std::filesystem::create_directories(cfg.output_dir);
    std::filesystem::create_directories(cfg.output_dir / "checkpoints");

    RunOutputs outputs;
    outputs.dir = cfg.output_dir;
    outputs.delivered_messages = 0;
    outputs.max_epsilon = -1.0;

    std::unordered_map<kg::Triple, std::size_t, kg::TripleHash> triple_index;
    for (std::size_t ti = 0; ti < actor.graph().triple_count(); ++ti)
        triple_index.emplace(actor.graph().triples()[ti], ti);

    const auto eval_seed = util::derive_seed(cfg.seeds.train, 0x66696E616Cull);
    for (std::size_t gi = 0; gi < n_graphs; ++gi) {
        // View: all merged triples, but only this origin's keep eval splits.
        kg::KnowledgeGraph view = actor.graph();
        view.set_id(data.graphs[gi].id());
        for (std::size_t ti = 0; ti < view.triple_count(); ++ti) view.set_split(ti, kg::Split::Train);
        for (const auto& ot : origins) {
            if (ot.graph != gi || ot.split == kg::Split::Train) continue;
            const auto it = triple_index.find(ot.merged_triple);
            if (it != triple_index.end()) view.set_split(it->second, ot.split);
        }
        if (view.split_count(kg::Split::Valid) == 0 || view.split_count(kg::Split::Test) == 0)
            continue;  // origin fully shadowed by duplicates
        outputs.finals.push_back(final_for(view, actor.best_table(), cfg, eval_seed,
                                           actor.rounds_used(), actor.best_score()));
    }

    kge::save_embeddings_file(actor.best_table(), cfg.output_dir / "checkpoints" / "unified.fke1");
    kg::save_graph_cache(actor.graph(), cfg.output_dir / "checkpoints" / "unified.fkg1");
    write_metrics_csv(cfg.output_dir / "metrics.csv", result.actors);
    write_summary(cfg.output_dir, cfg, outputs);
    return outputs;
}

}  // namespace

}  // namespace fkge::cli
