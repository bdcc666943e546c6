#include "fkge/cli/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fkge::cli {

using nlohmann::json;

RunMode mode_from_name(const std::string& name) {
    if (name == "baseline") return RunMode::Baseline;
    if (name == "fkge") return RunMode::Fkge;
    if (name == "unified") return RunMode::Unified;
    throw std::invalid_argument("mode must be one of baseline|fkge|unified, got: " + name);
}

const char* mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::Baseline: return "baseline";
        case RunMode::Fkge: return "fkge";
        case RunMode::Unified: return "unified";
    }
    return "?";
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config error at " + path + ": " + what);
}

template <typename T>
T get_field(const json& j, const std::string& parent, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(parent + "." + key, e.what());
    }
}

template <typename T>
T require_field(const json& j, const std::string& parent, const char* key) {
    if (!j.contains(key)) fail(parent + "." + key, "missing required field");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(parent + "." + key, e.what());
    }
}

kg::SynthConfig parse_synth(const json& j, const std::string& parent) {
    kg::SynthConfig synth;
    if (!j.contains("graphs") || !j.at("graphs").is_array() || j.at("graphs").empty())
        fail(parent + ".graphs", "synthetic block needs a non-empty graph array");
    for (std::size_t i = 0; i < j.at("graphs").size(); ++i) {
        const auto& gj = j.at("graphs")[i];
        const std::string gpath = parent + ".graphs[" + std::to_string(i) + "]";
        kg::SynthGraphSpec spec;
        spec.id = require_field<std::string>(gj, gpath, "id");
        spec.entities = require_field<std::size_t>(gj, gpath, "entities");
        spec.relations = get_field<std::size_t>(gj, gpath, "relations", 8);
        spec.triples = require_field<std::size_t>(gj, gpath, "triples");
        synth.graphs.push_back(spec);
    }
    if (j.contains("overlaps")) {
        for (std::size_t i = 0; i < j.at("overlaps").size(); ++i) {
            const auto& oj = j.at("overlaps")[i];
            const std::string opath = parent + ".overlaps[" + std::to_string(i) + "]";
            kg::SynthOverlapSpec ov;
            ov.graph_a = require_field<std::size_t>(oj, opath, "a");
            ov.graph_b = require_field<std::size_t>(oj, opath, "b");
            ov.entities = require_field<std::size_t>(oj, opath, "entities");
            ov.relations = get_field<std::size_t>(oj, opath, "relations", 0);
            synth.overlaps.push_back(ov);
        }
    }
    synth.type_count = get_field<std::size_t>(j, parent, "type_count", 8);
    synth.noise_fraction = get_field<double>(j, parent, "noise_fraction", 0.05);
    synth.overlap_skew = get_field<double>(j, parent, "overlap_skew", 0.75);
    return synth;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;

    cfg.mode = mode_from_name(get_field<std::string>(j, "$", "mode", "fkge"));
    cfg.dim = get_field<int>(j, "$", "dim", 100);
    if (cfg.dim <= 0) fail("$.dim", "must be positive");

    if (j.contains("models")) {
        const auto& mj = j.at("models");
        if (mj.is_string()) cfg.models.push_back(mj.get<std::string>());
        else if (mj.is_array())
            for (const auto& m : mj) cfg.models.push_back(m.get<std::string>());
        else fail("$.models", "must be a string or array of strings");
    } else {
        cfg.models.push_back("TransE");
    }
    for (const auto& m : cfg.models)
        if (m != "random") kge::model_from_name(m);  // validates

    if (j.contains("split_ratio")) {
        const auto& rj = j.at("split_ratio");
        if (!rj.is_array() || rj.size() != 3) fail("$.split_ratio", "must be [train, valid, test]");
        cfg.split_ratio = {rj[0].get<int>(), rj[1].get<int>(), rj[2].get<int>()};
        if (cfg.split_ratio.train <= 0 || cfg.split_ratio.valid <= 0 || cfg.split_ratio.test <= 0)
            fail("$.split_ratio", "components must be positive");
        if (cfg.split_ratio.train + cfg.split_ratio.valid + cfg.split_ratio.test != 100)
            fail("$.split_ratio", "components must sum to 100");
    }

    const json train_j = j.value("train", json::object());
    cfg.train.learning_rate = get_field<double>(train_j, "$.train", "learning_rate", 0.5);
    cfg.train.batch_size = get_field<int>(train_j, "$.train", "batch_size", 100);
    cfg.train.margin = get_field<double>(train_j, "$.train", "margin", 1.0);
    cfg.train.norm_order = get_field<int>(train_j, "$.train", "norm_order", 1);
    cfg.train.epochs_per_round = get_field<int>(train_j, "$.train", "epochs_per_round", 1000);
    cfg.train.dim = cfg.dim;
    try {
        cfg.train.validate();
    } catch (const std::exception& e) {
        fail("$.train", e.what());
    }
    cfg.initial_epochs = get_field<int>(j, "$", "initial_epochs", 1000);
    if (cfg.initial_epochs <= 0) fail("$.initial_epochs", "must be positive");

    const json fed_j = j.value("federation", json::object());
    cfg.round_budget = get_field<int>(fed_j, "$.federation", "round_budget", 8);
    if (cfg.round_budget < 0) fail("$.federation.round_budget", "must be non-negative");
    cfg.self_train_when_idle =
        get_field<bool>(fed_j, "$.federation", "self_train_when_idle", true);
    const auto sched = get_field<std::string>(fed_j, "$.federation", "scheduler", "fifo");
    if (sched == "fifo") cfg.scheduler = fed::SchedulerPolicy::Fifo;
    else if (sched == "seeded") cfg.scheduler = fed::SchedulerPolicy::Seeded;
    else if (sched == "scripted") cfg.scheduler = fed::SchedulerPolicy::Scripted;
    else fail("$.federation.scheduler", "must be fifo|seeded|scripted");
    if (fed_j.contains("pair_script")) {
        for (const auto& pj : fed_j.at("pair_script")) {
            if (!pj.is_array() || pj.size() != 2)
                fail("$.federation.pair_script", "entries must be [client, host]");
            cfg.pair_script.emplace_back(pj[0].get<std::string>(), pj[1].get<std::string>());
        }
    }
    cfg.threads = get_field<int>(fed_j, "$.federation", "threads", 1);

    const json priv_j = j.value("privacy", json::object());
    cfg.lambda = get_field<double>(priv_j, "$.privacy", "lambda", 0.05);
    if (cfg.lambda <= 0) fail("$.privacy.lambda", "must be positive");
    cfg.delta = get_field<double>(priv_j, "$.privacy", "delta", 1e-5);
    if (cfg.delta <= 0 || cfg.delta >= 1) fail("$.privacy.delta", "must lie in (0,1)");
    cfg.max_moment = get_field<std::size_t>(priv_j, "$.privacy", "max_moment", 32);
    if (cfg.max_moment < 1) fail("$.privacy.max_moment", "must be at least 1");

    const json ppat_j = j.value("ppat", json::object());
    cfg.ppat.batch = get_field<int>(ppat_j, "$.ppat", "batch", 32);
    cfg.ppat.teachers = get_field<int>(ppat_j, "$.ppat", "teachers", 4);
    cfg.ppat.lr = get_field<double>(ppat_j, "$.ppat", "lr", 0.02);
    cfg.ppat.momentum = get_field<double>(ppat_j, "$.ppat", "momentum", 0.9);
    cfg.ppat.hidden = get_field<int>(ppat_j, "$.ppat", "hidden", 64);
    cfg.ppat.max_epochs = get_field<int>(ppat_j, "$.ppat", "max_epochs", 200);
    cfg.ppat.min_epochs = get_field<int>(ppat_j, "$.ppat", "min_epochs", 20);
    cfg.ppat.patience = get_field<int>(ppat_j, "$.ppat", "patience", 15);
    cfg.ppat.moving_avg_window = get_field<int>(ppat_j, "$.ppat", "moving_avg_window", 5);
    cfg.ppat.min_delta = get_field<double>(ppat_j, "$.ppat", "min_delta", 0.005);
    cfg.ppat.ortho_beta = get_field<double>(ppat_j, "$.ppat", "ortho_beta", 0.01);
    cfg.ppat.csls_refine = get_field<bool>(ppat_j, "$.ppat", "csls_refine", false);
    cfg.ppat.csls_iters = get_field<int>(ppat_j, "$.ppat", "csls_iters", 1);
    cfg.ppat.csls_k = get_field<int>(ppat_j, "$.ppat", "csls_k", 10);
    const auto winit = get_field<std::string>(ppat_j, "$.ppat", "w_init", "orthogonal");
    if (winit == "orthogonal") cfg.ppat.w_init = ppat::WInit::Orthogonal;
    else if (winit == "identity") cfg.ppat.w_init = ppat::WInit::Identity;
    else fail("$.ppat.w_init", "must be orthogonal|identity");
    if (cfg.ppat.batch <= 0 || cfg.ppat.teachers <= 0 || cfg.ppat.lr <= 0 ||
        cfg.ppat.hidden <= 0 || cfg.ppat.max_epochs <= 0)
        fail("$.ppat", "batch, teachers, lr, hidden and max_epochs must be positive");

    const json abl_j = j.value("ablation", json::object());
    cfg.fkge_simple = get_field<bool>(abl_j, "$.ablation", "fkge_simple", false);
    cfg.sample_aligned_ratio =
        get_field<double>(abl_j, "$.ablation", "sample_aligned_ratio", 1.0);
    if (cfg.sample_aligned_ratio <= 0.0 || cfg.sample_aligned_ratio > 1.0)
        fail("$.ablation.sample_aligned_ratio", "must lie in (0,1]");
    cfg.entities_only = get_field<bool>(abl_j, "$.ablation", "entities_only", false);
    cfg.relations_only = get_field<bool>(abl_j, "$.ablation", "relations_only", false);
    if (cfg.entities_only && cfg.relations_only)
        fail("$.ablation", "entities_only and relations_only are mutually exclusive");

    if (!j.contains("seeds")) fail("$.seeds", "missing required field (no wall-clock defaults)");
    const auto& seeds_j = j.at("seeds");
    cfg.seeds.data = require_field<std::uint64_t>(seeds_j, "$.seeds", "data");
    cfg.seeds.train = require_field<std::uint64_t>(seeds_j, "$.seeds", "train");
    cfg.seeds.scheduler = require_field<std::uint64_t>(seeds_j, "$.seeds", "scheduler");
    cfg.seeds.noise = require_field<std::uint64_t>(seeds_j, "$.seeds", "noise");

    if (!j.contains("graphs")) fail("$.graphs", "missing required field");
    const auto& graphs_j = j.at("graphs");
    if (graphs_j.is_object() && graphs_j.contains("synthetic")) {
        cfg.synthetic = parse_synth(graphs_j.at("synthetic"), "$.graphs.synthetic");
    } else if (graphs_j.is_array() && !graphs_j.empty()) {
        for (std::size_t i = 0; i < graphs_j.size(); ++i) {
            const auto& gj = graphs_j[i];
            const std::string gpath = "$.graphs[" + std::to_string(i) + "]";
            GraphSource src;
            src.path = require_field<std::string>(gj, gpath, "path");
            src.id = get_field<std::string>(gj, gpath, "id", src.path.stem().string());
            cfg.graph_files.push_back(src);
        }
    } else {
        fail("$.graphs", "must be an array of {path} or an object with a synthetic block");
    }
    if (j.contains("alignments"))
        for (const auto& aj : j.at("alignments"))
            cfg.alignment_files.emplace_back(aj.get<std::string>());

    cfg.output_dir = get_field<std::string>(j, "$", "output_dir", "out");

    const json eval_j = j.value("eval", json::object());
    cfg.eval_norm_order = get_field<int>(eval_j, "$.eval", "norm_order", cfg.train.norm_order);
    cfg.type_constraint = get_field<bool>(eval_j, "$.eval", "type_constraint", false);
    cfg.filter_train = get_field<bool>(eval_j, "$.eval", "filter_train", false);

    if (cfg.models.size() > 1 && !cfg.graph_files.empty() &&
        cfg.models.size() != cfg.graph_files.size())
        fail("$.models", "per-graph model list must match the number of graphs");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

void apply_seed_override(RunConfig& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("seed override must look like key=value, got: " + spec);
    const std::string key = spec.substr(0, eq);
    const std::uint64_t value = std::stoull(spec.substr(eq + 1));
    if (key == "data") cfg.seeds.data = value;
    else if (key == "train") cfg.seeds.train = value;
    else if (key == "scheduler") cfg.seeds.scheduler = value;
    else if (key == "noise") cfg.seeds.noise = value;
    else throw std::invalid_argument("unknown seed override key: " + key);
}

}  // namespace fkge::cli
