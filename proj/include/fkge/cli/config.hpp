#pragma once
// Run configuration: JSON file -> validated RunConfig. Validation errors
// carry the offending field path. All seeds are explicit.

#include <filesystem>
#include <optional>
#include <string>

#include "fkge/fed/runner.hpp"

namespace fkge::cli {

enum class RunMode { Baseline, Fkge, Unified };

RunMode mode_from_name(const std::string& name);
const char* mode_name(RunMode mode);

struct GraphSource {
    std::string id;
    std::filesystem::path path;  // TSV triples; empty when synthetic
};

struct Seeds {
    std::uint64_t data = 0;
    std::uint64_t train = 0;
    std::uint64_t scheduler = 0;
    std::uint64_t noise = 0;
};

struct RunConfig {
    RunMode mode = RunMode::Fkge;
    int dim = 100;
    std::vector<std::string> models;  // per-graph names, or single entry, or "random"
    kg::SplitRatio split_ratio;
    kge::TrainConfig train;           // dim/seed filled from above
    int initial_epochs = 1000;
    int round_budget = 8;
    bool self_train_when_idle = true;
    fed::SchedulerPolicy scheduler = fed::SchedulerPolicy::Fifo;
    std::vector<std::pair<std::string, std::string>> pair_script;
    int threads = 1;
    double lambda = 0.05;
    double delta = 1e-5;
    std::size_t max_moment = 32;
    ppat::PpatHyper ppat;
    bool fkge_simple = false;
    double sample_aligned_ratio = 1.0;
    bool entities_only = false;
    bool relations_only = false;
    Seeds seeds;
    std::vector<GraphSource> graph_files;
    std::optional<kg::SynthConfig> synthetic;
    std::vector<std::filesystem::path> alignment_files;
    std::filesystem::path output_dir = "out";
    int eval_norm_order = 1;
    bool type_constraint = false;
    bool filter_train = false;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// "key=value" seed override, e.g. "train=7" or "scheduler=12".
void apply_seed_override(RunConfig& cfg, const std::string& spec);

}  // namespace fkge::cli
