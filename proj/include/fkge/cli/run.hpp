#pragma once
// Experiment runner: prepares graphs (files or synthetic), executes the
// selected mode, and writes deterministic artifacts (metrics CSV, final
// reports, ledgers, trace, checkpoints, summary).

#include "fkge/cli/config.hpp"

namespace fkge::cli {

struct GraphFinal {
    std::string id;
    double valid_accuracy = 0.0;
    double test_accuracy = 0.0;
    double hit1 = 0.0, hit3 = 0.0, hit10 = 0.0;
    double mean_rank = 0.0;
    double best_score = 0.0;
    int rounds_used = 0;
};

struct RunOutputs {
    std::filesystem::path dir;
    std::vector<GraphFinal> finals;
    double max_epsilon = -1.0;
    std::uint64_t delivered_messages = 0;
};

struct PreparedRun {
    fed::FederationSetup setup;
};

// Loads or generates graphs, assigns splits, resolves per-graph models and
// all actor settings. Shared by the runner and the benchmark suites.
PreparedRun prepare(const RunConfig& cfg);

// Full run with artifacts under cfg.output_dir. Returns the summary.
RunOutputs execute(const RunConfig& cfg);

int effective_threads(const RunConfig& cfg);

}  // namespace fkge::cli
