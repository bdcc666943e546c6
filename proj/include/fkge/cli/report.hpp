#pragma once
// Summarizes one or more run directories (each holding a summary.json) into
// markdown and CSV tables, with deltas against a baseline-mode run when one
// is present.

#include <filesystem>
#include <string>

#include "fkge/cli/config.hpp"

namespace fkge::cli {

struct ReportTables {
    std::string markdown;
    std::string csv;
    bool has_baseline = false;
    double max_epsilon = -1.0;
};

// Scans `metrics_dir` (and one level of subdirectories) for summary.json
// files. Throws when none are found.
ReportTables build_report(const std::filesystem::path& metrics_dir);

// Re-reads every ledgers/*.json under the directory and returns the max
// epsilon-hat found, or a negative value when there are none.
double max_epsilon_from_ledgers(const std::filesystem::path& metrics_dir);

}  // namespace fkge::cli
