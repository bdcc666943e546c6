#include "fkge/cli/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fkge::cli {

namespace {

using nlohmann::json;

struct RunSummary {
    std::filesystem::path dir;
    std::string mode;
    double max_epsilon = -1.0;
    json graphs;
};

std::vector<RunSummary> collect_summaries(const std::filesystem::path& dir) {
    std::vector<RunSummary> found;
    auto try_load = [&](const std::filesystem::path& p) {
        const auto file = p / "summary.json";
        if (!std::filesystem::exists(file)) return;
        std::ifstream in(file);
        json j = json::parse(in, nullptr, /*allow_exceptions=*/true);
        RunSummary s;
        s.dir = p;
        s.mode = j.value("mode", "?");
        s.max_epsilon = j.value("max_epsilon", -1.0);
        s.graphs = j.value("graphs", json::array());
        found.push_back(std::move(s));
    };
    try_load(dir);
    if (std::filesystem::exists(dir))
        for (const auto& entry : std::filesystem::directory_iterator(dir))
            if (entry.is_directory()) try_load(entry.path());
    std::sort(found.begin(), found.end(),
              [](const RunSummary& a, const RunSummary& b) { return a.dir < b.dir; });
    return found;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

ReportTables build_report(const std::filesystem::path& metrics_dir) {
    const auto runs = collect_summaries(metrics_dir);
    if (runs.empty())
        throw std::runtime_error("no summary.json found under " + metrics_dir.string());

    const RunSummary* baseline = nullptr;
    for (const auto& run : runs)
        if (run.mode == "baseline") baseline = &run;

    std::map<std::string, json> baseline_by_graph;
    if (baseline)
        for (const auto& g : baseline->graphs) baseline_by_graph[g.at("id")] = g;

    ReportTables tables;
    tables.has_baseline = baseline != nullptr;

    std::ostringstream md, csv;
    csv << "run,mode,graph,valid_accuracy,test_accuracy,hit1,hit3,hit10,mean_rank,"
           "delta_accuracy,max_epsilon\n";
    md << "# Run summary\n\n";
    if (!baseline) md << "_No baseline-mode run found; delta columns omitted._\n\n";
    for (const auto& run : runs) {
        tables.max_epsilon = std::max(tables.max_epsilon, run.max_epsilon);
        md << "## " << run.dir.filename().string() << " (" << run.mode << ")\n\n";
        if (run.max_epsilon >= 0)
            md << "max epsilon-hat: " << fmt(run.max_epsilon) << "\n\n";
        md << "| graph | valid acc | test acc | Hit@1 | Hit@3 | Hit@10 | mean rank |";
        if (baseline) md << " delta acc vs baseline |";
        md << "\n|---|---|---|---|---|---|---|";
        if (baseline) md << "---|";
        md << "\n";
        for (const auto& g : run.graphs) {
            const std::string id = g.at("id");
            const double acc = g.at("valid_accuracy").get<double>();
            std::string delta = "";
            if (baseline) {
                const auto it = baseline_by_graph.find(id);
                if (it != baseline_by_graph.end())
                    delta = fmt(acc - it->second.at("valid_accuracy").get<double>());
            }
            md << "| " << id << " | " << fmt(acc) << " | "
               << fmt(g.at("test_accuracy").get<double>()) << " | "
               << fmt(g.at("hit1").get<double>()) << " | " << fmt(g.at("hit3").get<double>())
               << " | " << fmt(g.at("hit10").get<double>()) << " | "
               << fmt(g.at("mean_rank").get<double>()) << " |";
            if (baseline) md << ' ' << (delta.empty() ? "n/a" : delta) << " |";
            md << "\n";
            csv << run.dir.filename().string() << ',' << run.mode << ',' << id << ',' << fmt(acc)
                << ',' << fmt(g.at("test_accuracy").get<double>()) << ','
                << fmt(g.at("hit1").get<double>()) << ',' << fmt(g.at("hit3").get<double>()) << ','
                << fmt(g.at("hit10").get<double>()) << ',' << fmt(g.at("mean_rank").get<double>())
                << ',' << delta << ',' << (run.max_epsilon >= 0 ? fmt(run.max_epsilon) : "")
                << '\n';
        }
        md << "\n";
    }
    tables.markdown = md.str();
    tables.csv = csv.str();
    return tables;
}

double max_epsilon_from_ledgers(const std::filesystem::path& metrics_dir) {
    double best = -1.0;
    if (!std::filesystem::exists(metrics_dir)) return best;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(metrics_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        if (entry.path().parent_path().filename() != "ledgers") continue;
        std::ifstream in(entry.path());
        const auto j = json::parse(in, nullptr, true);
        if (j.contains("epsilon_hat")) best = std::max(best, j.at("epsilon_hat").get<double>());
    }
    return best;
}

}  // namespace fkge::cli
