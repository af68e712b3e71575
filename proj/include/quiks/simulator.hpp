#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "quiks/metrics.hpp"
#include "quiks/netsim.hpp"
#include "quiks/scenario.hpp"

namespace quiks {

/// One end-to-end buffering unit (ordered node pair) after a run.
struct PairReport {
    int source = 0;
    int destination = 1;
    std::string scheme;
    netsim::Path path;
    std::vector<std::size_t> apps;
    std::vector<double> sigma_hat;      // one entry per finished probe (QuIKS only)
    std::vector<std::int64_t> targets;  // matching buffer targets
    std::int64_t reprobes = 0;
    std::int64_t probes_aborted = 0;
    std::int64_t transient_slots = 0;
    std::int64_t relayed_blocks = 0;
    std::int64_t delivered_blocks = 0;
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<traffic::AppSpec> apps;
    metrics::RunMetrics metrics;
    std::vector<PairReport> pairs;
    std::vector<bool> app_completed;
    std::int64_t slots_run = 0;
    std::vector<std::string> violations;  // acceptance bounds that did not hold

    [[nodiscard]] bool accepted() const noexcept { return violations.empty(); }
};

/// Runs one scenario to completion. Deterministic for a given config (including its seed).
[[nodiscard]] ScenarioResult simulate(const ScenarioConfig& config);

/// Per-link key pools for a scenario's budget mode.
[[nodiscard]] std::vector<netsim::LinkKeyPool> provision_pools(
    const ScenarioConfig& config, const netsim::Topology& topology,
    const std::vector<traffic::AppSpec>& apps);

[[nodiscard]] nlohmann::json summary_json(const ScenarioResult& result);

/// Simulates and writes `config.json`, `summary.json`, `requests.csv` and `buffer.csv`
/// into `run_dir` (created if needed).
ScenarioResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& run_dir);

struct SuiteRow {
    std::string config_file;
    std::string name;
    std::string scheme;
    bool ok = false;
    std::string error;
    double instant_ratio = 0.0;
    double instant_ratio_post_warmup = 0.0;
    double completion_ratio = 0.0;
    double mean_buffer_bytes = 0.0;
    double max_buffer_bytes = 0.0;
    double latency_median_s = 0.0;
    double latency_p95_s = 0.0;
    std::int64_t slots = 0;
    bool has_bounds = false;
    std::vector<std::string> violations;
};

struct SuiteResult {
    std::vector<SuiteRow> rows;   // sorted by config file name

    /// True iff some scenario carrying acceptance bounds violated them.
    [[nodiscard]] bool any_violation() const;
    [[nodiscard]] std::size_t failed() const;
};

/// Runs every `*.json` in `dir` on `parallelism` workers, writing each run under
/// `out_root/<config stem>/` and the table to `out_root/suite.csv`. A scenario that fails to
/// load or run becomes a failed row; the suite itself keeps going.
SuiteResult run_suite(const std::filesystem::path& dir, const std::filesystem::path& out_root,
                      unsigned parallelism);

void write_suite_csv(std::ostream& out, const SuiteResult& suite);

}  // namespace quiks
