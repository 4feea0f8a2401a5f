#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wcdp/common.hpp"
#include "wcdp/parallel.hpp"

namespace wcdp {

inline constexpr const char* wcdp_version = "0.1.0";

/// Exit status of the command-line runner for each error kind.
int exit_code(Error::Kind kind);

/**
 * Validated experiment description. The JSON document is echoed unchanged
 * (apart from a seed override) into the manifest.
 *
 *   mode          exact | lagrangian | alp | info | practical | bandit-table | lqc-table | finite-horizon
 *   model         {"file": path} or {"generator": "three-state" | "random" | "bandit", ...}
 *   x0            joint start state, default all zeros
 *   initial       "point" (at x0) or "uniform"; weighting for exact/lagrangian/alp
 *   seed          required by every stochastic mode
 *   n_scenarios   > 0, required by info, practical and finite-horizon
 *   penalty       lagrangian | alp | exact | zero (info, practical)
 *   truncation    practical inner horizon cap, -1 for none
 *   tau_cap       random-horizon cap, -1 for the default
 *   subgradient   {"step0", "kappa", "max_iters"} for the relaxed inner search
 *   horizon       finite-horizon length when the model is discounted
 *   bandit, lqc   table parameters
 */
struct ExperimentConfig {
    std::string mode;
    nlohmann::json document;
    /// Directory that relative model paths resolve against.
    std::string base_dir = ".";
};

/// Checks the mode-specific required fields; throws ConfigError.
ExperimentConfig parse_experiment(const nlohmann::json& document, const std::string& base_dir = ".",
                                  std::optional<std::uint64_t> seed_override = std::nullopt);

struct RunOutput {
    /// Contents of results.csv; a pure function of the configuration.
    std::string results;
    nlohmann::json manifest;
};

/// Runs the experiment in memory. The manifest's wall-clock entry is the only
/// field that varies between identical runs.
RunOutput run_experiment(const ExperimentConfig& cfg, Execution exec = Execution::parallel);

/// Loads the config, runs it, and writes results.csv + manifest.json (or error.json) into out_dir.
/// Returns the process exit status; errors are also reported as one JSON line on stderr.
int run_cli(const std::string& config_path, const std::string& out_dir, int threads,
            std::optional<std::uint64_t> seed_override);

struct CompareRow {
    std::string lower;
    std::string upper;
    double lower_value = 0.0;
    double upper_value = 0.0;
    /// 3 * combined standard error.
    double slack = 0.0;
    /// "equal", "pass", "violation" or "skipped" (different weightings).
    std::string status;
};

struct CompareReport {
    std::string fingerprint;
    std::vector<CompareRow> rows;
    std::size_t violations = 0;
};

/**
 * Checks exact <= info <= practical <= lagrangian and alp <= lagrangian over the
 * summaries of several manifests. Throws ConfigError on a fingerprint mismatch or
 * when a stochastic summary lacks its standard error, count or seed.
 */
CompareReport compare_manifests(const std::vector<nlohmann::json>& manifests);

std::string format_compare(const CompareReport& report);

/// Accepts run directories or manifest paths. Exit 0 when nothing is violated, 1 otherwise.
int compare_cli(const std::vector<std::string>& inputs, const std::string& out_path);

} // namespace wcdp
