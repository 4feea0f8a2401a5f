#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wcdp/model.hpp"
#include "wcdp/parallel.hpp"
#include "wcdp/report.hpp"

namespace wcdp {

/// Restless bandit: one project active per period, written as the row pair
/// sum_n a^n <= 1 and -sum_n a^n <= -1.
struct BanditInstance {
    WeaklyCoupledModel model;
    int states = 0;
    std::uint64_t seed = 0;
};

/// Transition rows are normalised uniform vectors; active rewards are uniform on [0,1], passive rewards 0.
BanditInstance generate_bandit(int N, int states, double beta, std::uint64_t seed);

struct BanditConfig {
    std::size_t policy_paths = 1000;
    std::size_t info_scenarios = 100;
    /// <= 0 picks the per-discount defaults (50/100/150 periods, 200/400/1000 iterations).
    int truncation = -1;
    int max_iters = -1;
    std::uint64_t seed = 1;
    Execution exec = Execution::parallel;
};

struct BanditDefaults {
    int truncation;
    int max_iters;
};

BanditDefaults bandit_defaults(double beta);

struct BanditRow {
    int N = 0;
    double beta = 0.0;
    int states = 0;
    double policy_value = 0.0;
    double policy_se = 0.0;
    double lag_bound = 0.0;
    double info_bound = 0.0;
    double info_se = 0.0;
    /// (Info - Policy)/Policy and (Lag - Info)/(Lag - Policy); empty when undefined.
    std::optional<double> gap1;
    std::optional<double> gap2;
    int truncation = 0;
    int max_iters = 0;
    std::uint64_t seed = 0;
};

/// Lagrangian bound, Lagrangian greedy policy value and truncated practical bound from x0.
BanditRow run_bandit_table(const BanditInstance& instance, const JointState& x0, const BanditConfig& cfg);

/// Rows for every (N, beta) cell; cells run in parallel, each one serially inside.
std::vector<BanditRow> run_bandit_grid(const std::vector<int>& Ns, const std::vector<double>& betas, int states,
                                       std::uint64_t instance_seed, const BanditConfig& cfg);

void write_bandit_csv(std::ostream& os, const std::vector<BanditRow>& rows);

} // namespace wcdp
