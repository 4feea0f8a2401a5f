#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wcdp/common.hpp"
#include "wcdp/estimate.hpp"
#include "wcdp/parallel.hpp"

namespace wcdp {

/**
 * Diagonal linear-quadratic problem with the nonconvex linking constraint
 * sum_n (a^n_t)^2 >= b:
 *
 *   x_{t+1} = A_t x_t + B_t a_t + w_{t+1},  cost sum_t a_t' R_t a_t + x_T' Q x_T  (minimized).
 *
 * Coefficients are stored per period and coordinate, [t][n]. Noise is independent
 * zero-mean Gaussian with standard deviation sigma[t][n] for w_{t+1}.
 */
struct LqcModel {
    int N = 0;
    int T = 0;
    std::vector<numvec> A, B, R;
    std::vector<numvec> sigma;
    numvec Q;
    double b = 0.0;
    numvec x0;

    /// A = B = R = I, sigma = 1, Q uniform on [1, 2] from `seed`, x0 = (1, ..., 1).
    static LqcModel standard(int N, int T, double b, std::uint64_t seed);
};

void validate_lqc(const LqcModel& m);

/// Margin of S': lambda_t <= min_n R_t^n - margin.
constexpr double lqc_margin = 1e-3;

/// Largest admissible multiplier per period.
numvec lqc_lambda_cap(const LqcModel& m);

struct RiccatiSolution {
    /// k[t][n] for t = 0..T, k[T] = Q.
    std::vector<numvec> k;
    /// Feedback a_t = -gain[t][n] x_t per coordinate.
    std::vector<numvec> gain;
    numvec lambdas;
    /// sum_t sum_n k_{t+1} sigma_t^2 and sum_t lambda_t b.
    double noise_offset = 0.0;
    double multiplier_offset = 0.0;

    /// J^lambda_0(x) = sum_n k_0 x_n^2 + offsets.
    double value(const numvec& x) const;
    /// J^lambda_t(x), the cost-to-go from period t.
    double value_at(int t, const numvec& x, const LqcModel& m) const;
};

/// Scalar Riccati recursion k_t = A^2 k (R - lambda) / (B^2 k + R - lambda) per coordinate.
/// Throws ConfigError ("lambda-out-of-range") outside S'.
RiccatiSolution riccati(const LqcModel& m, const numvec& lambdas);

/// Same recursion through dense N x N matrices (reference for the diagonal shortcut).
RiccatiSolution riccati_dense(const LqcModel& m, const numvec& lambdas);

/// d J^lambda_0(x0) / d lambda_t = b - E[sum_n (a^n_t)^2] under the lambda-optimal feedback (exact moments).
numvec lqc_lagrangian_gradient(const LqcModel& m, const RiccatiSolution& sol);

struct LqcSearchConfig {
    int max_iters = 500;
    /// Step s0 / sqrt(1 + k).
    double step0 = 0.5;
};

struct LqcLagrangianResult {
    RiccatiSolution solution;
    double bound = 0.0;
    double gradient_norm = 0.0;
    std::vector<double> trace;
};

/// Projected gradient ascent of J^lambda_0(x0) over S'; returns the best iterate.
LqcLagrangianResult lqc_lagrangian_search(const LqcModel& m, const LqcSearchConfig& cfg = {});

/// Noise path w_1..w_T, row t-1 holding w_t; path k of stream `seed`.
std::vector<numvec> lqc_noise_path(const LqcModel& m, std::uint64_t seed, std::size_t k);

/// Cost of the projection policy on one noise path, and of the unconstrained optimum on the same path.
struct LqcPathCost {
    double projected = 0.0;
    double unconstrained = 0.0;
};

LqcPathCost lqc_path_cost(const LqcModel& m, const RiccatiSolution& unconstrained, const std::vector<numvec>& w);

/// Projection policy cost with the unconstrained cost as control variate (coefficient 1).
BoundEstimate projection_policy_value(const LqcModel& m, std::size_t n_paths, std::uint64_t seed,
                                      Execution exec = Execution::parallel);

struct LqcInnerConfig {
    int max_iters = 80;
    double tol = 1e-3;
    /// Step s0 / (1 + k).
    double step0 = 0.5;
};

struct LqcInnerResult {
    double value = 0.0;
    double initial_value = 0.0;
    numvec mu;
    int iterations = 0;
    double gradient_norm = 0.0;
    /// Optimal actions a_t^n at the returned mu.
    std::vector<numvec> actions;
};

/// Inner minimum over unconstrained actions for fixed mu (exact affine-quadratic recursion), with subgradient.
LqcInnerResult lqc_inner_at(const LqcModel& m, const RiccatiSolution& lag, const std::vector<numvec>& w,
                            const numvec& mu);

/// max over mu in S' of the inner minimum, by projected subgradient ascent from mu = lambda.
LqcInnerResult lqc_relaxed_inner(const LqcModel& m, const RiccatiSolution& lag, const std::vector<numvec>& w,
                                 const LqcInnerConfig& cfg = {});

BoundEstimate lqc_info_bound(const LqcModel& m, const RiccatiSolution& lag, std::size_t n_paths,
                             std::uint64_t seed, const LqcInnerConfig& cfg = {},
                             Execution exec = Execution::parallel);

struct LqcConfig {
    std::size_t policy_paths = 10000;
    std::size_t info_paths = 100;
    LqcSearchConfig search;
    LqcInnerConfig inner;
    std::uint64_t seed = 1;
    Execution exec = Execution::parallel;
};

struct LqcRow {
    int N = 0;
    double b = 0.0;
    int T = 0;
    double proj_value = 0.0;
    double proj_se = 0.0;
    double unconstrained = 0.0;
    double lag_bound = 0.0;
    double info_bound = 0.0;
    double info_se = 0.0;
    /// (Policy - Info)/Policy and (Info - Lag)/(Policy - Lag).
    std::optional<double> gap1;
    std::optional<double> gap2;
    std::uint64_t seed = 0;
};

LqcRow run_lqc_row(const LqcModel& m, const LqcConfig& cfg);

struct LqcCell {
    int N;
    double b;
    int T;
};

/// One standard model per cell (Q drawn from `model_seed`), rows in cell order.
std::vector<LqcRow> run_lqc_table(const std::vector<LqcCell>& cells, std::uint64_t model_seed,
                                  const LqcConfig& cfg);

void write_lqc_csv(std::ostream& os, const std::vector<LqcRow>& rows);

} // namespace wcdp
