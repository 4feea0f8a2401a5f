#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wcdp/estimate.hpp"
#include "wcdp/model.hpp"
#include "wcdp/practical.hpp"

namespace wcdp {

/**
 * Undiscounted problem over periods t = 0..T with period-dependent data and a
 * zero terminal value. A discounted instance is expressed by folding beta^t into
 * the rewards (see `fold_discount`).
 */
struct FiniteHorizonModel {
    int horizon = 0;
    /// specs[t][n]; every period shares the state and action counts of period 0.
    std::vector<std::vector<SubproblemSpec>> specs;
    /// budgets[t], one L-vector per period.
    std::vector<numvec> budgets;
    std::optional<indvec> null_actions;

    int N() const { return specs.empty() ? 0 : static_cast<int>(specs[0].size()); }
    int L() const { return budgets.empty() ? 0 : static_cast<int>(budgets[0].size()); }
    /// Period-t data as a one-period model (its discount field is not used).
    WeaklyCoupledModel stage(int t) const;
};

void validate_finite_horizon(const FiniteHorizonModel& model);

/// Repeats a stationary model for T+1 periods with rewards scaled by beta^t.
FiniteHorizonModel fold_discount(const WeaklyCoupledModel& model, int T);

struct FhValueResult {
    /// values[t] over encoded joint states, t = 0..T+1 (values[T+1] = 0).
    std::vector<ValueTable> values;
    /// policy[t][s]: maximizing feasible joint action (lowest on ties).
    std::vector<std::vector<JointAction>> policy;
};

FhValueResult fh_value(const FiniteHorizonModel& model);

/// J^lambda_t(x) = sum_{s>=t} lambda_s'b_s + sum_n H^n_t(x^n).
struct FhLagrangian {
    std::vector<numvec> lambdas;
    /// parts[t][n], t = 0..T+1 (parts[T+1] = 0).
    std::vector<std::vector<ValueTable>> parts;
    /// constants[t] = sum_{s>=t} lambda_s'b_s, t = 0..T+1.
    numvec constants;
    /// greedy[t][n][x]: lowest maximizer of the priced per-project recursion.
    std::vector<std::vector<indvec>> greedy;

    double value(int t, const JointState& x) const;
};

FhLagrangian fh_lagrangian(const FiniteHorizonModel& model, const std::vector<numvec>& lambdas);

/// d J^lambda_0(x0) / d lambda_t = b_t - sum_n E[B^n_t(x_t, pi_t(x_t))] under the greedy per-project policies.
std::vector<numvec> fh_lagrangian_subgradient(const FiniteHorizonModel& model, const FhLagrangian& bound,
                                              const JointState& x0);

struct FhLambdaSearchResult {
    FhLagrangian bound;
    double objective = 0.0;
    std::vector<double> trace;
};

/// Projected subgradient over (lambda_0..lambda_T) >= 0 minimizing J^lambda_0(x0).
FhLambdaSearchResult fh_optimal_lambda(const FiniteHorizonModel& model, const JointState& x0, double step0 = 1.0,
                                       int max_iters = 500);

/// Per-period surrogate H_0..H_{T+1}, either separable or joint tables; H_{T+1} must vanish.
struct FhPenalty {
    bool separable = true;
    numvec theta;
    std::vector<std::vector<ValueTable>> parts;
    std::vector<ValueTable> tables;
    /// Per-period multipliers that seed the relaxed inner search.
    std::vector<numvec> lambdas;

    static FhPenalty zero(const FiniteHorizonModel& model);
    static FhPenalty from_lagrangian(const FhLagrangian& b);
    static FhPenalty from_values(const FhValueResult& v);
};

/// Fixed-horizon scenario: uniforms u^n_t for t = 1..T+1, keyed like the discounted estimators.
Scenario fh_scenario(const FiniteHorizonModel& model, std::uint64_t seed, std::size_t k);

/// Exact inner problem over feasible joint sequences; returns sum_t R_t + E[H_{t+1}] - H_t.
double fh_inner_exact(const FiniteHorizonModel& model, const FhPenalty& penalty, const Scenario& sc,
                      const JointState& x0);

BoundEstimate fh_info_bound(const FiniteHorizonModel& model, const FhPenalty& penalty, const JointState& x0,
                            std::size_t n_scenarios, std::uint64_t seed, Execution exec = Execution::parallel);

/// Relaxed inner value at fixed mu_0..mu_T (separable penalty only), with its subgradient.
RelaxedInnerResult fh_relaxed_inner_eval(const FiniteHorizonModel& model, const FhPenalty& penalty,
                                         const Scenario& sc, const JointState& x0, const MultiplierPath& mu);

MuSolveResult fh_minimize_mu(const FiniteHorizonModel& model, const FhPenalty& penalty, const Scenario& sc,
                             const JointState& x0, const MultiplierPath& init, const MuSolverConfig& cfg = {});

BoundEstimate fh_practical_bound(const FiniteHorizonModel& model, const FhPenalty& penalty, const JointState& x0,
                                 std::size_t n_scenarios, std::uint64_t seed, const MuSolverConfig& cfg = {},
                                 Execution exec = Execution::parallel);

struct FhGapCertificate {
    /// gamma[n][t]: spread of R^n_t + E[H^n_{t+1}] - H^n_t over (x, a in A^n_t(x)).
    std::vector<numvec> gamma;
    double prefactor = 0.0;
    double bound = 0.0;
};

FhGapCertificate fh_gap_certificate(const FiniteHorizonModel& model, const FhPenalty& penalty);

} // namespace wcdp
