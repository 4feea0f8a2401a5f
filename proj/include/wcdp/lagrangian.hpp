#pragma once

#include <vector>

#include "wcdp/model.hpp"

namespace wcdp {

/// Relaxed value J^lambda = lambda'b / (1 - beta) + sum_n H^{lambda,n}(x^n).
struct LagrangianBound {
    numvec lambda;
    std::vector<ValueTable> subproblem_values;
    double constant = 0.0;

    double operator()(const JointState& x) const;
    /// Weighted value J^lambda(nu); exact from the marginals since J^lambda is separable.
    double weighted(const WeaklyCoupledModel& model, const InitialDistribution& nu) const;
    /// J^lambda tabulated over every joint state.
    ValueTable joint_table(const WeaklyCoupledModel& model) const;
};

struct SubproblemSolution {
    ValueTable value;
    /// Greedy action per state (lowest index among maximizers).
    indvec policy;
    double residual = 0.0;
};

/**
 * Solves H(x) = max_{a in A^n(x)} R - lambda'B + beta E[H(x')] over the project's own
 * admissible actions. Value iteration is followed by policy-iteration polishing, so
 * the returned table is the exact fixed point up to rounding.
 */
SubproblemSolution solve_subproblem(const WeaklyCoupledModel& model, int n, const numvec& lambda,
                                    double tol = -1.0);

ValueTable subproblem_value_iteration(const WeaklyCoupledModel& model, int n, const numvec& lambda,
                                      double tol = -1.0);

LagrangianBound lagrangian_bound(const WeaklyCoupledModel& model, const numvec& lambda, double tol = -1.0,
                                 Execution exec = Execution::serial);

struct LambdaSearchResult {
    numvec lambda;
    LagrangianBound bound;
    /// J^lambda(nu) at the returned lambda (re-solved from the subproblem equations).
    double objective = 0.0;
    /// Objective of the solver that produced lambda (LP optimum, or best subgradient value).
    double solver_objective = 0.0;
    std::vector<double> trace;
};

/// Best multiplier by the linear program over (lambda >= 0, H^n free).
LambdaSearchResult optimal_lambda_lp(const WeaklyCoupledModel& model, const InitialDistribution& nu);

/// Exact subgradient b/(1-beta) - sum_n nu_n' (I - beta P_pi)^{-1} B_pi of J^lambda(nu).
numvec lagrangian_subgradient(const WeaklyCoupledModel& model, const InitialDistribution& nu,
                              const numvec& lambda, double* objective = nullptr);

struct SubgradientConfig {
    /// Step s0 / (1 + k).
    double step0 = 1.0;
    int max_iters = 500;
    /// Starting point; zero when empty.
    numvec init;
};

/// Projected subgradient on J^lambda(nu); returns the best iterate and the objective trace.
LambdaSearchResult optimal_lambda_subgradient(const WeaklyCoupledModel& model, const InitialDistribution& nu,
                                              const SubgradientConfig& cfg = {});

/// Best separable supersolution theta + sum_n H^n(x^n): min theta + sum_n nu_n'H^n subject to
/// every feasible joint constraint.
struct AlpBound {
    double theta = 0.0;
    std::vector<ValueTable> subproblem_values;
    double objective = 0.0;
    /// Smallest slack over the enumerated constraints (>= -1e-7 when feasible).
    double min_slack = 0.0;
    std::size_t constraint_count = 0;

    double operator()(const JointState& x) const;
    ValueTable joint_table(const WeaklyCoupledModel& model) const;
};

/// Throws GuardError when the constraint count sum_x |A-bar(x)| exceeds `limit`.
AlpBound alp_bound(const WeaklyCoupledModel& model, const InitialDistribution& nu,
                   std::size_t limit = 1'000'000);

/// Greedy policy argmax_{a in A-bar(x)} R(x,a) + beta E[J^lambda(x')], lowest joint action on ties.
/// The returned callable refers to `model`, which must outlive it.
StationaryPolicy lagrangian_greedy_policy(const WeaklyCoupledModel& model, const LagrangianBound& bound);

struct TightnessReport {
    /// Per encoded joint state: slackness and argmax membership both hold.
    std::vector<bool> state_pass;
    std::vector<double> slackness;
    bool all_pass = true;
    std::vector<std::size_t> failing_states;
};

/**
 * Checks, state by state, lambda'(b - B(x, pi(x))) = 0 and that pi(x) maximizes
 * R + lambda'(b - B) + beta E[J^lambda] over the unconstrained product action set.
 * Both together are necessary and sufficient for the policy's value to equal J^lambda.
 */
TightnessReport lagrangian_tightness_certificate(const WeaklyCoupledModel& model, const LagrangianBound& bound,
                                                 const StationaryPolicy& policy);

} // namespace wcdp
