#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wcdp/inforelax.hpp"
#include "wcdp/model.hpp"

namespace wcdp {

/// Per-period multipliers mu_0..mu_tau, each an L-vector, stored row-major [t*L + l].
struct MultiplierPath {
    int L = 0;
    int periods = 0;
    numvec mu;

    MultiplierPath() = default;
    MultiplierPath(int L_, int periods_, double fill = 0.0)
        : L(L_), periods(periods_), mu(static_cast<std::size_t>(L_) * periods_, fill) {}
    /// (lambda, ..., lambda) over `periods` periods.
    static MultiplierPath constant(const numvec& lambda, int periods);

    double& at(int t, int l) { return mu[static_cast<std::size_t>(t) * L + l]; }
    double at(int t, int l) const { return mu[static_cast<std::size_t>(t) * L + l]; }
};

/**
 * Scenario-independent tables of the relaxed inner problem for a separable H:
 * per project the integrand g^n(x,a) = R^n + beta E[H^n(x')] - H^n(x) over its own
 * admissible actions, plus the constant -(1-beta) theta paid every period.
 */
class RelaxedContext {
public:
    RelaxedContext(const WeaklyCoupledModel& model, const Penalty& penalty);

    const WeaklyCoupledModel& model() const { return *model_; }
    double integrand(int n, int x, int a) const {
        return g_[n][static_cast<std::size_t>(x) * model_->subproblems[n].action_count + a];
    }
    double theta() const { return theta_; }
    const numvec& lambda() const { return lambda_; }
    double penalty_value(const JointState& x) const;
    double penalty_sup() const { return penalty_sup_; }

private:
    const WeaklyCoupledModel* model_;
    std::vector<numvec> g_;
    std::vector<ValueTable> parts_;
    double theta_ = 0.0;
    double penalty_sup_ = 0.0;
    numvec lambda_;
};

struct RelaxedInnerResult {
    double value = 0.0;
    /// Per project: actions a^n_0..a^n_tau and visited states x^n_0..x^n_tau.
    std::vector<indvec> actions;
    std::vector<indvec> states;
    /// Per period b - sum_n B^n(x^n_t, a^n_t), row-major [t*L + l].
    MultiplierPath subgradient;
};

/// Per-project backward recursions at fixed mu; cost linear in N.
RelaxedInnerResult relaxed_inner_eval(const RelaxedContext& ctx, const Scenario& scenario, const JointState& x0,
                                      const MultiplierPath& mu, Execution exec = Execution::serial);

/// Re-evaluates the objective of given per-project sequences (used to check that results are consistent).
double relaxed_objective(const RelaxedContext& ctx, const Scenario& scenario, const JointState& x0,
                         const MultiplierPath& mu, const std::vector<indvec>& actions);

/// The subgradient carried by a result (summed across projects per period).
inline const MultiplierPath& inner_subgradient(const RelaxedInnerResult& r) { return r.subgradient; }

struct MuSolverConfig {
    /// Step s0 / (1 + k / kappa).
    double step0 = 1.0;
    double kappa = 50.0;
    int max_iters = 200;
    /// Stop when the subgradient norm is at most this (0 means exactly zero).
    double stop_tol = 0.0;
};

struct MuSolveResult {
    MultiplierPath mu;
    double value = 0.0;
    double initial_value = 0.0;
    /// Objective at every iterate, and best value seen so far.
    std::vector<double> trace;
    std::vector<double> best_trace;
    int iterations = 0;
    double final_subgradient_norm = 0.0;
};

/**
 * Projected subgradient descent on mu >= 0 for any relaxed inner evaluator
 * `eval(mu) -> RelaxedInnerResult`; keeps the best iterate.
 */
template <class Eval>
MuSolveResult projected_mu_descent(Eval&& eval, const MultiplierPath& init, const MuSolverConfig& cfg) {
    if (cfg.max_iters < 1) throw ConfigError("max_iters must be positive");
    if (!(cfg.step0 > 0.0) || !(cfg.kappa > 0.0)) throw ConfigError("step0 and kappa must be positive");
    MuSolveResult out;
    MultiplierPath mu = init;
    for (double& m : mu.mu) m = std::max(0.0, m);
    double best = inf;
    for (int k = 0; k < cfg.max_iters; ++k) {
        const RelaxedInnerResult r = eval(mu);
        out.trace.push_back(r.value);
        if (k == 0) out.initial_value = r.value;
        double norm2 = 0.0;
        for (double g : r.subgradient.mu) norm2 += g * g;
        out.final_subgradient_norm = std::sqrt(norm2);
        if (r.value < best) {
            best = r.value;
            out.mu = mu;
        }
        out.best_trace.push_back(best);
        out.iterations = k + 1;
        if (out.final_subgradient_norm <= cfg.stop_tol) break;
        const double step = cfg.step0 / (1.0 + k / cfg.kappa);
        for (std::size_t i = 0; i < mu.mu.size(); ++i)
            mu.mu[i] = std::max(0.0, mu.mu[i] - step * r.subgradient.mu[i]);
    }
    out.value = best;
    return out;
}

/// Projected subgradient descent on mu >= 0; returns the best iterate.
MuSolveResult minimize_mu(const RelaxedContext& ctx, const Scenario& scenario, const JointState& x0,
                          const MultiplierPath& init, const MuSolverConfig& cfg = {});

/// H(x0) + mean over scenarios of the relaxed inner minimum started at (lambda, ..., lambda).
/// With trunc >= 0 the inner horizon is min(tau, trunc).
BoundEstimate estimate_practical_bound(const RelaxedContext& ctx, const JointState& x0, const EstimatorConfig& est,
                                       const MuSolverConfig& solver = {}, int trunc = -1);

BoundEstimate estimate_truncated_bound(const RelaxedContext& ctx, const JointState& x0, const EstimatorConfig& est,
                                       const MuSolverConfig& solver, int trunc);

/**
 * Relaxed inner values for an increasing list of truncation horizons on one scenario.
 * Each horizon starts from the best multipliers of the previous one, extended with
 * lambda, so for H = J^lambda the values are non-increasing in T up to rounding.
 */
std::vector<double> truncation_chain(const RelaxedContext& ctx, const Scenario& scenario, const JointState& x0,
                                     const std::vector<int>& horizons, const MuSolverConfig& cfg = {});

struct LpOracleResult {
    double primal_value = 0.0;
    double dual_value = 0.0;
    /// weights[n][k]: probability on the k-th action sequence of project n.
    std::vector<numvec> weights;
    std::vector<std::vector<indvec>> sequences;
    MultiplierPath mu;
};

/// Convexified inner problem as an explicit LP over enumerated per-project action sequences.
/// Throws GuardError when sum_n |A^n|^{tau+1} exceeds 1e5.
LpOracleResult inner_lp_oracle(const RelaxedContext& ctx, const Scenario& scenario, const JointState& x0);

struct GapCertificate {
    /// Gamma^n = sup - inf of the project's Bellman error over (x, a in A^n(x)).
    numvec gamma;
    double prefactor = 0.0;
    double bound = 0.0;
    /// The bound presumes the separable duality-gap assumptions for every scenario and horizon.
    const char* label = "conditional on Assumptions 1-3";
};

GapCertificate gap_certificate(const WeaklyCoupledModel& model, const Penalty& penalty);

struct UniformGammaReport {
    double C = 0.0;
    double limit = 0.0;
    numvec gamma;
    bool pass = false;
};

/// Checks Gamma^n <= 4C/(1-beta) for H = J^lambda, C = max_n max(|R^n|, |R^n - lambda'B^n|).
UniformGammaReport uniform_gamma_check(const WeaklyCoupledModel& model, const numvec& lambda);

} // namespace wcdp
