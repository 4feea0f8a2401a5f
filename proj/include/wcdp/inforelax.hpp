#pragma once

#include <cstdint>
#include <vector>

#include "wcdp/lagrangian.hpp"
#include "wcdp/model.hpp"

namespace wcdp {

/**
 * Value-function surrogate H that defines the penalty. Either separable,
 * H(x) = theta + sum_n H^n(x^n), or an arbitrary table over joint states.
 * Conditional means E[H(x') | x, a] are always computed exactly from the model.
 */
struct Penalty {
    enum class Kind { separable, joint };
    Kind kind = Kind::separable;
    double theta = 0.0;
    std::vector<ValueTable> parts;
    ValueTable table;
    /// Multiplier the separable H came from, if any; seeds the relaxed inner search.
    numvec lambda;

    static Penalty zero(const WeaklyCoupledModel& model);
    static Penalty from_lagrangian(const LagrangianBound& b);
    static Penalty from_alp(const AlpBound& b);
    static Penalty from_table(ValueTable table);

    double value(const WeaklyCoupledModel& model, const JointIndexer& index, const JointState& x) const;
    double conditional_mean(const WeaklyCoupledModel& model, const JointIndexer& index, const JointState& x,
                            const JointAction& a) const;
    /// sup |H|, used for the resampling bias bound.
    double sup_norm() const;
};

/// Smallest t with 1 - beta^{t+1} > u.
int sample_tau(double beta, double u);

/// Smallest t with beta^{t+1} < 1e-6.
int default_tau_cap(double beta);

/**
 * The k-th scenario of stream `seed`: tau is geometric (resampled above tau_cap)
 * and the uniforms come from a per-scenario key, so scenario k is identical in
 * every estimator that uses the same seed.
 */
Scenario make_scenario(int N, double beta, std::uint64_t seed, std::size_t k, int tau_cap);

/**
 * Scenario-independent data of the exact inner problem: for every joint state
 * its feasible actions and the integrand R + beta E[H(x')] - H(x). Built once
 * per (model, penalty) and shared read-only by all scenarios.
 */
class InnerContext {
public:
    InnerContext(const WeaklyCoupledModel& model, const Penalty& penalty);

    const WeaklyCoupledModel& model() const { return *model_; }
    const JointIndexer& index() const { return index_; }
    std::size_t action_begin(std::size_t s) const { return action_begin_[s]; }
    std::size_t action_end(std::size_t s) const { return action_begin_[s + 1]; }
    const JointAction& action(std::size_t k) const { return actions_[k]; }
    double integrand(std::size_t k) const { return integrand_[k]; }
    /// Encoded successor of joint state s under flattened action k in scenario period t.
    std::size_t successor(std::size_t s, std::size_t k, const Scenario& sc, int t) const;
    /// Flattened index of joint action a at state s, or npos when a is not feasible there.
    std::size_t find_action(std::size_t s, const JointAction& a) const;
    double max_abs_integrand() const { return max_abs_; }
    /// H at encoded joint state s.
    double penalty_value(std::size_t s) const { return h_[s]; }
    double penalty_sup() const { return penalty_sup_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    const WeaklyCoupledModel* model_;
    JointIndexer index_;
    std::vector<std::size_t> action_begin_;
    std::vector<JointAction> actions_;
    numvec integrand_;
    numvec h_;
    double max_abs_ = 0.0;
    double penalty_sup_ = 0.0;
};

struct InnerResult {
    double value = 0.0;
    int horizon = 0;
    /// Maximizing joint actions a_0..a_tau and the states they visit, x_0..x_tau.
    std::vector<JointAction> actions;
    std::vector<JointState> states;
};

/// Backward recursion over (t, joint state) with scenario-deterministic transitions.
/// `prune` restricts each period to states reachable from x0 (same result, less work).
InnerResult inner_exact(const InnerContext& ctx, const Scenario& scenario, const JointState& x0, bool prune = true);

InnerResult inner_exact(const WeaklyCoupledModel& model, const Penalty& penalty, const Scenario& scenario,
                        const JointState& x0);

/// Objective of a fixed action sequence on a scenario (for re-evaluation checks).
double inner_objective(const InnerContext& ctx, const Scenario& scenario, const JointState& x0,
                       const std::vector<JointAction>& actions);

struct EstimatorConfig {
    std::size_t n_scenarios = 1000;
    std::uint64_t seed = 1;
    /// <= 0 selects default_tau_cap(beta).
    int tau_cap = -1;
    Execution exec = Execution::parallel;
};

/// H(x0) + mean of the exact inner values; `bias_bound` is beta^{cap+1} 2 sup|H| / (1-beta).
BoundEstimate estimate_info_bound(const InnerContext& ctx, const JointState& x0, const EstimatorConfig& cfg);

BoundEstimate estimate_info_bound(const WeaklyCoupledModel& model, const Penalty& penalty, const JointState& x0,
                                  const EstimatorConfig& cfg);

struct SupersolutionReport {
    /// min over (x, a in A-bar(x)) of H(x) - R(x,a) - beta E[H(x')].
    double epsilon = 0.0;
    bool in_D_star = false;
    std::size_t argmin_state = 0;
    JointAction argmin_action;
};

SupersolutionReport supersolution_check(const InnerContext& ctx);
SupersolutionReport supersolution_check(const WeaklyCoupledModel& model, const Penalty& penalty);

struct ConsistencyReport {
    struct Case {
        std::size_t scenario = 0;
        int T = 0;
        std::size_t x0 = 0;
        double inner_optimum = 0.0;
        double policy_value = 0.0;
        bool pass = false;
    };
    std::vector<Case> cases;
    /// Per joint state: the policy action attains the one-step argmax of R + beta E[H].
    std::vector<bool> argmax_pass;
    bool all_pass = true;
};

/**
 * Falsification test of pathwise optimality: for each scenario, each T in `horizons`
 * and each start state, the exact inner optimum over the T-horizon must equal the
 * integrand accumulated by the policy itself. Passing on finitely many cases is
 * evidence, not proof, that the policy attains the information relaxation bound.
 */
ConsistencyReport greedy_consistency_certificate(const InnerContext& ctx, const StationaryPolicy& policy,
                                                 const std::vector<Scenario>& scenarios,
                                                 const std::vector<int>& horizons = {0, 1, 2}, double tol = 1e-9);

} // namespace wcdp
