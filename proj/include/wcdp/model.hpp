#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wcdp/common.hpp"
#include "wcdp/estimate.hpp"
#include "wcdp/parallel.hpp"

namespace wcdp {

/**
 * One finite-state project. Actions are indices in [0, action_count); each state
 * lists the subset admissible there. Tables are dense and row-major:
 *
 *   transition[(x*A + a)*S + x'] = P(x' | x, a)
 *   reward[x*A + a]
 *   weight[(x*A + a)*L + l]      (resource consumption of row l)
 *
 * Entries for inadmissible (x, a) pairs are ignored.
 */
struct SubproblemSpec {
    int state_count = 0;
    int action_count = 0;
    std::vector<indvec> action_sets;
    numvec transition;
    numvec reward;
    numvec weight;

    double P(int x, int a, int xn) const {
        return transition[(static_cast<std::size_t>(x) * action_count + a) * state_count + xn];
    }
    double R(int x, int a) const { return reward[static_cast<std::size_t>(x) * action_count + a]; }
    double B(int x, int a, int l, int L) const {
        return weight[(static_cast<std::size_t>(x) * action_count + a) * L + l];
    }
    const double* B_row(int x, int a, int L) const {
        return weight.data() + (static_cast<std::size_t>(x) * action_count + a) * L;
    }
    const double* P_row(int x, int a) const {
        return transition.data() + (static_cast<std::size_t>(x) * action_count + a) * state_count;
    }
};

/// N projects that share the linking constraint sum_n B^n(x^n, a^n) <= budget.
struct WeaklyCoupledModel {
    std::vector<SubproblemSpec> subproblems;
    numvec budget;
    double discount = 0.9;
    /// Optional per-project action that is always affordable; used as the
    /// feasibility certificate when the joint space is too large to enumerate.
    std::optional<indvec> null_actions;

    int N() const { return static_cast<int>(subproblems.size()); }
    int L() const { return static_cast<int>(budget.size()); }
};

/// A single diagnostic produced by validate_model.
struct Violation {
    int subproblem = -1;
    int state = -1;
    int action = -1;
    std::string message;
};

std::vector<Violation> validate_model(const WeaklyCoupledModel& model);

/// Throws ModelError listing the first few violations, if any.
void require_valid(const WeaklyCoupledModel& model);

/// Mixed-radix encoding of joint states, first project varying fastest.
class JointIndexer {
public:
    explicit JointIndexer(const WeaklyCoupledModel& model);
    explicit JointIndexer(const std::vector<int>& sizes);

    /// Total number of joint states; throws GuardError above `limit`.
    std::size_t size() const { return size_; }
    std::size_t encode(const JointState& x) const;
    JointState decode(std::size_t index) const;
    std::size_t stride(int n) const { return strides_[n]; }
    int dim(int n) const { return sizes_[n]; }

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 1;
};

/// Joint state count, or GuardError if it exceeds `limit`.
std::size_t joint_state_count(const WeaklyCoupledModel& model, std::size_t limit = max_joint_states);

/// Total resource use B(x, a) = sum_n B^n(x^n, a^n).
numvec joint_weight(const WeaklyCoupledModel& model, const JointState& x, const JointAction& a);
double joint_reward(const WeaklyCoupledModel& model, const JointState& x, const JointAction& a);
bool is_feasible(const WeaklyCoupledModel& model, const JointState& x, const JointAction& a);

/**
 * The feasible set of joint actions at x. Candidates are generated with the
 * first project's action varying fastest (N=2 binary: (0,0),(1,0),(0,1),(1,1)),
 * and that order is also the tie-break order everywhere in the library.
 */
std::vector<JointAction> feasible_joint_actions(const WeaklyCoupledModel& model, const JointState& x);

/// Visits the same set in the same order without materializing it (budget-pruned search).
void for_each_feasible_joint_action(const WeaklyCoupledModel& model, const JointState& x,
                                    const std::function<void(const JointAction&)>& f);

/// Exact E[f(x') | x, a] for a joint table f via successive per-project contraction.
double joint_expectation(const WeaklyCoupledModel& model, const JointIndexer& index,
                         const ValueTable& f, const JointState& x, const JointAction& a);

/**
 * The joint MDP restricted to feasible actions, in compressed rows: state s owns
 * actions [action_begin[s], action_begin[s+1]); action k owns transition entries
 * [trans_begin[k], trans_begin[k+1]) of (next, prob).
 */
struct JointTables {
    JointIndexer index;
    std::vector<std::size_t> action_begin;
    std::vector<JointAction> actions;
    numvec reward;
    std::vector<std::size_t> trans_begin;
    std::vector<std::size_t> next;
    numvec prob;

    std::size_t state_count() const { return index.size(); }
    /// sum_x' P(x'|x,a) f(x') for the k-th flattened action.
    double expect(std::size_t k, const ValueTable& f) const {
        double s = 0.0;
        for (std::size_t e = trans_begin[k]; e < trans_begin[k + 1]; ++e) s += prob[e] * f[next[e]];
        return s;
    }
};

/// Throws GuardError above max_joint_states and ModelError at a state with no feasible action.
JointTables build_joint_tables(const WeaklyCoupledModel& model);

struct JointValueResult {
    ValueTable value;
    /// Greedy joint action per encoded joint state.
    std::vector<JointAction> policy;
    double residual = 0.0;
    int iterations = 0;
};

/// Value iteration on the exact joint Bellman equation. Default tol is 1e-9 * max|R|.
/// The iterate is finished with exact policy evaluation, so the greedy policy's
/// value is a fixed point to rounding error rather than to tol.
JointValueResult joint_value_iteration(const WeaklyCoupledModel& model, double tol = -1.0,
                                       int max_iters = 1'000'000);

/// Inverse CDF of P(. | x, a): smallest x' whose cumulative mass exceeds u.
int deterministic_transition(const SubproblemSpec& sp, int x, int a, double u);

/// A realized horizon and the uniforms u^n_t, t = 1..tau+1, that drive transitions.
struct Scenario {
    int tau = 0;
    int N = 0;
    std::uint64_t seed = 0;
    /// uniforms[(t-1)*N + n] moves project n from period t-1 to period t.
    numvec uniforms;

    double u(int n, int t) const { return uniforms[static_cast<std::size_t>(t - 1) * N + n]; }

    /// The same scenario cut to horizon T <= tau (a prefix of the uniforms).
    Scenario truncated(int T) const {
        Scenario s = *this;
        if (T < tau) {
            s.tau = T;
            s.uniforms.resize(static_cast<std::size_t>(T + 1) * N);
        }
        return s;
    }
};

Scenario sample_scenario(const WeaklyCoupledModel& model, std::uint64_t seed, int horizon);
Scenario sample_scenario(int N, std::uint64_t seed, int horizon);

/// Next joint state under scenario period t (uses u^n_t).
JointState scenario_step(const WeaklyCoupledModel& model, const Scenario& s, int t,
                         const JointState& x, const JointAction& a);

using StationaryPolicy = std::function<JointAction(const JointState&)>;

/// Discounted reward of `policy` from x0, n_paths independent paths truncated at path_horizon.
BoundEstimate simulate_policy(const WeaklyCoupledModel& model, const StationaryPolicy& policy,
                              const JointState& x0, std::size_t n_paths, int path_horizon,
                              std::uint64_t seed, Execution exec = Execution::parallel);

/// Smallest horizon with beta^{h+1} * Rmax / (1 - beta) below rel_tol * max(1, Rmax/(1-beta)).
int default_path_horizon(const WeaklyCoupledModel& model, double rel_tol = 1e-6);

double max_abs_reward(const WeaklyCoupledModel& model);

/// Per-project marginals (product form) or an explicit table over joint states.
struct InitialDistribution {
    enum class Kind { product, joint };
    Kind kind = Kind::product;
    std::vector<numvec> marginals;
    numvec joint;

    static InitialDistribution uniform(const WeaklyCoupledModel& model);
    static InitialDistribution point(const WeaklyCoupledModel& model, const JointState& x);
    /// Marginal of project n (derived from the joint table when kind == joint).
    numvec marginal(const WeaklyCoupledModel& model, int n) const;
};

/// E_nu[f] for a joint table f.
double expectation(const WeaklyCoupledModel& model, const InitialDistribution& nu, const ValueTable& f);

} // namespace wcdp
