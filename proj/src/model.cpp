#include "wcdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "wcdp/rng.hpp"

namespace wcdp {

namespace {

constexpr double budget_tol = 1e-9;
constexpr std::size_t exhaustive_feasibility_limit = 10'000;

bool fits(const numvec& use, const numvec& budget) {
    for (std::size_t l = 0; l < budget.size(); ++l)
        if (use[l] > budget[l] + budget_tol * (1.0 + std::abs(budget[l]))) return false;
    return true;
}

void validate_subproblem(const SubproblemSpec& sp, int n, int L, std::vector<Violation>& out) {
    auto add = [&](int x, int a, std::string msg) { out.push_back({n, x, a, std::move(msg)}); };
    if (sp.state_count <= 0 || sp.action_count <= 0) {
        add(-1, -1, "state_count and action_count must be positive");
        return;
    }
    const std::size_t S = sp.state_count, A = sp.action_count;
    if (sp.action_sets.size() != S) add(-1, -1, "action_sets must have one entry per state");
    if (sp.transition.size() != S * A * S) add(-1, -1, "transition table has wrong size");
    if (sp.reward.size() != S * A) add(-1, -1, "reward table has wrong size");
    if (sp.weight.size() != S * A * static_cast<std::size_t>(L)) add(-1, -1, "weight table has wrong size");
    if (!out.empty() && out.back().subproblem == n) return;

    for (int x = 0; x < sp.state_count; ++x) {
        const auto& acts = sp.action_sets[x];
        if (acts.empty()) add(x, -1, "state has no admissible action");
        for (std::size_t i = 0; i < acts.size(); ++i) {
            const int a = acts[i];
            if (a < 0 || a >= sp.action_count) {
                add(x, a, "action index out of range");
                continue;
            }
            if (i > 0 && acts[i - 1] >= a) add(x, a, "action_sets entries must be strictly increasing");
            double sum = 0.0;
            bool negative = false;
            for (int xn = 0; xn < sp.state_count; ++xn) {
                const double p = sp.P(x, a, xn);
                if (!(p >= 0.0) || !std::isfinite(p)) negative = true;
                sum += p;
            }
            if (negative) add(x, a, "transition probabilities must be finite and nonnegative");
            if (std::abs(sum - 1.0) > 1e-12) {
                std::ostringstream os;
                os << "transition row sums to " << sum;
                add(x, a, os.str());
            }
            if (!std::isfinite(sp.R(x, a))) add(x, a, "reward is not finite");
            for (int l = 0; l < L; ++l)
                if (!std::isfinite(sp.B(x, a, l, L))) add(x, a, "weight is not finite");
        }
    }
}

} // namespace

std::vector<Violation> validate_model(const WeaklyCoupledModel& model) {
    std::vector<Violation> out;
    if (!(model.discount > 0.0 && model.discount < 1.0)) out.push_back({-1, -1, -1, "discount must lie in (0,1)"});
    if (model.subproblems.empty()) out.push_back({-1, -1, -1, "model has no subproblems"});
    for (double b : model.budget)
        if (!std::isfinite(b)) out.push_back({-1, -1, -1, "budget entries must be finite"});
    const int L = model.L();
    for (int n = 0; n < model.N(); ++n) validate_subproblem(model.subproblems[n], n, L, out);
    if (!out.empty()) return out;

    if (model.null_actions && static_cast<int>(model.null_actions->size()) != model.N())
        out.push_back({-1, -1, -1, "null_actions must name one action per subproblem"});
    if (!out.empty()) return out;

    // Assumption 1: every joint state admits a feasible joint action.
    std::size_t count = 1;
    bool small = true;
    for (const auto& sp : model.subproblems) {
        if (count > exhaustive_feasibility_limit / static_cast<std::size_t>(sp.state_count)) small = false;
        count *= small ? static_cast<std::size_t>(sp.state_count) : 1;
    }
    if (small && count <= exhaustive_feasibility_limit) {
        JointIndexer index(model);
        for (std::size_t s = 0; s < index.size(); ++s) {
            const JointState x = index.decode(s);
            if (feasible_joint_actions(model, x).empty()) {
                std::ostringstream os;
                os << "no feasible joint action at joint state " << s;
                out.push_back({-1, static_cast<int>(s), -1, os.str()});
            }
        }
        return out;
    }
    if (!model.null_actions) {
        out.push_back({-1, -1, -1, "joint state space too large to enumerate and no null_actions certificate given"});
        return out;
    }
    // Certificate: sum over projects of the worst-case null-action use fits the budget.
    numvec worst(L, 0.0);
    for (int n = 0; n < model.N(); ++n) {
        const auto& sp = model.subproblems[n];
        const int a0 = (*model.null_actions)[n];
        numvec m(L, -inf);
        for (int x = 0; x < sp.state_count; ++x) {
            const auto& acts = sp.action_sets[x];
            if (!std::binary_search(acts.begin(), acts.end(), a0)) {
                out.push_back({n, x, a0, "null action is not admissible"});
                continue;
            }
            for (int l = 0; l < L; ++l) m[l] = std::max(m[l], sp.B(x, a0, l, L));
        }
        for (int l = 0; l < L; ++l) worst[l] += m[l];
    }
    if (out.empty() && !fits(worst, model.budget))
        out.push_back({-1, -1, -1, "null actions do not certify feasibility at every joint state"});
    return out;
}

void require_valid(const WeaklyCoupledModel& model) {
    const auto v = validate_model(model);
    if (v.empty()) return;
    std::ostringstream os;
    os << "invalid model (" << v.size() << " violation" << (v.size() > 1 ? "s" : "") << ")";
    for (std::size_t i = 0; i < std::min<std::size_t>(v.size(), 5); ++i) {
        os << "; ";
        if (v[i].subproblem >= 0) os << "subproblem " << v[i].subproblem << " ";
        if (v[i].state >= 0) os << "state " << v[i].state << " ";
        if (v[i].action >= 0) os << "action " << v[i].action << " ";
        os << v[i].message;
    }
    throw ModelError(os.str());
}

JointIndexer::JointIndexer(const WeaklyCoupledModel& model) {
    std::vector<int> sizes;
    for (const auto& sp : model.subproblems) sizes.push_back(sp.state_count);
    *this = JointIndexer(sizes);
}

JointIndexer::JointIndexer(const std::vector<int>& sizes) : sizes_(sizes), strides_(sizes.size()) {
    size_ = 1;
    for (std::size_t n = 0; n < sizes.size(); ++n) {
        strides_[n] = size_;
        const auto d = static_cast<std::size_t>(sizes[n]);
        if (d != 0 && size_ > std::numeric_limits<std::size_t>::max() / d / 2)
            throw GuardError("joint state space overflows");
        size_ *= d;
    }
}

std::size_t JointIndexer::encode(const JointState& x) const {
    std::size_t s = 0;
    for (std::size_t n = 0; n < sizes_.size(); ++n) s += strides_[n] * static_cast<std::size_t>(x[n]);
    return s;
}

JointState JointIndexer::decode(std::size_t index) const {
    JointState x(sizes_.size());
    for (std::size_t n = 0; n < sizes_.size(); ++n) {
        x[n] = static_cast<int>(index % sizes_[n]);
        index /= sizes_[n];
    }
    return x;
}

std::size_t joint_state_count(const WeaklyCoupledModel& model, std::size_t limit) {
    std::size_t count = 1;
    for (const auto& sp : model.subproblems) {
        const auto d = static_cast<std::size_t>(sp.state_count);
        if (count > limit / d) {
            std::ostringstream os;
            os << "state-space-too-large: joint state space exceeds " << limit << " states";
            throw GuardError(os.str());
        }
        count *= d;
    }
    return count;
}

numvec joint_weight(const WeaklyCoupledModel& model, const JointState& x, const JointAction& a) {
    const int L = model.L();
    numvec use(L, 0.0);
    for (int n = 0; n < model.N(); ++n) {
        const double* row = model.subproblems[n].B_row(x[n], a[n], L);
        for (int l = 0; l < L; ++l) use[l] += row[l];
    }
    return use;
}

double joint_reward(const WeaklyCoupledModel& model, const JointState& x, const JointAction& a) {
    double r = 0.0;
    for (int n = 0; n < model.N(); ++n) r += model.subproblems[n].R(x[n], a[n]);
    return r;
}

bool is_feasible(const WeaklyCoupledModel& model, const JointState& x, const JointAction& a) {
    if (static_cast<int>(a.size()) != model.N()) return false;
    for (int n = 0; n < model.N(); ++n) {
        const auto& acts = model.subproblems[n].action_sets[x[n]];
        if (!std::binary_search(acts.begin(), acts.end(), a[n])) return false;
    }
    return fits(joint_weight(model, x, a), model.budget);
}

void for_each_feasible_joint_action(const WeaklyCoupledModel& model, const JointState& x,
                                    const std::function<void(const JointAction&)>& f) {
    const int N = model.N(), L = model.L();
    // rest_min[n*L + l]: smallest possible use of row l by projects 0..n-1.
    numvec rest_min(static_cast<std::size_t>(N + 1) * L, 0.0);
    for (int n = 0; n < N; ++n) {
        const auto& sp = model.subproblems[n];
        for (int l = 0; l < L; ++l) {
            double m = inf;
            for (int a : sp.action_sets[x[n]]) m = std::min(m, sp.B(x[n], a, l, L));
            rest_min[static_cast<std::size_t>(n + 1) * L + l] = rest_min[static_cast<std::size_t>(n) * L + l] + m;
        }
    }
    JointAction a(N, 0);
    numvec used(L, 0.0);
    // Depth-first from the last project down so that the first project varies fastest.
    std::function<void(int)> visit = [&](int n) {
        if (n < 0) {
            f(a);
            return;
        }
        const auto& sp = model.subproblems[n];
        for (int act : sp.action_sets[x[n]]) {
            const double* row = sp.B_row(x[n], act, L);
            bool ok = true;
            for (int l = 0; l < L; ++l) {
                const double lo = used[l] + row[l] + rest_min[static_cast<std::size_t>(n) * L + l];
                if (lo > model.budget[l] + budget_tol * (1.0 + std::abs(model.budget[l]))) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            for (int l = 0; l < L; ++l) used[l] += row[l];
            a[n] = act;
            visit(n - 1);
            for (int l = 0; l < L; ++l) used[l] -= row[l];
        }
    };
    visit(N - 1);
}

std::vector<JointAction> feasible_joint_actions(const WeaklyCoupledModel& model, const JointState& x) {
    std::vector<JointAction> out;
    for_each_feasible_joint_action(model, x, [&](const JointAction& a) {
        // The running sum can drift from the direct sum by rounding; keep the direct test authoritative.
        if (fits(joint_weight(model, x, a), model.budget)) out.push_back(a);
    });
    return out;
}

namespace {

double contract(const WeaklyCoupledModel& model, const JointIndexer& index, const ValueTable& f,
                const JointState& x, const JointAction& a, int n, std::size_t offset) {
    if (n == model.N()) return f[offset];
    const auto& sp = model.subproblems[n];
    const double* row = sp.P_row(x[n], a[n]);
    double s = 0.0;
    for (int xn = 0; xn < sp.state_count; ++xn)
        if (row[xn] != 0.0) s += row[xn] * contract(model, index, f, x, a, n + 1, offset + index.stride(n) * xn);
    return s;
}

void push_support(const WeaklyCoupledModel& model, const JointIndexer& index, const JointState& x,
                  const JointAction& a, int n, std::size_t offset, double p, JointTables& t) {
    if (n == model.N()) {
        t.next.push_back(offset);
        t.prob.push_back(p);
        return;
    }
    const auto& sp = model.subproblems[n];
    const double* row = sp.P_row(x[n], a[n]);
    for (int xn = 0; xn < sp.state_count; ++xn)
        if (row[xn] != 0.0) push_support(model, index, x, a, n + 1, offset + index.stride(n) * xn, p * row[xn], t);
}

} // namespace

double joint_expectation(const WeaklyCoupledModel& model, const JointIndexer& index, const ValueTable& f,
                         const JointState& x, const JointAction& a) {
    return contract(model, index, f, x, a, 0, 0);
}

JointTables build_joint_tables(const WeaklyCoupledModel& model) {
    joint_state_count(model);
    JointTables t{JointIndexer(model), {}, {}, {}, {}, {}, {}};
    const std::size_t S = t.index.size();
    t.action_begin.reserve(S + 1);
    t.action_begin.push_back(0);
    t.trans_begin.push_back(0);
    for (std::size_t s = 0; s < S; ++s) {
        const JointState x = t.index.decode(s);
        auto acts = feasible_joint_actions(model, x);
        if (acts.empty()) {
            std::ostringstream os;
            os << "no-feasible-action at joint state " << s;
            throw ModelError(os.str());
        }
        for (auto& a : acts) {
            t.reward.push_back(joint_reward(model, x, a));
            push_support(model, t.index, x, a, 0, 0, 1.0, t);
            t.trans_begin.push_back(t.next.size());
            t.actions.push_back(std::move(a));
        }
        t.action_begin.push_back(t.actions.size());
    }
    return t;
}

double max_abs_reward(const WeaklyCoupledModel& model) {
    double m = 0.0;
    for (const auto& sp : model.subproblems)
        for (int x = 0; x < sp.state_count; ++x)
            for (int a : sp.action_sets[x]) m = std::max(m, std::abs(sp.R(x, a)));
    return m;
}

namespace {

// One Bellman sweep; returns the residual and writes greedy choices (flattened action index).
double bellman_sweep(const JointTables& t, double beta, const ValueTable& v, ValueTable& out,
                     std::vector<std::size_t>& choice) {
    double residual = 0.0;
    for (std::size_t s = 0; s < t.state_count(); ++s) {
        double best = -inf;
        std::size_t arg = t.action_begin[s];
        for (std::size_t k = t.action_begin[s]; k < t.action_begin[s + 1]; ++k) {
            const double q = t.reward[k] + beta * t.expect(k, v);
            if (q > best) {
                best = q;
                arg = k;
            }
        }
        out[s] = best;
        choice[s] = arg;
        residual = std::max(residual, std::abs(best - v[s]));
    }
    return residual;
}

bool evaluate_policy(const JointTables& t, double beta, const std::vector<std::size_t>& choice, ValueTable& v) {
    const auto S = static_cast<Eigen::Index>(t.state_count());
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs(S);
    for (Eigen::Index s = 0; s < S; ++s) {
        const std::size_t k = choice[s];
        trip.emplace_back(s, s, 1.0);
        for (std::size_t e = t.trans_begin[k]; e < t.trans_begin[k + 1]; ++e)
            trip.emplace_back(s, static_cast<Eigen::Index>(t.next[e]), -beta * t.prob[e]);
        rhs[s] = t.reward[k];
    }
    Eigen::SparseMatrix<double> m(S, S);
    m.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) return false;
    Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !sol.allFinite()) return false;
    for (Eigen::Index s = 0; s < S; ++s) v[s] = sol[s];
    return true;
}

// Greedy choice with ties resolved to the first (lowest-order) action within a relative epsilon.
std::vector<std::size_t> greedy(const JointTables& t, double beta, const ValueTable& v) {
    std::vector<std::size_t> choice(t.state_count());
    for (std::size_t s = 0; s < t.state_count(); ++s) {
        double best = -inf;
        for (std::size_t k = t.action_begin[s]; k < t.action_begin[s + 1]; ++k) {
            const double q = t.reward[k] + beta * t.expect(k, v);
            if (q > best + 1e-11 * (1.0 + std::abs(q))) {
                best = q;
                choice[s] = k;
            }
        }
    }
    return choice;
}

} // namespace

JointValueResult joint_value_iteration(const WeaklyCoupledModel& model, double tol, int max_iters) {
    require_valid(model);
    const JointTables t = build_joint_tables(model);
    const double beta = model.discount;
    if (tol <= 0.0) tol = 1e-9 * std::max(1.0, max_abs_reward(model));

    const std::size_t S = t.state_count();
    ValueTable v(S, 0.0), next(S, 0.0);
    std::vector<std::size_t> choice(S, 0);
    JointValueResult res;
    double residual = inf;
    int it = 0;
    while (it < max_iters && residual > tol) {
        residual = bellman_sweep(t, beta, v, next, choice);
        v.swap(next);
        ++it;
    }

    // Polish: policy iteration from the VI iterate until the greedy policy is stable.
    ValueTable trial = v;
    for (int round = 0; round < 50; ++round) {
        auto pol = greedy(t, beta, trial);
        ValueTable cand(S);
        if (!evaluate_policy(t, beta, pol, cand)) break;
        const double r = bellman_sweep(t, beta, cand, next, choice);
        const bool stable = pol == greedy(t, beta, cand);
        if (r <= residual) {
            v = cand;
            residual = r;
        }
        trial = cand;
        if (stable) break;
    }
    if (!(residual <= tol)) {
        std::ostringstream os;
        os << "value iteration did not reach tolerance " << tol << " (residual " << residual << ")";
        throw NumericalError(os.str());
    }

    const auto pol = greedy(t, beta, v);
    res.value = std::move(v);
    res.policy.resize(S);
    for (std::size_t s = 0; s < S; ++s) res.policy[s] = t.actions[pol[s]];
    res.residual = residual;
    res.iterations = it;
    return res;
}

int deterministic_transition(const SubproblemSpec& sp, int x, int a, double u) {
    const double* row = sp.P_row(x, a);
    double cum = 0.0;
    int last = 0;
    for (int xn = 0; xn < sp.state_count; ++xn) {
        if (row[xn] <= 0.0) continue;
        cum += row[xn];
        last = xn;
        if (cum > u) return xn;
    }
    // Rounding left the cumulative sum a hair below u: fall back to the last supported state.
    return last;
}

Scenario sample_scenario(int N, std::uint64_t seed, int horizon) {
    Scenario s;
    s.tau = horizon;
    s.N = N;
    s.seed = seed;
    s.uniforms.resize(static_cast<std::size_t>(horizon + 1) * N);
    for (int t = 1; t <= horizon + 1; ++t)
        for (int n = 0; n < N; ++n)
            s.uniforms[static_cast<std::size_t>(t - 1) * N + n] = counter_uniform(seed, n, t);
    return s;
}

Scenario sample_scenario(const WeaklyCoupledModel& model, std::uint64_t seed, int horizon) {
    return sample_scenario(model.N(), seed, horizon);
}

JointState scenario_step(const WeaklyCoupledModel& model, const Scenario& s, int t, const JointState& x,
                         const JointAction& a) {
    JointState out(x.size());
    for (int n = 0; n < model.N(); ++n)
        out[n] = deterministic_transition(model.subproblems[n], x[n], a[n], s.u(n, t));
    return out;
}

BoundEstimate simulate_policy(const WeaklyCoupledModel& model, const StationaryPolicy& policy,
                              const JointState& x0, std::size_t n_paths, int path_horizon, std::uint64_t seed,
                              Execution exec) {
    std::vector<double> samples(n_paths, 0.0);
    const double beta = model.discount;
    for_each_index(n_paths, exec, [&](std::size_t k) {
        const std::uint64_t path_seed = derive_seed(seed, k);
        JointState x = x0;
        double total = 0.0, disc = 1.0;
        for (int t = 0; t <= path_horizon; ++t) {
            const JointAction a = policy(x);
            if (!is_feasible(model, x, a)) {
                std::ostringstream os;
                os << "infeasible-policy-action at period " << t;
                throw ModelError(os.str());
            }
            total += disc * joint_reward(model, x, a);
            disc *= beta;
            for (int n = 0; n < model.N(); ++n)
                x[n] = deterministic_transition(model.subproblems[n], x[n], a[n], counter_uniform(path_seed, n, t + 1));
        }
        samples[k] = total;
    });
    return summarize(std::move(samples), seed);
}

int default_path_horizon(const WeaklyCoupledModel& model, double rel_tol) {
    // beta^{h+1} < rel_tol keeps the discarded tail below rel_tol of Rmax/(1-beta).
    const double h = std::ceil(std::log(rel_tol) / std::log(model.discount)) - 1.0;
    return std::max(0, static_cast<int>(h));
}

InitialDistribution InitialDistribution::uniform(const WeaklyCoupledModel& model) {
    InitialDistribution d;
    for (const auto& sp : model.subproblems) d.marginals.emplace_back(sp.state_count, 1.0 / sp.state_count);
    return d;
}

InitialDistribution InitialDistribution::point(const WeaklyCoupledModel& model, const JointState& x) {
    InitialDistribution d;
    for (int n = 0; n < model.N(); ++n) {
        numvec m(model.subproblems[n].state_count, 0.0);
        m[x[n]] = 1.0;
        d.marginals.push_back(std::move(m));
    }
    return d;
}

numvec InitialDistribution::marginal(const WeaklyCoupledModel& model, int n) const {
    if (kind == Kind::product) return marginals[n];
    JointIndexer index(model);
    numvec m(model.subproblems[n].state_count, 0.0);
    for (std::size_t s = 0; s < joint.size(); ++s) m[(s / index.stride(n)) % index.dim(n)] += joint[s];
    return m;
}

double expectation(const WeaklyCoupledModel& model, const InitialDistribution& nu, const ValueTable& f) {
    JointIndexer index(model);
    double total = 0.0;
    for (std::size_t s = 0; s < index.size(); ++s) {
        double p = 1.0;
        if (nu.kind == InitialDistribution::Kind::joint) {
            p = nu.joint[s];
        } else {
            const JointState x = index.decode(s);
            for (int n = 0; n < model.N(); ++n) p *= nu.marginals[n][x[n]];
        }
        if (p != 0.0) total += p * f[s];
    }
    return total;
}

} // namespace wcdp
