#include "wcdp/inforelax.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wcdp/rng.hpp"

namespace wcdp {

namespace {

// Stream id for the horizon draw; project streams use ids 0..N-1.
constexpr std::uint64_t tau_stream = 0x7A75ULL << 32;

} // namespace

Penalty Penalty::zero(const WeaklyCoupledModel& model) {
    Penalty p;
    for (const auto& sp : model.subproblems) p.parts.emplace_back(sp.state_count, 0.0);
    p.lambda.assign(model.L(), 0.0);
    return p;
}

Penalty Penalty::from_lagrangian(const LagrangianBound& b) {
    Penalty p;
    p.theta = b.constant;
    p.parts = b.subproblem_values;
    p.lambda = b.lambda;
    return p;
}

Penalty Penalty::from_alp(const AlpBound& b) {
    Penalty p;
    p.theta = b.theta;
    p.parts = b.subproblem_values;
    return p;
}

Penalty Penalty::from_table(ValueTable table) {
    Penalty p;
    p.kind = Kind::joint;
    p.table = std::move(table);
    return p;
}

double Penalty::value(const WeaklyCoupledModel& model, const JointIndexer& index, const JointState& x) const {
    if (kind == Kind::joint) return table[index.encode(x)];
    double v = theta;
    for (int n = 0; n < model.N(); ++n) v += parts[n][x[n]];
    return v;
}

double Penalty::conditional_mean(const WeaklyCoupledModel& model, const JointIndexer& index, const JointState& x,
                                 const JointAction& a) const {
    if (kind == Kind::joint) return joint_expectation(model, index, table, x, a);
    double v = theta;
    for (int n = 0; n < model.N(); ++n) {
        const auto& sp = model.subproblems[n];
        const double* row = sp.P_row(x[n], a[n]);
        for (int xn = 0; xn < sp.state_count; ++xn) v += row[xn] * parts[n][xn];
    }
    return v;
}

double Penalty::sup_norm() const {
    if (kind == Kind::joint) {
        double m = 0.0;
        for (double v : table) m = std::max(m, std::abs(v));
        return m;
    }
    double m = std::abs(theta);
    for (const auto& h : parts) {
        double mh = 0.0;
        for (double v : h) mh = std::max(mh, std::abs(v));
        m += mh;
    }
    return m;
}

int sample_tau(double beta, double u) {
    // Closed form, then nudged so the defining inequality holds exactly in floating point.
    int t = static_cast<int>(std::max(0.0, std::ceil(std::log1p(-u) / std::log(beta)) - 1.0));
    while (t > 0 && 1.0 - std::pow(beta, t) > u) --t;
    while (!(1.0 - std::pow(beta, t + 1) > u)) ++t;
    return t;
}

int default_tau_cap(double beta) {
    int t = 0;
    while (!(std::pow(beta, t + 1) < 1e-6)) ++t;
    return t;
}

Scenario make_scenario(int N, double beta, std::uint64_t seed, std::size_t k, int tau_cap) {
    const std::uint64_t key = derive_seed(seed, k);
    int tau = 0;
    for (std::uint64_t attempt = 0;; ++attempt) {
        tau = sample_tau(beta, counter_uniform(key, tau_stream, attempt));
        if (tau <= tau_cap) break;
    }
    return sample_scenario(N, key, tau);
}

InnerContext::InnerContext(const WeaklyCoupledModel& model, const Penalty& penalty)
    : model_(&model), index_(model) {
    require_valid(model);
    const std::size_t S = joint_state_count(model);
    if (penalty.kind == Penalty::Kind::joint && penalty.table.size() != S)
        throw ConfigError("joint penalty table does not match the joint state space");
    if (penalty.kind == Penalty::Kind::separable && static_cast<int>(penalty.parts.size()) != model.N())
        throw ConfigError("separable penalty needs one table per subproblem");
    const double beta = model.discount;
    action_begin_.reserve(S + 1);
    action_begin_.push_back(0);
    for (std::size_t s = 0; s < S; ++s) {
        const JointState x = index_.decode(s);
        const double h = penalty.value(model, index_, x);
        h_.push_back(h);
        for_each_feasible_joint_action(model, x, [&](const JointAction& a) {
            if (!is_feasible(model, x, a)) return;
            const double g = joint_reward(model, x, a) + beta * penalty.conditional_mean(model, index_, x, a) - h;
            actions_.push_back(a);
            integrand_.push_back(g);
            max_abs_ = std::max(max_abs_, std::abs(g));
        });
        if (actions_.size() == action_begin_.back()) {
            std::ostringstream os;
            os << "no-feasible-action at joint state " << s;
            throw ModelError(os.str());
        }
        action_begin_.push_back(actions_.size());
    }
    penalty_sup_ = penalty.sup_norm();
}

std::size_t InnerContext::successor(std::size_t s, std::size_t k, const Scenario& sc, int t) const {
    const auto& a = actions_[k];
    std::size_t out = 0;
    for (int n = 0; n < model_->N(); ++n) {
        const int d = index_.dim(n);
        const int x = static_cast<int>((s / index_.stride(n)) % static_cast<std::size_t>(d));
        out += index_.stride(n) *
               static_cast<std::size_t>(deterministic_transition(model_->subproblems[n], x, a[n], sc.u(n, t + 1)));
    }
    return out;
}

std::size_t InnerContext::find_action(std::size_t s, const JointAction& a) const {
    for (std::size_t k = action_begin_[s]; k < action_begin_[s + 1]; ++k)
        if (actions_[k] == a) return k;
    return npos;
}

InnerResult inner_exact(const InnerContext& ctx, const Scenario& sc, const JointState& x0, bool prune) {
    const int tau = sc.tau;
    const std::size_t S = ctx.index().size();
    const std::size_t s0 = ctx.index().encode(x0);

    // Period-t state sets (sorted), either reachable from x0 or everything.
    std::vector<std::vector<std::size_t>> states(tau + 1);
    if (prune) {
        std::vector<char> mark(S, 0);
        states[0] = {s0};
        for (int t = 0; t < tau; ++t) {
            auto& nxt = states[t + 1];
            for (std::size_t s : states[t])
                for (std::size_t k = ctx.action_begin(s); k < ctx.action_end(s); ++k) {
                    const std::size_t y = ctx.successor(s, k, sc, t);
                    if (!mark[y]) {
                        mark[y] = 1;
                        nxt.push_back(y);
                    }
                }
            for (std::size_t y : nxt) mark[y] = 0;
            std::sort(nxt.begin(), nxt.end());
        }
    } else {
        std::vector<std::size_t> all(S);
        for (std::size_t s = 0; s < S; ++s) all[s] = s;
        for (int t = 0; t <= tau; ++t) states[t] = all;
    }

    numvec w_next(S, 0.0), w_cur(S, 0.0);
    std::vector<std::vector<std::size_t>> choice(tau + 1);
    for (int t = tau; t >= 0; --t) {
        choice[t].resize(states[t].size());
        for (std::size_t i = 0; i < states[t].size(); ++i) {
            const std::size_t s = states[t][i];
            double best = -inf;
            std::size_t arg = ctx.action_begin(s);
            for (std::size_t k = ctx.action_begin(s); k < ctx.action_end(s); ++k) {
                double v = ctx.integrand(k);
                if (t < tau) v += w_next[ctx.successor(s, k, sc, t)];
                if (v > best) {
                    best = v;
                    arg = k;
                }
            }
            w_cur[s] = best;
            choice[t][i] = arg;
        }
        w_next.swap(w_cur);
    }

    InnerResult res;
    res.horizon = tau;
    res.value = w_next[s0];
    std::size_t s = s0;
    for (int t = 0; t <= tau; ++t) {
        const auto it = std::lower_bound(states[t].begin(), states[t].end(), s);
        const std::size_t k = choice[t][static_cast<std::size_t>(it - states[t].begin())];
        res.states.push_back(ctx.index().decode(s));
        res.actions.push_back(ctx.action(k));
        if (t < tau) s = ctx.successor(s, k, sc, t);
    }
    return res;
}

InnerResult inner_exact(const WeaklyCoupledModel& model, const Penalty& penalty, const Scenario& scenario,
                        const JointState& x0) {
    const InnerContext ctx(model, penalty);
    return inner_exact(ctx, scenario, x0);
}

double inner_objective(const InnerContext& ctx, const Scenario& sc, const JointState& x0,
                       const std::vector<JointAction>& actions) {
    std::size_t s = ctx.index().encode(x0);
    double total = 0.0;
    for (int t = 0; t <= sc.tau; ++t) {
        const std::size_t k = ctx.find_action(s, actions[t]);
        if (k == InnerContext::npos) throw ModelError("action sequence leaves the feasible set");
        total += ctx.integrand(k);
        if (t < sc.tau) s = ctx.successor(s, k, sc, t);
    }
    return total;
}

BoundEstimate estimate_info_bound(const InnerContext& ctx, const JointState& x0, const EstimatorConfig& cfg) {
    if (cfg.n_scenarios < 2) throw ConfigError("n_scenarios must be at least 2");
    const auto& model = ctx.model();
    const double beta = model.discount;
    const int cap = cfg.tau_cap > 0 ? cfg.tau_cap : default_tau_cap(beta);
    std::vector<double> samples(cfg.n_scenarios);
    for_each_index(cfg.n_scenarios, cfg.exec, [&](std::size_t k) {
        const Scenario sc = make_scenario(model.N(), beta, cfg.seed, k, cap);
        samples[k] = inner_exact(ctx, sc, x0).value;
    });
    auto est = summarize(std::move(samples), cfg.seed, ctx.penalty_value(ctx.index().encode(x0)));
    est.bias_bound = std::pow(beta, cap + 1) * 2.0 * ctx.penalty_sup() / (1.0 - beta);
    return est;
}

BoundEstimate estimate_info_bound(const WeaklyCoupledModel& model, const Penalty& penalty, const JointState& x0,
                                  const EstimatorConfig& cfg) {
    const InnerContext ctx(model, penalty);
    return estimate_info_bound(ctx, x0, cfg);
}

SupersolutionReport supersolution_check(const InnerContext& ctx) {
    SupersolutionReport rep;
    rep.epsilon = inf;
    for (std::size_t s = 0; s < ctx.index().size(); ++s)
        for (std::size_t k = ctx.action_begin(s); k < ctx.action_end(s); ++k)
            if (-ctx.integrand(k) < rep.epsilon) {
                rep.epsilon = -ctx.integrand(k);
                rep.argmin_state = s;
                rep.argmin_action = ctx.action(k);
            }
    rep.in_D_star = rep.epsilon >= -1e-9;
    return rep;
}

SupersolutionReport supersolution_check(const WeaklyCoupledModel& model, const Penalty& penalty) {
    return supersolution_check(InnerContext(model, penalty));
}

ConsistencyReport greedy_consistency_certificate(const InnerContext& ctx, const StationaryPolicy& policy,
                                                 const std::vector<Scenario>& scenarios,
                                                 const std::vector<int>& horizons, double tol) {
    ConsistencyReport rep;
    const std::size_t S = ctx.index().size();
    rep.argmax_pass.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        const JointState x = ctx.index().decode(s);
        const std::size_t k = ctx.find_action(s, policy(x));
        double best = -inf;
        for (std::size_t j = ctx.action_begin(s); j < ctx.action_end(s); ++j) best = std::max(best, ctx.integrand(j));
        rep.argmax_pass[s] = k != InnerContext::npos && ctx.integrand(k) >= best - tol * (1.0 + std::abs(best));
        rep.all_pass = rep.all_pass && rep.argmax_pass[s];
    }
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        for (int T : horizons) {
            if (T > scenarios[i].tau) continue;
            const Scenario sc = scenarios[i].truncated(T);
            for (std::size_t s0 = 0; s0 < S; ++s0) {
                ConsistencyReport::Case c;
                c.scenario = i;
                c.T = T;
                c.x0 = s0;
                const JointState x0 = ctx.index().decode(s0);
                c.inner_optimum = inner_exact(ctx, sc, x0).value;
                // The policy's own path on this scenario.
                std::vector<JointAction> acts;
                std::size_t s = s0;
                for (int t = 0; t <= T; ++t) {
                    const JointAction a = policy(ctx.index().decode(s));
                    const std::size_t k = ctx.find_action(s, a);
                    if (k == InnerContext::npos) throw ModelError("infeasible-policy-action in certificate");
                    acts.push_back(a);
                    if (t < T) s = ctx.successor(s, k, sc, t);
                }
                c.policy_value = inner_objective(ctx, sc, x0, acts);
                c.pass = std::abs(c.inner_optimum - c.policy_value) <= tol * (1.0 + std::abs(c.inner_optimum));
                rep.all_pass = rep.all_pass && c.pass;
                rep.cases.push_back(c);
            }
        }
    }
    return rep;
}

} // namespace wcdp
