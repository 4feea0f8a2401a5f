#include "wcdp/finite_horizon.hpp"

#include <algorithm>
#include <cmath>

#include "wcdp/rng.hpp"

namespace wcdp {

namespace {

std::vector<WeaklyCoupledModel> all_stages(const FiniteHorizonModel& model) {
    std::vector<WeaklyCoupledModel> out;
    out.reserve(model.horizon + 1);
    for (int t = 0; t <= model.horizon; ++t) out.push_back(model.stage(t));
    return out;
}

double row_dot(const SubproblemSpec& sp, int x, int a, const ValueTable& h) {
    const double* row = sp.P_row(x, a);
    double e = 0.0;
    for (int y = 0; y < sp.state_count; ++y) e += row[y] * h[y];
    return e;
}

void check_penalty(const FiniteHorizonModel& model, const FhPenalty& p) {
    const std::size_t periods = static_cast<std::size_t>(model.horizon) + 2;
    if (p.separable) {
        if (p.theta.size() != periods || p.parts.size() != periods)
            throw ConfigError("finite-horizon penalty needs tables for periods 0..T+1");
        for (const auto& per : p.parts)
            if (static_cast<int>(per.size()) != model.N()) throw ConfigError("penalty needs one table per subproblem");
        bool zero = p.theta.back() == 0.0;
        for (const auto& h : p.parts.back())
            for (double v : h) zero = zero && v == 0.0;
        if (!zero) throw ConfigError("terminal penalty H_{T+1} must vanish");
    } else {
        if (p.tables.size() != periods) throw ConfigError("finite-horizon penalty needs tables for periods 0..T+1");
        for (double v : p.tables.back())
            if (v != 0.0) throw ConfigError("terminal penalty H_{T+1} must vanish");
    }
}

double penalty_at(const FhPenalty& p, const JointIndexer& index, int t, const JointState& x) {
    if (!p.separable) return p.tables[t][index.encode(x)];
    double v = p.theta[t];
    for (std::size_t n = 0; n < x.size(); ++n) v += p.parts[t][n][x[n]];
    return v;
}

double penalty_mean(const FhPenalty& p, const WeaklyCoupledModel& stage, const JointIndexer& index, int t,
                    const JointState& x, const JointAction& a) {
    if (!p.separable) return joint_expectation(stage, index, p.tables[t + 1], x, a);
    double v = p.theta[t + 1];
    for (int n = 0; n < stage.N(); ++n) v += row_dot(stage.subproblems[n], x[n], a[n], p.parts[t + 1][n]);
    return v;
}

// Scenario-independent integrands R_t + E[H_{t+1}] - H_t per (period, joint state, feasible action).
struct FhInnerTables {
    JointIndexer index;
    std::vector<std::vector<std::size_t>> begin;
    std::vector<std::vector<JointAction>> actions;
    std::vector<numvec> integrand;
    numvec h0;

    FhInnerTables(const FiniteHorizonModel& model, const FhPenalty& p, const std::vector<WeaklyCoupledModel>& st)
        : index(st[0]) {
        const std::size_t S = joint_state_count(st[0]);
        const int T = model.horizon;
        begin.resize(T + 1);
        actions.resize(T + 1);
        integrand.resize(T + 1);
        for (int t = 0; t <= T; ++t) {
            begin[t].push_back(0);
            for (std::size_t s = 0; s < S; ++s) {
                const JointState x = index.decode(s);
                const double h = penalty_at(p, index, t, x);
                for_each_feasible_joint_action(st[t], x, [&](const JointAction& a) {
                    actions[t].push_back(a);
                    integrand[t].push_back(joint_reward(st[t], x, a) + penalty_mean(p, st[t], index, t, x, a) - h);
                });
                begin[t].push_back(actions[t].size());
            }
        }
        for (std::size_t s = 0; s < S; ++s) h0.push_back(penalty_at(p, index, 0, index.decode(s)));
    }
};

double inner_with(const FhInnerTables& tab, const FiniteHorizonModel& model, const Scenario& sc,
                  const JointState& x0) {
    const std::size_t S = tab.index.size();
    const int N = model.N();
    numvec next(S, 0.0), cur(S, 0.0);
    for (int t = model.horizon; t >= 0; --t) {
        for (std::size_t s = 0; s < S; ++s) {
            const JointState x = tab.index.decode(s);
            double best = -inf;
            for (std::size_t k = tab.begin[t][s]; k < tab.begin[t][s + 1]; ++k) {
                const auto& a = tab.actions[t][k];
                std::size_t y = 0;
                for (int n = 0; n < N; ++n)
                    y += tab.index.stride(n) * static_cast<std::size_t>(deterministic_transition(
                                                    model.specs[t][n], x[n], a[n], sc.u(n, t + 1)));
                best = std::max(best, tab.integrand[t][k] + next[y]);
            }
            cur[s] = best;
        }
        std::swap(cur, next);
    }
    return next[tab.index.encode(x0)];
}

// Per-project integrands g^n_t(x,a) = R^n_t + E[H^n_{t+1}] - H^n_t(x), laid out [t][n][x*A + a].
using FhRelaxedTables = std::vector<std::vector<numvec>>;

FhRelaxedTables relaxed_tables(const FiniteHorizonModel& model, const FhPenalty& p) {
    if (!p.separable) throw ConfigError("the relaxed inner problem needs a separable penalty");
    FhRelaxedTables g(model.horizon + 1);
    for (int t = 0; t <= model.horizon; ++t)
        for (int n = 0; n < model.N(); ++n) {
            const auto& sp = model.specs[t][n];
            numvec v(static_cast<std::size_t>(sp.state_count) * sp.action_count, 0.0);
            for (int x = 0; x < sp.state_count; ++x)
                for (int a : sp.action_sets[x])
                    v[static_cast<std::size_t>(x) * sp.action_count + a] =
                        sp.R(x, a) + row_dot(sp, x, a, p.parts[t + 1][n]) - p.parts[t][n][x];
            g[t].push_back(std::move(v));
        }
    return g;
}

RelaxedInnerResult relaxed_with(const FhRelaxedTables& g, const FiniteHorizonModel& model, const FhPenalty& p,
                                const Scenario& sc, const JointState& x0, const MultiplierPath& mu) {
    const int N = model.N();
    const int L = model.L();
    const int T = model.horizon;
    if (mu.periods != T + 1 || mu.L != L) throw ConfigError("multiplier path does not match the horizon");
    RelaxedInnerResult res;
    res.actions.assign(N, indvec(T + 1));
    res.states.assign(N, indvec(T + 1));
    double value = -p.theta[0];
    for (int n = 0; n < N; ++n) {
        const int S = model.specs[0][n].state_count;
        const int A = model.specs[0][n].action_count;
        std::vector<int> best(static_cast<std::size_t>(T + 1) * S);
        numvec next(S, 0.0), cur(S, 0.0);
        for (int t = T; t >= 0; --t) {
            const auto& sp = model.specs[t][n];
            for (int x = 0; x < S; ++x) {
                double v = -inf;
                int arg = -1;
                for (int a : sp.action_sets[x]) {
                    double q = g[t][n][static_cast<std::size_t>(x) * A + a];
                    for (int l = 0; l < L; ++l) q -= mu.at(t, l) * sp.B(x, a, l, L);
                    q += next[deterministic_transition(sp, x, a, sc.u(n, t + 1))];
                    if (q > v) {
                        v = q;
                        arg = a;
                    }
                }
                cur[x] = v;
                best[static_cast<std::size_t>(t) * S + x] = arg;
            }
            std::swap(cur, next);
        }
        value += next[x0[n]];
        int x = x0[n];
        for (int t = 0; t <= T; ++t) {
            const int a = best[static_cast<std::size_t>(t) * S + x];
            res.states[n][t] = x;
            res.actions[n][t] = a;
            x = deterministic_transition(model.specs[t][n], x, a, sc.u(n, t + 1));
        }
    }
    res.subgradient = MultiplierPath(L, T + 1);
    for (int t = 0; t <= T; ++t)
        for (int l = 0; l < L; ++l) {
            double r = model.budgets[t][l];
            value += mu.at(t, l) * model.budgets[t][l];
            for (int n = 0; n < N; ++n) r -= model.specs[t][n].B(res.states[n][t], res.actions[n][t], l, L);
            res.subgradient.at(t, l) = r;
        }
    res.value = value;
    return res;
}

MultiplierPath initial_mu(const FiniteHorizonModel& model, const FhPenalty& p) {
    MultiplierPath mu(model.L(), model.horizon + 1);
    if (p.lambdas.size() == static_cast<std::size_t>(model.horizon + 1))
        for (int t = 0; t <= model.horizon; ++t)
            for (int l = 0; l < model.L(); ++l) mu.at(t, l) = p.lambdas[t][l];
    return mu;
}

} // namespace

WeaklyCoupledModel FiniteHorizonModel::stage(int t) const {
    WeaklyCoupledModel m;
    m.subproblems = specs.at(t);
    m.budget = budgets.at(t);
    m.discount = 0.5;
    m.null_actions = null_actions;
    return m;
}

void validate_finite_horizon(const FiniteHorizonModel& model) {
    if (model.horizon < 0) throw ConfigError("horizon must be non-negative");
    const std::size_t periods = static_cast<std::size_t>(model.horizon) + 1;
    if (model.specs.size() != periods || model.budgets.size() != periods)
        throw ModelError("finite-horizon model needs data for periods 0..T");
    for (std::size_t t = 0; t < periods; ++t) {
        if (model.specs[t].size() != model.specs[0].size() || model.budgets[t].size() != model.budgets[0].size())
            throw ModelError("project count and budget rows must not change across periods");
        for (std::size_t n = 0; n < model.specs[t].size(); ++n)
            if (model.specs[t][n].state_count != model.specs[0][n].state_count ||
                model.specs[t][n].action_count != model.specs[0][n].action_count)
                throw ModelError("state and action counts must not change across periods");
        require_valid(model.stage(static_cast<int>(t)));
    }
}

FiniteHorizonModel fold_discount(const WeaklyCoupledModel& model, int T) {
    FiniteHorizonModel fh;
    fh.horizon = T;
    fh.null_actions = model.null_actions;
    double scale = 1.0;
    for (int t = 0; t <= T; ++t) {
        auto specs = model.subproblems;
        for (auto& sp : specs)
            for (double& r : sp.reward) r *= scale;
        fh.specs.push_back(std::move(specs));
        fh.budgets.push_back(model.budget);
        scale *= model.discount;
    }
    return fh;
}

FhValueResult fh_value(const FiniteHorizonModel& model) {
    validate_finite_horizon(model);
    const auto st = all_stages(model);
    const JointIndexer index(st[0]);
    const std::size_t S = joint_state_count(st[0]);
    const int T = model.horizon;
    FhValueResult out;
    out.values.assign(T + 2, ValueTable(S, 0.0));
    out.policy.assign(T + 1, std::vector<JointAction>(S));
    for (int t = T; t >= 0; --t) {
        for (std::size_t s = 0; s < S; ++s) {
            const JointState x = index.decode(s);
            double best = -inf;
            for_each_feasible_joint_action(st[t], x, [&](const JointAction& a) {
                const double q = joint_reward(st[t], x, a) + joint_expectation(st[t], index, out.values[t + 1], x, a);
                if (q > best) {
                    best = q;
                    out.policy[t][s] = a;
                }
            });
            out.values[t][s] = best;
        }
    }
    return out;
}

double FhLagrangian::value(int t, const JointState& x) const {
    double v = constants[t];
    for (std::size_t n = 0; n < x.size(); ++n) v += parts[t][n][x[n]];
    return v;
}

FhLagrangian fh_lagrangian(const FiniteHorizonModel& model, const std::vector<numvec>& lambdas) {
    validate_finite_horizon(model);
    const int T = model.horizon;
    const int L = model.L();
    if (lambdas.size() != static_cast<std::size_t>(T + 1)) throw ConfigError("need one multiplier per period");
    for (const auto& lam : lambdas) {
        if (static_cast<int>(lam.size()) != L) throw ConfigError("multiplier has the wrong length");
        for (double v : lam)
            if (!(v >= 0.0)) throw ConfigError("multipliers must be non-negative");
    }
    FhLagrangian out;
    out.lambdas = lambdas;
    out.constants.assign(T + 2, 0.0);
    for (int t = T; t >= 0; --t) {
        double c = 0.0;
        for (int l = 0; l < L; ++l) c += lambdas[t][l] * model.budgets[t][l];
        out.constants[t] = out.constants[t + 1] + c;
    }
    out.parts.assign(T + 2, {});
    out.greedy.assign(T + 1, {});
    for (int n = 0; n < model.N(); ++n) out.parts[T + 1].emplace_back(model.specs[0][n].state_count, 0.0);
    for (int t = T; t >= 0; --t)
        for (int n = 0; n < model.N(); ++n) {
            const auto& sp = model.specs[t][n];
            ValueTable h(sp.state_count);
            indvec pick(sp.state_count, -1);
            for (int x = 0; x < sp.state_count; ++x) {
                double best = -inf;
                for (int a : sp.action_sets[x]) {
                    double q = sp.R(x, a) + row_dot(sp, x, a, out.parts[t + 1][n]);
                    for (int l = 0; l < L; ++l) q -= lambdas[t][l] * sp.B(x, a, l, L);
                    if (q > best) {
                        best = q;
                        pick[x] = a;
                    }
                }
                h[x] = best;
            }
            out.parts[t].push_back(std::move(h));
            out.greedy[t].push_back(std::move(pick));
        }
    return out;
}

std::vector<numvec> fh_lagrangian_subgradient(const FiniteHorizonModel& model, const FhLagrangian& bound,
                                              const JointState& x0) {
    const int T = model.horizon;
    const int L = model.L();
    std::vector<numvec> g = model.budgets;
    for (int n = 0; n < model.N(); ++n) {
        numvec d(model.specs[0][n].state_count, 0.0);
        d[x0[n]] = 1.0;
        for (int t = 0; t <= T; ++t) {
            const auto& sp = model.specs[t][n];
            numvec nd(sp.state_count, 0.0);
            for (int x = 0; x < sp.state_count; ++x) {
                if (d[x] == 0.0) continue;
                const int a = bound.greedy[t][n][x];
                for (int l = 0; l < L; ++l) g[t][l] -= d[x] * sp.B(x, a, l, L);
                const double* row = sp.P_row(x, a);
                for (int y = 0; y < sp.state_count; ++y) nd[y] += d[x] * row[y];
            }
            d = std::move(nd);
        }
    }
    return g;
}

FhLambdaSearchResult fh_optimal_lambda(const FiniteHorizonModel& model, const JointState& x0, double step0,
                                       int max_iters) {
    if (max_iters < 1 || !(step0 > 0.0)) throw ConfigError("lambda search needs positive step and iteration cap");
    std::vector<numvec> lam(model.horizon + 1, numvec(model.L(), 0.0));
    FhLambdaSearchResult out;
    out.objective = inf;
    for (int k = 0; k < max_iters; ++k) {
        auto b = fh_lagrangian(model, lam);
        const double v = b.value(0, x0);
        out.trace.push_back(v);
        const auto g = fh_lagrangian_subgradient(model, b, x0);
        if (v < out.objective) {
            out.objective = v;
            out.bound = b;
        }
        const double step = step0 / (1.0 + k);
        for (std::size_t t = 0; t < lam.size(); ++t)
            for (std::size_t l = 0; l < lam[t].size(); ++l) lam[t][l] = std::max(0.0, lam[t][l] - step * g[t][l]);
    }
    return out;
}

FhPenalty FhPenalty::zero(const FiniteHorizonModel& model) {
    FhPenalty p;
    p.theta.assign(model.horizon + 2, 0.0);
    p.parts.assign(model.horizon + 2, {});
    for (auto& per : p.parts)
        for (int n = 0; n < model.N(); ++n) per.emplace_back(model.specs[0][n].state_count, 0.0);
    p.lambdas.assign(model.horizon + 1, numvec(model.L(), 0.0));
    return p;
}

FhPenalty FhPenalty::from_lagrangian(const FhLagrangian& b) {
    FhPenalty p;
    p.theta = b.constants;
    p.parts = b.parts;
    p.lambdas = b.lambdas;
    return p;
}

FhPenalty FhPenalty::from_values(const FhValueResult& v) {
    FhPenalty p;
    p.separable = false;
    p.tables = v.values;
    return p;
}

Scenario fh_scenario(const FiniteHorizonModel& model, std::uint64_t seed, std::size_t k) {
    return sample_scenario(model.N(), derive_seed(seed, k), model.horizon);
}

double fh_inner_exact(const FiniteHorizonModel& model, const FhPenalty& penalty, const Scenario& sc,
                      const JointState& x0) {
    validate_finite_horizon(model);
    check_penalty(model, penalty);
    const auto st = all_stages(model);
    const FhInnerTables tab(model, penalty, st);
    return inner_with(tab, model, sc, x0);
}

BoundEstimate fh_info_bound(const FiniteHorizonModel& model, const FhPenalty& penalty, const JointState& x0,
                            std::size_t n_scenarios, std::uint64_t seed, Execution exec) {
    if (n_scenarios < 2) throw ConfigError("n_scenarios must be at least 2");
    validate_finite_horizon(model);
    check_penalty(model, penalty);
    const auto st = all_stages(model);
    const FhInnerTables tab(model, penalty, st);
    std::vector<double> samples(n_scenarios);
    for_each_index(n_scenarios, exec, [&](std::size_t k) {
        samples[k] = inner_with(tab, model, fh_scenario(model, seed, k), x0);
    });
    return summarize(std::move(samples), seed, tab.h0[tab.index.encode(x0)]);
}

RelaxedInnerResult fh_relaxed_inner_eval(const FiniteHorizonModel& model, const FhPenalty& penalty,
                                         const Scenario& sc, const JointState& x0, const MultiplierPath& mu) {
    check_penalty(model, penalty);
    return relaxed_with(relaxed_tables(model, penalty), model, penalty, sc, x0, mu);
}

MuSolveResult fh_minimize_mu(const FiniteHorizonModel& model, const FhPenalty& penalty, const Scenario& sc,
                             const JointState& x0, const MultiplierPath& init, const MuSolverConfig& cfg) {
    check_penalty(model, penalty);
    const auto g = relaxed_tables(model, penalty);
    return projected_mu_descent([&](const MultiplierPath& mu) { return relaxed_with(g, model, penalty, sc, x0, mu); },
                                init, cfg);
}

BoundEstimate fh_practical_bound(const FiniteHorizonModel& model, const FhPenalty& penalty, const JointState& x0,
                                 std::size_t n_scenarios, std::uint64_t seed, const MuSolverConfig& cfg,
                                 Execution exec) {
    if (n_scenarios < 2) throw ConfigError("n_scenarios must be at least 2");
    validate_finite_horizon(model);
    check_penalty(model, penalty);
    const auto g = relaxed_tables(model, penalty);
    const MultiplierPath init = initial_mu(model, penalty);
    std::vector<double> samples(n_scenarios);
    for_each_index(n_scenarios, exec, [&](std::size_t k) {
        const Scenario sc = fh_scenario(model, seed, k);
        samples[k] =
            projected_mu_descent([&](const MultiplierPath& mu) { return relaxed_with(g, model, penalty, sc, x0, mu); },
                                 init, cfg)
                .value;
    });
    double h0 = penalty.theta[0];
    for (int n = 0; n < model.N(); ++n) h0 += penalty.parts[0][n][x0[n]];
    return summarize(std::move(samples), seed, h0);
}

FhGapCertificate fh_gap_certificate(const FiniteHorizonModel& model, const FhPenalty& penalty) {
    validate_finite_horizon(model);
    check_penalty(model, penalty);
    const auto g = relaxed_tables(model, penalty);
    const int T = model.horizon;
    FhGapCertificate c;
    double worst = 0.0;
    for (int n = 0; n < model.N(); ++n) {
        numvec per(T + 1, 0.0);
        double total = 0.0;
        for (int t = 0; t <= T; ++t) {
            const auto& sp = model.specs[t][n];
            double lo = inf, hi = -inf;
            for (int x = 0; x < sp.state_count; ++x)
                for (int a : sp.action_sets[x]) {
                    const double v = g[t][n][static_cast<std::size_t>(x) * sp.action_count + a];
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            per[t] = hi - lo;
            total += per[t];
        }
        worst = std::max(worst, total);
        c.gamma.push_back(std::move(per));
    }
    c.prefactor = 1.0 + model.L() * (T + 1.0);
    c.bound = c.prefactor * worst;
    return c;
}

} // namespace wcdp
