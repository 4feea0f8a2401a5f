#include "wcdp/practical.hpp"

#include <algorithm>
#include <cmath>

#include "wcdp/lagrangian.hpp"
#include "wcdp/lp.hpp"

namespace wcdp {

namespace {

constexpr double sequence_limit = 1e5;

double dot_budget(const numvec& b, const MultiplierPath& mu, int t) {
    double s = 0.0;
    for (int l = 0; l < mu.L; ++l) s += mu.at(t, l) * b[l];
    return s;
}

// Bellman error R^n + beta E[H^n] - H^n for every (x, a) of one project; inadmissible
// entries stay at zero and are never read.
numvec project_integrand(const SubproblemSpec& sp, const ValueTable& h, double beta) {
    numvec g(static_cast<std::size_t>(sp.state_count) * sp.action_count, 0.0);
    for (int x = 0; x < sp.state_count; ++x) {
        for (int a : sp.action_sets[x]) {
            const double* row = sp.P_row(x, a);
            double e = 0.0;
            for (int y = 0; y < sp.state_count; ++y) e += row[y] * h[y];
            g[static_cast<std::size_t>(x) * sp.action_count + a] = sp.R(x, a) + beta * e - h[x];
        }
    }
    return g;
}

struct Spread {
    double lo = inf;
    double hi = -inf;
};

Spread integrand_spread(const SubproblemSpec& sp, const numvec& g) {
    Spread s;
    for (int x = 0; x < sp.state_count; ++x)
        for (int a : sp.action_sets[x]) {
            const double v = g[static_cast<std::size_t>(x) * sp.action_count + a];
            s.lo = std::min(s.lo, v);
            s.hi = std::max(s.hi, v);
        }
    return s;
}

} // namespace

MultiplierPath MultiplierPath::constant(const numvec& lambda, int periods) {
    MultiplierPath p(static_cast<int>(lambda.size()), periods);
    for (int t = 0; t < periods; ++t)
        for (int l = 0; l < p.L; ++l) p.at(t, l) = lambda[l];
    return p;
}

RelaxedContext::RelaxedContext(const WeaklyCoupledModel& model, const Penalty& penalty) : model_(&model) {
    require_valid(model);
    if (penalty.kind != Penalty::Kind::separable)
        throw ConfigError("the relaxed inner problem needs a separable penalty");
    if (static_cast<int>(penalty.parts.size()) != model.N())
        throw ConfigError("separable penalty needs one table per subproblem");
    for (int n = 0; n < model.N(); ++n) {
        const auto& sp = model.subproblems[n];
        if (static_cast<int>(penalty.parts[n].size()) != sp.state_count)
            throw ConfigError("penalty table size does not match subproblem state count");
        g_.push_back(project_integrand(sp, penalty.parts[n], model.discount));
    }
    parts_ = penalty.parts;
    theta_ = penalty.theta;
    penalty_sup_ = penalty.sup_norm();
    lambda_ = penalty.lambda.empty() ? numvec(model.L(), 0.0) : penalty.lambda;
    if (static_cast<int>(lambda_.size()) != model.L()) throw ConfigError("penalty lambda has the wrong length");
}

double RelaxedContext::penalty_value(const JointState& x) const {
    double v = theta_;
    for (int n = 0; n < model_->N(); ++n) v += parts_[n][x[n]];
    return v;
}

RelaxedInnerResult relaxed_inner_eval(const RelaxedContext& ctx, const Scenario& sc, const JointState& x0,
                                      const MultiplierPath& mu, Execution exec) {
    const auto& model = ctx.model();
    const int N = model.N();
    const int L = model.L();
    const int tau = sc.tau;
    if (mu.periods != tau + 1 || mu.L != L) throw ConfigError("multiplier path does not match the scenario horizon");

    RelaxedInnerResult res;
    res.actions.assign(N, indvec(tau + 1));
    res.states.assign(N, indvec(tau + 1));
    numvec w0(N, 0.0);

    for_each_index(static_cast<std::size_t>(N), exec, [&](std::size_t ni) {
        const int n = static_cast<int>(ni);
        const auto& sp = model.subproblems[n];
        const int S = sp.state_count;
        std::vector<int> best(static_cast<std::size_t>(tau + 1) * S);
        numvec next(S, 0.0), cur(S, 0.0);
        for (int t = tau; t >= 0; --t) {
            for (int x = 0; x < S; ++x) {
                double v = -inf;
                int arg = -1;
                for (int a : sp.action_sets[x]) {
                    double q = ctx.integrand(n, x, a);
                    const double* w = sp.B_row(x, a, L);
                    for (int l = 0; l < L; ++l) q -= mu.at(t, l) * w[l];
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
        w0[n] = next[x0[n]];
        int x = x0[n];
        for (int t = 0; t <= tau; ++t) {
            const int a = best[static_cast<std::size_t>(t) * S + x];
            res.states[n][t] = x;
            res.actions[n][t] = a;
            x = deterministic_transition(sp, x, a, sc.u(n, t + 1));
        }
    });

    const double beta = model.discount;
    double value = 0.0;
    for (int n = 0; n < N; ++n) value += w0[n];
    value -= (tau + 1) * (1.0 - beta) * ctx.theta();
    res.subgradient = MultiplierPath(L, tau + 1);
    for (int t = 0; t <= tau; ++t) {
        value += dot_budget(model.budget, mu, t);
        for (int l = 0; l < L; ++l) {
            double g = model.budget[l];
            for (int n = 0; n < N; ++n)
                g -= model.subproblems[n].B(res.states[n][t], res.actions[n][t], l, L);
            res.subgradient.at(t, l) = g;
        }
    }
    res.value = value;
    return res;
}

double relaxed_objective(const RelaxedContext& ctx, const Scenario& sc, const JointState& x0,
                         const MultiplierPath& mu, const std::vector<indvec>& actions) {
    const auto& model = ctx.model();
    const int L = model.L();
    double v = -(sc.tau + 1) * (1.0 - model.discount) * ctx.theta();
    for (int t = 0; t <= sc.tau; ++t) v += dot_budget(model.budget, mu, t);
    for (int n = 0; n < model.N(); ++n) {
        const auto& sp = model.subproblems[n];
        int x = x0[n];
        for (int t = 0; t <= sc.tau; ++t) {
            const int a = actions[n][t];
            if (!std::binary_search(sp.action_sets[x].begin(), sp.action_sets[x].end(), a))
                throw ConfigError("action sequence leaves the project's admissible set");
            v += ctx.integrand(n, x, a);
            for (int l = 0; l < L; ++l) v -= mu.at(t, l) * sp.B(x, a, l, L);
            x = deterministic_transition(sp, x, a, sc.u(n, t + 1));
        }
    }
    return v;
}

MuSolveResult minimize_mu(const RelaxedContext& ctx, const Scenario& sc, const JointState& x0,
                          const MultiplierPath& init, const MuSolverConfig& cfg) {
    return projected_mu_descent([&](const MultiplierPath& mu) { return relaxed_inner_eval(ctx, sc, x0, mu); },
                                init, cfg);
}

BoundEstimate estimate_practical_bound(const RelaxedContext& ctx, const JointState& x0, const EstimatorConfig& est,
                                       const MuSolverConfig& solver, int trunc) {
    if (est.n_scenarios < 2) throw ConfigError("n_scenarios must be at least 2");
    const auto& model = ctx.model();
    const double beta = model.discount;
    const int cap = est.tau_cap > 0 ? est.tau_cap : default_tau_cap(beta);
    std::vector<double> samples(est.n_scenarios);
    for_each_index(est.n_scenarios, est.exec, [&](std::size_t k) {
        Scenario sc = make_scenario(model.N(), beta, est.seed, k, cap);
        if (trunc >= 0) sc = sc.truncated(std::min(sc.tau, trunc));
        samples[k] = minimize_mu(ctx, sc, x0, MultiplierPath::constant(ctx.lambda(), sc.tau + 1), solver).value;
    });
    auto out = summarize(std::move(samples), est.seed, ctx.penalty_value(x0));
    if (trunc < 0) out.bias_bound = std::pow(beta, cap + 1) * 2.0 * ctx.penalty_sup() / (1.0 - beta);
    return out;
}

BoundEstimate estimate_truncated_bound(const RelaxedContext& ctx, const JointState& x0, const EstimatorConfig& est,
                                       const MuSolverConfig& solver, int trunc) {
    if (trunc < 0) throw ConfigError("truncation horizon must be non-negative");
    return estimate_practical_bound(ctx, x0, est, solver, trunc);
}

std::vector<double> truncation_chain(const RelaxedContext& ctx, const Scenario& sc, const JointState& x0,
                                     const std::vector<int>& horizons, const MuSolverConfig& cfg) {
    std::vector<double> values;
    MultiplierPath carry(ctx.model().L(), 0);
    int prev = -1;
    for (int T : horizons) {
        if (T < prev) throw ConfigError("truncation horizons must be non-decreasing");
        prev = T;
        const Scenario cut = sc.truncated(std::min(sc.tau, T));
        MultiplierPath init = MultiplierPath::constant(ctx.lambda(), cut.tau + 1);
        for (int t = 0; t < std::min(carry.periods, cut.tau + 1); ++t)
            for (int l = 0; l < init.L; ++l) init.at(t, l) = carry.at(t, l);
        auto r = minimize_mu(ctx, cut, x0, init, cfg);
        values.push_back(r.value);
        carry = std::move(r.mu);
    }
    return values;
}

LpOracleResult inner_lp_oracle(const RelaxedContext& ctx, const Scenario& sc, const JointState& x0) {
    const auto& model = ctx.model();
    const int N = model.N();
    const int L = model.L();
    const int P = sc.tau + 1;
    double count = 0.0;
    for (const auto& sp : model.subproblems) count += std::pow(static_cast<double>(sp.action_count), P);
    if (count > sequence_limit) throw GuardError("inner LP oracle would enumerate more than 1e5 action sequences");

    // Enumerate every admissible per-project sequence along its scenario path.
    LpOracleResult out;
    out.sequences.resize(N);
    std::vector<numvec> value(N);
    std::vector<std::vector<numvec>> use(N);  // use[n][k][t*L + l]
    for (int n = 0; n < N; ++n) {
        const auto& sp = model.subproblems[n];
        indvec seq(P);
        numvec b(static_cast<std::size_t>(P) * L);
        auto dfs = [&](auto&& self, int t, int x, double acc) -> void {
            if (t == P) {
                out.sequences[n].push_back(seq);
                value[n].push_back(acc);
                use[n].push_back(b);
                return;
            }
            for (int a : sp.action_sets[x]) {
                seq[t] = a;
                for (int l = 0; l < L; ++l) b[static_cast<std::size_t>(t) * L + l] = sp.B(x, a, l, L);
                self(self, t + 1, deterministic_transition(sp, x, a, sc.u(n, t + 1)), acc + ctx.integrand(n, x, a));
            }
        };
        dfs(dfs, 0, x0[n], 0.0);
    }
    const double constant = -P * (1.0 - model.discount) * ctx.theta();

    // Primal: variables [mu (P*L) >= 0, y_n free].
    {
        const std::size_t nm = static_cast<std::size_t>(P) * L;
        LinearProgram lp(nm + N);
        for (int t = 0; t < P; ++t)
            for (int l = 0; l < L; ++l) {
                lp.objective[static_cast<std::size_t>(t) * L + l] = model.budget[l];
                lp.lower[static_cast<std::size_t>(t) * L + l] = 0.0;
            }
        for (int n = 0; n < N; ++n) lp.objective[nm + n] = 1.0;
        for (int n = 0; n < N; ++n)
            for (std::size_t k = 0; k < value[n].size(); ++k) {
                numvec row(nm + N, 0.0);
                for (std::size_t i = 0; i < nm; ++i) row[i] = use[n][k][i];
                row[nm + n] = 1.0;
                lp.add_row(std::move(row), Sense::ge, value[n][k]);
            }
        const auto sol = solve_lp(lp);
        if (sol.status != LpStatus::optimal) throw NumericalError("inner LP oracle primal is not optimal");
        out.primal_value = sol.objective_value + constant;
        out.mu = MultiplierPath(L, P);
        for (std::size_t i = 0; i < nm; ++i) out.mu.mu[i] = sol.primal[i];
    }

    // Dual: probabilities over sequences, budget met in expectation every period.
    {
        std::vector<std::size_t> offset(N + 1, 0);
        for (int n = 0; n < N; ++n) offset[n + 1] = offset[n] + value[n].size();
        LinearProgram lp(offset[N]);
        for (int n = 0; n < N; ++n)
            for (std::size_t k = 0; k < value[n].size(); ++k) {
                lp.objective[offset[n] + k] = -value[n][k];
                lp.lower[offset[n] + k] = 0.0;
            }
        for (int t = 0; t < P; ++t)
            for (int l = 0; l < L; ++l) {
                numvec row(offset[N], 0.0);
                for (int n = 0; n < N; ++n)
                    for (std::size_t k = 0; k < value[n].size(); ++k)
                        row[offset[n] + k] = use[n][k][static_cast<std::size_t>(t) * L + l];
                lp.add_row(std::move(row), Sense::le, model.budget[l]);
            }
        for (int n = 0; n < N; ++n) {
            numvec row(offset[N], 0.0);
            for (std::size_t k = 0; k < value[n].size(); ++k) row[offset[n] + k] = 1.0;
            lp.add_row(std::move(row), Sense::eq, 1.0);
        }
        const auto sol = solve_lp(lp);
        if (sol.status != LpStatus::optimal) throw NumericalError("inner LP oracle dual is not optimal");
        out.dual_value = -sol.objective_value + constant;
        out.weights.resize(N);
        for (int n = 0; n < N; ++n)
            out.weights[n].assign(sol.primal.begin() + static_cast<std::ptrdiff_t>(offset[n]),
                                  sol.primal.begin() + static_cast<std::ptrdiff_t>(offset[n + 1]));
    }
    return out;
}

GapCertificate gap_certificate(const WeaklyCoupledModel& model, const Penalty& penalty) {
    require_valid(model);
    if (penalty.kind != Penalty::Kind::separable || static_cast<int>(penalty.parts.size()) != model.N())
        throw ConfigError("gap certificate needs a separable penalty with one table per subproblem");
    GapCertificate c;
    double worst = 0.0;
    for (int n = 0; n < model.N(); ++n) {
        const auto& sp = model.subproblems[n];
        const auto s = integrand_spread(sp, project_integrand(sp, penalty.parts[n], model.discount));
        c.gamma.push_back(s.hi - s.lo);
        worst = std::max(worst, s.hi - s.lo);
    }
    const double beta = model.discount;
    const double L = model.L();
    c.prefactor = ((L - 1.0) * beta + L + 1.0) / ((1.0 - beta) * (1.0 - beta));
    c.bound = c.prefactor * worst;
    return c;
}

UniformGammaReport uniform_gamma_check(const WeaklyCoupledModel& model, const numvec& lambda) {
    const auto bound = lagrangian_bound(model, lambda);
    const auto penalty = Penalty::from_lagrangian(bound);
    const int L = model.L();
    UniformGammaReport r;
    for (const auto& sp : model.subproblems)
        for (int x = 0; x < sp.state_count; ++x)
            for (int a : sp.action_sets[x]) {
                double priced = sp.R(x, a);
                for (int l = 0; l < L; ++l) priced -= lambda[l] * sp.B(x, a, l, L);
                r.C = std::max({r.C, std::abs(sp.R(x, a)), std::abs(priced)});
            }
    r.limit = 4.0 * r.C / (1.0 - model.discount);
    r.gamma = gap_certificate(model, penalty).gamma;
    r.pass = std::all_of(r.gamma.begin(), r.gamma.end(), [&](double g) { return g <= r.limit + 1e-9; });
    return r;
}

} // namespace wcdp
