#include "wcdp/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/Dense>

#include "wcdp/lp.hpp"

namespace wcdp {

namespace {

double priced_reward(const SubproblemSpec& sp, int x, int a, const numvec& lambda) {
    const int L = static_cast<int>(lambda.size());
    double r = sp.R(x, a);
    const double* w = sp.B_row(x, a, L);
    for (int l = 0; l < L; ++l) r -= lambda[l] * w[l];
    return r;
}

double expect(const SubproblemSpec& sp, int x, int a, const ValueTable& h) {
    const double* row = sp.P_row(x, a);
    double s = 0.0;
    for (int xn = 0; xn < sp.state_count; ++xn) s += row[xn] * h[xn];
    return s;
}

indvec greedy_actions(const SubproblemSpec& sp, const numvec& lambda, double beta, const ValueTable& h) {
    indvec pol(sp.state_count, 0);
    for (int x = 0; x < sp.state_count; ++x) {
        double best = -inf;
        for (int a : sp.action_sets[x]) {
            const double q = priced_reward(sp, x, a, lambda) + beta * expect(sp, x, a, h);
            if (q > best + 1e-11 * (1.0 + std::abs(q))) {
                best = q;
                pol[x] = a;
            }
        }
    }
    return pol;
}

double sweep(const SubproblemSpec& sp, const numvec& lambda, double beta, const ValueTable& h, ValueTable& out) {
    double res = 0.0;
    for (int x = 0; x < sp.state_count; ++x) {
        double best = -inf;
        for (int a : sp.action_sets[x])
            best = std::max(best, priced_reward(sp, x, a, lambda) + beta * expect(sp, x, a, h));
        out[x] = best;
        res = std::max(res, std::abs(best - h[x]));
    }
    return res;
}

// (I - beta P_pi) as a dense matrix.
Eigen::MatrixXd policy_matrix(const SubproblemSpec& sp, const indvec& pol, double beta) {
    const int S = sp.state_count;
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(S, S);
    for (int x = 0; x < S; ++x)
        for (int xn = 0; xn < S; ++xn) m(x, xn) -= beta * sp.P(x, pol[x], xn);
    return m;
}

} // namespace

double LagrangianBound::operator()(const JointState& x) const {
    double v = constant;
    for (std::size_t n = 0; n < subproblem_values.size(); ++n) v += subproblem_values[n][x[n]];
    return v;
}

double LagrangianBound::weighted(const WeaklyCoupledModel& model, const InitialDistribution& nu) const {
    double v = constant;
    for (int n = 0; n < model.N(); ++n) {
        const numvec m = nu.marginal(model, n);
        for (std::size_t x = 0; x < m.size(); ++x) v += m[x] * subproblem_values[n][x];
    }
    return v;
}

ValueTable LagrangianBound::joint_table(const WeaklyCoupledModel& model) const {
    JointIndexer index(model);
    joint_state_count(model);
    ValueTable out(index.size());
    for (std::size_t s = 0; s < index.size(); ++s) out[s] = (*this)(index.decode(s));
    return out;
}

SubproblemSolution solve_subproblem(const WeaklyCoupledModel& model, int n, const numvec& lambda, double tol) {
    const auto& sp = model.subproblems[n];
    const double beta = model.discount;
    if (static_cast<int>(lambda.size()) != model.L()) throw ConfigError("lambda has wrong dimension");
    for (double l : lambda)
        if (!(l >= 0.0)) throw ConfigError("lambda must be nonnegative");
    if (tol <= 0.0) {
        double scale = 1.0;
        for (int x = 0; x < sp.state_count; ++x)
            for (int a : sp.action_sets[x]) scale = std::max(scale, std::abs(priced_reward(sp, x, a, lambda)));
        tol = 1e-9 * scale;
    }

    SubproblemSolution sol;
    ValueTable h(sp.state_count, 0.0), next(sp.state_count, 0.0);
    double res = inf;
    for (int it = 0; it < 10'000'000 && res > tol; ++it) {
        res = sweep(sp, lambda, beta, h, next);
        h.swap(next);
    }
    // Policy-iteration polish: the subgradient and the truncation chain rely on an exact fixed point.
    for (int round = 0; round < 100; ++round) {
        const indvec pol = greedy_actions(sp, lambda, beta, h);
        Eigen::VectorXd r(sp.state_count);
        for (int x = 0; x < sp.state_count; ++x) r[x] = priced_reward(sp, x, pol[x], lambda);
        const Eigen::VectorXd v = policy_matrix(sp, pol, beta).partialPivLu().solve(r);
        if (!v.allFinite()) break;
        ValueTable cand(v.data(), v.data() + v.size());
        const double r_cand = sweep(sp, lambda, beta, cand, next);
        if (r_cand > res && res <= tol) break;
        h = cand;
        res = r_cand;
        if (greedy_actions(sp, lambda, beta, h) == pol) break;
    }
    if (!(res <= tol)) {
        std::ostringstream os;
        os << "subproblem " << n << " value iteration residual " << res << " above tolerance " << tol;
        throw NumericalError(os.str());
    }
    sol.policy = greedy_actions(sp, lambda, beta, h);
    sol.value = std::move(h);
    sol.residual = res;
    return sol;
}

ValueTable subproblem_value_iteration(const WeaklyCoupledModel& model, int n, const numvec& lambda, double tol) {
    return solve_subproblem(model, n, lambda, tol).value;
}

LagrangianBound lagrangian_bound(const WeaklyCoupledModel& model, const numvec& lambda, double tol,
                                 Execution exec) {
    LagrangianBound b;
    b.lambda = lambda;
    b.subproblem_values.resize(model.N());
    for_each_index(static_cast<std::size_t>(model.N()), exec, [&](std::size_t n) {
        b.subproblem_values[n] = subproblem_value_iteration(model, static_cast<int>(n), lambda, tol);
    });
    double lb = 0.0;
    for (int l = 0; l < model.L(); ++l) lb += lambda[l] * model.budget[l];
    b.constant = lb / (1.0 - model.discount);
    return b;
}

numvec lagrangian_subgradient(const WeaklyCoupledModel& model, const InitialDistribution& nu, const numvec& lambda,
                              double* objective) {
    const int L = model.L();
    const double beta = model.discount;
    numvec g(L);
    double obj = 0.0;
    for (int l = 0; l < L; ++l) {
        g[l] = model.budget[l] / (1.0 - beta);
        obj += lambda[l] * g[l];
    }
    for (int n = 0; n < model.N(); ++n) {
        const auto& sp = model.subproblems[n];
        const auto sol = solve_subproblem(model, n, lambda);
        const numvec m = nu.marginal(model, n);
        for (int x = 0; x < sp.state_count; ++x) obj += m[x] * sol.value[x];
        // Discounted expected resource use along the greedy policy: D = (I - beta P)^{-1} B.
        Eigen::MatrixXd B(sp.state_count, L);
        for (int x = 0; x < sp.state_count; ++x)
            for (int l = 0; l < L; ++l) B(x, l) = sp.B(x, sol.policy[x], l, L);
        const Eigen::MatrixXd D = policy_matrix(sp, sol.policy, beta).partialPivLu().solve(B);
        for (int x = 0; x < sp.state_count; ++x)
            for (int l = 0; l < L; ++l) g[l] -= m[x] * D(x, l);
    }
    if (objective) *objective = obj;
    return g;
}

LambdaSearchResult optimal_lambda_lp(const WeaklyCoupledModel& model, const InitialDistribution& nu) {
    require_valid(model);
    const int L = model.L(), N = model.N();
    const double beta = model.discount;
    std::vector<std::size_t> offset(N);
    std::size_t nv = L;
    for (int n = 0; n < N; ++n) {
        offset[n] = nv;
        nv += model.subproblems[n].state_count;
    }
    LinearProgram lp(nv);
    for (int l = 0; l < L; ++l) {
        lp.objective[l] = model.budget[l] / (1.0 - beta);
        lp.lower[l] = 0.0;
    }
    for (int n = 0; n < N; ++n) {
        const auto& sp = model.subproblems[n];
        const numvec m = nu.marginal(model, n);
        for (int x = 0; x < sp.state_count; ++x) lp.objective[offset[n] + x] = m[x];
        for (int x = 0; x < sp.state_count; ++x) {
            for (int a : sp.action_sets[x]) {
                numvec row(nv, 0.0);
                for (int l = 0; l < L; ++l) row[l] = sp.B(x, a, l, L);
                row[offset[n] + x] += 1.0;
                for (int xn = 0; xn < sp.state_count; ++xn) row[offset[n] + xn] -= beta * sp.P(x, a, xn);
                lp.add_row(std::move(row), Sense::ge, sp.R(x, a));
            }
        }
    }
    const auto sol = solve_lp(lp);
    if (sol.status == LpStatus::infeasible) throw NumericalError("Lagrangian LP reported infeasible");
    if (sol.status == LpStatus::unbounded) throw NumericalError("Lagrangian LP reported unbounded");

    LambdaSearchResult out;
    out.lambda.assign(sol.primal.begin(), sol.primal.begin() + L);
    for (double& l : out.lambda) l = std::max(0.0, l);
    out.bound = lagrangian_bound(model, out.lambda);
    out.objective = out.bound.weighted(model, nu);
    out.solver_objective = sol.objective_value;
    return out;
}

LambdaSearchResult optimal_lambda_subgradient(const WeaklyCoupledModel& model, const InitialDistribution& nu,
                                              const SubgradientConfig& cfg) {
    require_valid(model);
    const int L = model.L();
    numvec lambda = cfg.init.empty() ? numvec(L, 0.0) : cfg.init;
    if (static_cast<int>(lambda.size()) != L) throw ConfigError("subgradient init has wrong dimension");
    for (double& l : lambda) l = std::max(0.0, l);

    LambdaSearchResult out;
    double best = inf;
    numvec best_lambda = lambda;
    for (int k = 0; k <= cfg.max_iters; ++k) {
        double obj = 0.0;
        const numvec g = lagrangian_subgradient(model, nu, lambda, &obj);
        out.trace.push_back(obj);
        if (obj < best) {
            best = obj;
            best_lambda = lambda;
        }
        if (k == cfg.max_iters) break;
        double norm = 0.0;
        for (double v : g) norm += v * v;
        if (norm == 0.0) break;
        const double step = cfg.step0 / (1.0 + k);
        for (int l = 0; l < L; ++l) lambda[l] = std::max(0.0, lambda[l] - step * g[l]);
    }
    out.lambda = best_lambda;
    out.bound = lagrangian_bound(model, best_lambda);
    out.objective = out.bound.weighted(model, nu);
    out.solver_objective = best;
    return out;
}

double AlpBound::operator()(const JointState& x) const {
    double v = theta;
    for (std::size_t n = 0; n < subproblem_values.size(); ++n) v += subproblem_values[n][x[n]];
    return v;
}

ValueTable AlpBound::joint_table(const WeaklyCoupledModel& model) const {
    JointIndexer index(model);
    ValueTable out(index.size());
    for (std::size_t s = 0; s < index.size(); ++s) out[s] = (*this)(index.decode(s));
    return out;
}

AlpBound alp_bound(const WeaklyCoupledModel& model, const InitialDistribution& nu, std::size_t limit) {
    require_valid(model);
    const int N = model.N();
    const double beta = model.discount;
    const std::size_t S = joint_state_count(model);
    JointIndexer index(model);

    std::vector<std::size_t> offset(N);
    std::size_t nv = 1;
    for (int n = 0; n < N; ++n) {
        offset[n] = nv;
        nv += model.subproblems[n].state_count;
    }
    LinearProgram lp(nv);
    lp.objective[0] = 1.0;
    for (int n = 0; n < N; ++n) {
        const numvec m = nu.marginal(model, n);
        for (std::size_t x = 0; x < m.size(); ++x) lp.objective[offset[n] + x] = m[x];
    }
    std::size_t count = 0;
    for (std::size_t s = 0; s < S; ++s) {
        const JointState x = index.decode(s);
        for_each_feasible_joint_action(model, x, [&](const JointAction& a) {
            if (++count > limit) {
                std::ostringstream os;
                os << "enumeration-too-large: ALP constraint count exceeds " << limit;
                throw GuardError(os.str());
            }
            numvec row(nv, 0.0);
            row[0] = 1.0 - beta;
            for (int n = 0; n < N; ++n) {
                const auto& sp = model.subproblems[n];
                row[offset[n] + x[n]] += 1.0;
                const double* p = sp.P_row(x[n], a[n]);
                for (int xn = 0; xn < sp.state_count; ++xn) row[offset[n] + xn] -= beta * p[xn];
            }
            lp.add_row(std::move(row), Sense::ge, joint_reward(model, x, a));
        });
    }
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) {
        std::ostringstream os;
        os << "ALP solve failed: " << to_string(sol.status);
        throw NumericalError(os.str());
    }
    AlpBound out;
    out.theta = sol.primal[0];
    for (int n = 0; n < N; ++n)
        out.subproblem_values.emplace_back(sol.primal.begin() + static_cast<long>(offset[n]),
                                           sol.primal.begin() + static_cast<long>(offset[n]) +
                                               model.subproblems[n].state_count);
    out.objective = sol.objective_value;
    out.constraint_count = count;
    out.min_slack = inf;
    for (std::size_t i = 0; i < lp.row_count(); ++i) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < nv; ++j) lhs += lp.rows[i][j] * sol.primal[j];
        out.min_slack = std::min(out.min_slack, lhs - lp.rhs[i]);
    }
    return out;
}

namespace {

// Q^n(x, a) = R^n(x, a) + beta E[H^n(x') | x, a], flattened as x*A + a.
std::vector<numvec> continuation_tables(const WeaklyCoupledModel& model, const std::vector<ValueTable>& h) {
    std::vector<numvec> q(model.N());
    for (int n = 0; n < model.N(); ++n) {
        const auto& sp = model.subproblems[n];
        q[n].assign(static_cast<std::size_t>(sp.state_count) * sp.action_count, -inf);
        for (int x = 0; x < sp.state_count; ++x)
            for (int a : sp.action_sets[x])
                q[n][static_cast<std::size_t>(x) * sp.action_count + a] =
                    sp.R(x, a) + model.discount * expect(sp, x, a, h[n]);
    }
    return q;
}

} // namespace

StationaryPolicy lagrangian_greedy_policy(const WeaklyCoupledModel& model, const LagrangianBound& bound) {
    auto q = std::make_shared<const std::vector<numvec>>(continuation_tables(model, bound.subproblem_values));
    return [&model, q](const JointState& x) {
        JointAction best_a;
        double best = -inf;
        for_each_feasible_joint_action(model, x, [&](const JointAction& a) {
            double v = 0.0;
            for (int n = 0; n < model.N(); ++n)
                v += (*q)[n][static_cast<std::size_t>(x[n]) * model.subproblems[n].action_count + a[n]];
            if (best_a.empty() || v > best + 1e-12 * (1.0 + std::abs(best))) {
                best = v;
                best_a = a;
            }
        });
        if (best_a.empty()) throw ModelError("no-feasible-action in greedy policy");
        return best_a;
    };
}

TightnessReport lagrangian_tightness_certificate(const WeaklyCoupledModel& model, const LagrangianBound& bound,
                                                 const StationaryPolicy& policy) {
    const int L = model.L(), N = model.N();
    const auto q = continuation_tables(model, bound.subproblem_values);
    JointIndexer index(model);
    const std::size_t S = joint_state_count(model);
    TightnessReport rep;
    rep.state_pass.resize(S);
    rep.slackness.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        const JointState x = index.decode(s);
        const JointAction a = policy(x);
        const numvec use = joint_weight(model, x, a);
        double slack = 0.0;
        for (int l = 0; l < L; ++l) slack += bound.lambda[l] * (model.budget[l] - use[l]);
        bool ok = std::abs(slack) <= 1e-8;
        // The priced objective is separable, so argmax membership over the product set is per project.
        for (int n = 0; n < N && ok; ++n) {
            const auto& sp = model.subproblems[n];
            // Q^n - lambda'B^n
            auto priced = [&](int act) {
                return q[n][static_cast<std::size_t>(x[n]) * sp.action_count + act] +
                       (priced_reward(sp, x[n], act, bound.lambda) - sp.R(x[n], act));
            };
            double best = -inf;
            for (int act : sp.action_sets[x[n]]) best = std::max(best, priced(act));
            if (priced(a[n]) < best - 1e-8 * (1.0 + std::abs(best))) ok = false;
        }
        rep.state_pass[s] = ok;
        rep.slackness[s] = slack;
        if (!ok) {
            rep.all_pass = false;
            rep.failing_states.push_back(s);
        }
    }
    return rep;
}

} // namespace wcdp
