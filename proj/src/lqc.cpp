#include "wcdp/lqc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "wcdp/report.hpp"
#include "wcdp/rng.hpp"

namespace wcdp {

namespace {

void check_lambdas(const LqcModel& m, const numvec& lambdas, const char* what) {
    if (static_cast<int>(lambdas.size()) != m.T) throw ConfigError(std::string(what) + " needs one value per period");
    const numvec cap = lqc_lambda_cap(m);
    for (int t = 0; t < m.T; ++t)
        if (!(lambdas[t] >= 0.0) || lambdas[t] > cap[t] + 1e-12)
            throw ConfigError(std::string(what) + "-out-of-range: value outside [0, min R - 0.001]");
}

double clamp_to(double v, double hi) { return std::min(std::max(v, 0.0), hi); }

// Norm of the ascent direction after projection onto the box [0, cap].
double projected_norm(const numvec& mu, const numvec& g, const numvec& cap) {
    double s = 0.0;
    for (std::size_t t = 0; t < mu.size(); ++t) {
        double d = g[t];
        if (mu[t] <= 0.0 && d < 0.0) d = 0.0;
        if (mu[t] >= cap[t] && d > 0.0) d = 0.0;
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

LqcModel LqcModel::standard(int N, int T, double b, std::uint64_t seed) {
    LqcModel m;
    m.N = N;
    m.T = T;
    m.b = b;
    m.A.assign(T, numvec(N, 1.0));
    m.B.assign(T, numvec(N, 1.0));
    m.R.assign(T, numvec(N, 1.0));
    m.sigma.assign(T, numvec(N, 1.0));
    SplitMix rng(seed);
    for (int n = 0; n < N; ++n) m.Q.push_back(rng.uniform(1.0, 2.0));
    m.x0.assign(N, 1.0);
    return m;
}

void validate_lqc(const LqcModel& m) {
    if (m.N < 1 || m.T < 1) throw ConfigError("LQC model needs N >= 1 and T >= 1");
    auto shape = [&](const std::vector<numvec>& v, const char* name) {
        if (static_cast<int>(v.size()) != m.T) throw ModelError(std::string(name) + " needs T rows");
        for (const auto& r : v)
            if (static_cast<int>(r.size()) != m.N) throw ModelError(std::string(name) + " needs N entries per row");
    };
    shape(m.A, "A");
    shape(m.B, "B");
    shape(m.R, "R");
    shape(m.sigma, "sigma");
    if (static_cast<int>(m.Q.size()) != m.N || static_cast<int>(m.x0.size()) != m.N)
        throw ModelError("Q and x0 need N entries");
    for (const auto& r : m.R)
        for (double v : r)
            if (!(v > lqc_margin)) throw ModelError("R entries must exceed the S' margin");
    for (double q : m.Q)
        if (!(q > 0.0)) throw ModelError("Q entries must be positive");
    for (const auto& r : m.sigma)
        for (double v : r)
            if (!(v >= 0.0)) throw ModelError("noise scales must be non-negative");
    if (!(m.b >= 0.0)) throw ModelError("constraint level b must be non-negative");
}

numvec lqc_lambda_cap(const LqcModel& m) {
    numvec cap(m.T);
    for (int t = 0; t < m.T; ++t) cap[t] = *std::min_element(m.R[t].begin(), m.R[t].end()) - lqc_margin;
    return cap;
}

double RiccatiSolution::value(const numvec& x) const {
    double v = noise_offset + multiplier_offset;
    for (std::size_t n = 0; n < x.size(); ++n) v += k[0][n] * x[n] * x[n];
    return v;
}

double RiccatiSolution::value_at(int t, const numvec& x, const LqcModel& m) const {
    double v = 0.0;
    for (int n = 0; n < m.N; ++n) v += k[t][n] * x[n] * x[n];
    for (int s = t; s < m.T; ++s) {
        v += lambdas[s] * m.b;
        for (int n = 0; n < m.N; ++n) v += k[s + 1][n] * m.sigma[s][n] * m.sigma[s][n];
    }
    return v;
}

RiccatiSolution riccati(const LqcModel& m, const numvec& lambdas) {
    validate_lqc(m);
    check_lambdas(m, lambdas, "lambda");
    RiccatiSolution sol;
    sol.lambdas = lambdas;
    sol.k.assign(m.T + 1, numvec(m.N));
    sol.gain.assign(m.T, numvec(m.N));
    sol.k[m.T] = m.Q;
    for (int t = m.T - 1; t >= 0; --t)
        for (int n = 0; n < m.N; ++n) {
            const double k = sol.k[t + 1][n], a = m.A[t][n], b = m.B[t][n], r = m.R[t][n] - lambdas[t];
            const double d = b * b * k + r;
            sol.k[t][n] = a * a * k * r / d;
            sol.gain[t][n] = b * k * a / d;
        }
    for (int t = 0; t < m.T; ++t) {
        sol.multiplier_offset += lambdas[t] * m.b;
        for (int n = 0; n < m.N; ++n) sol.noise_offset += sol.k[t + 1][n] * m.sigma[t][n] * m.sigma[t][n];
    }
    return sol;
}

RiccatiSolution riccati_dense(const LqcModel& m, const numvec& lambdas) {
    validate_lqc(m);
    check_lambdas(m, lambdas, "lambda");
    using Mat = Eigen::MatrixXd;
    RiccatiSolution sol;
    sol.lambdas = lambdas;
    sol.k.assign(m.T + 1, numvec(m.N));
    sol.gain.assign(m.T, numvec(m.N));
    Mat K = Eigen::VectorXd::Map(m.Q.data(), m.N).asDiagonal();
    sol.k[m.T] = m.Q;
    for (int t = m.T - 1; t >= 0; --t) {
        const Mat A = Eigen::VectorXd::Map(m.A[t].data(), m.N).asDiagonal();
        const Mat B = Eigen::VectorXd::Map(m.B[t].data(), m.N).asDiagonal();
        Mat Rl = Eigen::VectorXd::Map(m.R[t].data(), m.N).asDiagonal();
        Rl -= lambdas[t] * Mat::Identity(m.N, m.N);
        const Mat M = B.transpose() * K * B + Rl;
        const Mat G = M.partialPivLu().solve(B.transpose() * K * A);
        K = A.transpose() * (K - K * B * M.partialPivLu().solve(B.transpose() * K)) * A;
        for (int n = 0; n < m.N; ++n) {
            sol.k[t][n] = K(n, n);
            sol.gain[t][n] = G(n, n);
        }
    }
    for (int t = 0; t < m.T; ++t) {
        sol.multiplier_offset += lambdas[t] * m.b;
        for (int n = 0; n < m.N; ++n) sol.noise_offset += sol.k[t + 1][n] * m.sigma[t][n] * m.sigma[t][n];
    }
    return sol;
}

numvec lqc_lagrangian_gradient(const LqcModel& m, const RiccatiSolution& sol) {
    numvec g(m.T, m.b);
    for (int n = 0; n < m.N; ++n) {
        double second = m.x0[n] * m.x0[n];
        for (int t = 0; t < m.T; ++t) {
            const double l = sol.gain[t][n];
            g[t] -= l * l * second;
            const double c = m.A[t][n] - m.B[t][n] * l;
            second = c * c * second + m.sigma[t][n] * m.sigma[t][n];
        }
    }
    return g;
}

LqcLagrangianResult lqc_lagrangian_search(const LqcModel& m, const LqcSearchConfig& cfg) {
    if (cfg.max_iters < 1 || !(cfg.step0 > 0.0)) throw ConfigError("lambda search needs positive step and iterations");
    const numvec cap = lqc_lambda_cap(m);
    numvec lam(m.T, 0.0);
    LqcLagrangianResult out;
    out.bound = -inf;
    for (int k = 0; k < cfg.max_iters; ++k) {
        const auto sol = riccati(m, lam);
        const double v = sol.value(m.x0);
        const numvec g = lqc_lagrangian_gradient(m, sol);
        out.trace.push_back(v);
        if (v > out.bound) {
            out.bound = v;
            out.solution = sol;
            out.gradient_norm = projected_norm(lam, g, cap);
        }
        const double step = cfg.step0 / std::sqrt(1.0 + k);
        for (int t = 0; t < m.T; ++t) lam[t] = clamp_to(lam[t] + step * g[t], cap[t]);
    }
    return out;
}

std::vector<numvec> lqc_noise_path(const LqcModel& m, std::uint64_t seed, std::size_t k) {
    const std::uint64_t key = derive_seed(seed, k);
    std::vector<numvec> w(m.T, numvec(m.N));
    for (int t = 0; t < m.T; ++t)
        for (int n = 0; n < m.N; ++n) w[t][n] = m.sigma[t][n] * counter_normal(key, n, t + 1);
    return w;
}

LqcPathCost lqc_path_cost(const LqcModel& m, const RiccatiSolution& unc, const std::vector<numvec>& w) {
    LqcPathCost cost;
    numvec xp = m.x0, xu = m.x0, a(m.N);
    for (int t = 0; t < m.T; ++t) {
        double s = 0.0;
        for (int n = 0; n < m.N; ++n) {
            a[n] = -unc.gain[t][n] * xp[n];
            s += a[n] * a[n];
        }
        if (s < m.b) {
            // Radial projection onto the sphere; the zero vector goes to the symmetric point.
            for (int n = 0; n < m.N; ++n) a[n] = s > 0.0 ? a[n] * std::sqrt(m.b / s) : std::sqrt(m.b / m.N);
        }
        for (int n = 0; n < m.N; ++n) {
            cost.projected += m.R[t][n] * a[n] * a[n];
            xp[n] = m.A[t][n] * xp[n] + m.B[t][n] * a[n] + w[t][n];
            const double au = -unc.gain[t][n] * xu[n];
            cost.unconstrained += m.R[t][n] * au * au;
            xu[n] = m.A[t][n] * xu[n] + m.B[t][n] * au + w[t][n];
        }
    }
    for (int n = 0; n < m.N; ++n) {
        cost.projected += m.Q[n] * xp[n] * xp[n];
        cost.unconstrained += m.Q[n] * xu[n] * xu[n];
    }
    return cost;
}

BoundEstimate projection_policy_value(const LqcModel& m, std::size_t n_paths, std::uint64_t seed, Execution exec) {
    if (n_paths < 2) throw ConfigError("n_paths must be at least 2");
    const auto unc = riccati(m, numvec(m.T, 0.0));
    const double analytic = unc.value(m.x0);
    std::vector<double> samples(n_paths);
    for_each_index(n_paths, exec, [&](std::size_t k) {
        const auto c = lqc_path_cost(m, unc, lqc_noise_path(m, seed, k));
        samples[k] = c.projected - (c.unconstrained - analytic);
    });
    return summarize(std::move(samples), seed);
}

LqcInnerResult lqc_inner_at(const LqcModel& m, const RiccatiSolution& lag, const std::vector<numvec>& w,
                            const numvec& mu) {
    check_lambdas(m, mu, "mu");
    LqcInnerResult res;
    res.mu = mu;
    res.actions.assign(m.T, numvec(m.N));
    double value = 0.0;
    for (int t = 0; t < m.T; ++t) value += mu[t] * m.b;
    // Per coordinate, the cost-to-go of the deterministic problem is P x^2 + p x + c.
    std::vector<double> Ps(m.T + 1), ps(m.T + 1), ms(m.T), Ds(m.T);
    for (int n = 0; n < m.N; ++n) {
        double P = m.Q[n], p = 0.0, c = 0.0;
        Ps[m.T] = P;
        ps[m.T] = p;
        for (int t = m.T - 1; t >= 0; --t) {
            const double a = m.A[t][n], b = m.B[t][n], r = m.R[t][n] - mu[t];
            const double kk = lag.k[t + 1][n], wt = w[t][n], sg = m.sigma[t][n];
            const double D = r + P * b * b;
            const double lin = 2.0 * P * wt + p - 2.0 * kk * wt;
            const double nc = c + P * wt * wt + p * wt - kk * wt * wt + kk * sg * sg - b * b * lin * lin / (4.0 * D);
            ms[t] = lin;
            Ds[t] = D;
            P = a * a * P * r / D;
            p = lin * a * r / D;
            c = nc;
            Ps[t] = P;
            ps[t] = p;
        }
        const double x0 = m.x0[n];
        value += P * x0 * x0 + p * x0 + c;
        double x = x0;
        for (int t = 0; t < m.T; ++t) {
            const double a = m.A[t][n], b = m.B[t][n];
            const double act = -(2.0 * Ps[t + 1] * b * a * x + ms[t] * b) / (2.0 * Ds[t]);
            res.actions[t][n] = act;
            x = a * x + b * act + w[t][n];
        }
    }
    res.value = value;
    return res;
}

LqcInnerResult lqc_relaxed_inner(const LqcModel& m, const RiccatiSolution& lag, const std::vector<numvec>& w,
                                 const LqcInnerConfig& cfg) {
    if (cfg.max_iters < 1 || !(cfg.step0 > 0.0)) throw ConfigError("inner search needs positive step and iterations");
    const numvec cap = lqc_lambda_cap(m);
    numvec mu = lag.lambdas;
    LqcInnerResult best;
    best.value = -inf;
    double initial = 0.0;
    int k = 0;
    for (; k < cfg.max_iters; ++k) {
        auto r = lqc_inner_at(m, lag, w, mu);
        if (k == 0) initial = r.value;
        numvec g(m.T, m.b);
        for (int t = 0; t < m.T; ++t)
            for (int n = 0; n < m.N; ++n) g[t] -= r.actions[t][n] * r.actions[t][n];
        const double norm = projected_norm(mu, g, cap);
        if (r.value > best.value) {
            best = std::move(r);
            best.gradient_norm = norm;
        }
        if (norm <= cfg.tol) {
            ++k;
            break;
        }
        const double step = cfg.step0 / (1.0 + k);
        for (int t = 0; t < m.T; ++t) mu[t] = clamp_to(mu[t] + step * g[t], cap[t]);
    }
    best.initial_value = initial;
    best.iterations = k;
    return best;
}

BoundEstimate lqc_info_bound(const LqcModel& m, const RiccatiSolution& lag, std::size_t n_paths, std::uint64_t seed,
                             const LqcInnerConfig& cfg, Execution exec) {
    if (n_paths < 2) throw ConfigError("n_paths must be at least 2");
    std::vector<double> samples(n_paths);
    for_each_index(n_paths, exec, [&](std::size_t k) {
        samples[k] = lqc_relaxed_inner(m, lag, lqc_noise_path(m, seed, k), cfg).value;
    });
    return summarize(std::move(samples), seed);
}

LqcRow run_lqc_row(const LqcModel& m, const LqcConfig& cfg) {
    LqcRow row;
    row.N = m.N;
    row.b = m.b;
    row.T = m.T;
    row.seed = cfg.seed;
    const auto proj = projection_policy_value(m, cfg.policy_paths, cfg.seed, cfg.exec);
    row.proj_value = proj.mean;
    row.proj_se = proj.se;
    row.unconstrained = riccati(m, numvec(m.T, 0.0)).value(m.x0);
    const auto lag = lqc_lagrangian_search(m, cfg.search);
    row.lag_bound = lag.bound;
    // A separate stream for the information relaxation paths.
    const auto info = lqc_info_bound(m, lag.solution, cfg.info_paths, derive_seed(cfg.seed, 0x1F0ULL), cfg.inner,
                                     cfg.exec);
    row.info_bound = info.mean;
    row.info_se = info.se;
    row.gap1 = relative_gap(row.proj_value - row.info_bound, row.proj_value, row.proj_value);
    row.gap2 = relative_gap(row.info_bound - row.lag_bound, row.proj_value - row.lag_bound, row.proj_value);
    return row;
}

std::vector<LqcRow> run_lqc_table(const std::vector<LqcCell>& cells, std::uint64_t model_seed, const LqcConfig& cfg) {
    std::vector<LqcRow> rows;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto m = LqcModel::standard(cells[i].N, cells[i].T, cells[i].b, derive_seed(model_seed, i));
        rows.push_back(run_lqc_row(m, cfg));
    }
    return rows;
}

void write_lqc_csv(std::ostream& os, const std::vector<LqcRow>& rows) {
    os << "N,b,T,proj_value,proj_se,unconstrained,lag_bound,info_bound,info_se,gap1,gap2,seed\n";
    for (const auto& r : rows)
        os << r.N << ',' << format_number(r.b) << ',' << r.T << ',' << format_number(r.proj_value) << ','
           << format_number(r.proj_se) << ',' << format_number(r.unconstrained) << ',' << format_number(r.lag_bound)
           << ',' << format_number(r.info_bound) << ',' << format_number(r.info_se) << ',' << format_gap(r.gap1)
           << ',' << format_gap(r.gap2) << ',' << r.seed << '\n';
}

} // namespace wcdp
