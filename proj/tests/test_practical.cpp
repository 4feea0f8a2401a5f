#include <algorithm>
#include <cmath>
#include <functional>

#include "doctest.h"
#include "fixtures.hpp"
#include "wcdp/inforelax.hpp"
#include "wcdp/practical.hpp"
#include "wcdp/rng.hpp"

using namespace wcdp;

namespace {

struct Setup {
    WeaklyCoupledModel model;
    LambdaSearchResult lag;
    Penalty penalty;
};

Setup setup(std::uint64_t seed, int N = 2, int S = 3, int A = 2) {
    Setup s;
    s.model = fixtures::random_instance(seed, N, S, A);
    s.lag = optimal_lambda_lp(s.model, InitialDistribution::uniform(s.model));
    s.penalty = Penalty::from_lagrangian(s.lag.bound);
    return s;
}

// Relaxed inner value by enumerating every per-project action sequence.
double brute_relaxed(const RelaxedContext& ctx, const Scenario& sc, const JointState& x0, const MultiplierPath& mu) {
    const auto& m = ctx.model();
    const int L = m.L();
    double total = 0.0;
    for (int n = 0; n < m.N(); ++n) {
        const auto& sp = m.subproblems[n];
        std::function<double(int, int)> go = [&](int x, int t) -> double {
            double best = -inf;
            for (int a : sp.action_sets[x]) {
                double v = ctx.integrand(n, x, a);
                for (int l = 0; l < L; ++l) v -= mu.at(t, l) * sp.B(x, a, l, L);
                if (t < sc.tau) v += go(deterministic_transition(sp, x, a, sc.u(n, t + 1)), t + 1);
                best = std::max(best, v);
            }
            return best;
        };
        total += go(x0[n], 0);
    }
    for (int t = 0; t <= sc.tau; ++t)
        for (int l = 0; l < L; ++l) total += mu.at(t, l) * m.budget[l];
    return total - (sc.tau + 1) * (1.0 - m.discount) * ctx.theta();
}

MultiplierPath random_mu(int L, int periods, std::uint64_t seed) {
    SplitMix rng(seed);
    MultiplierPath mu(L, periods);
    for (double& v : mu.mu) v = rng.uniform(0.0, 3.0);
    return mu;
}

} // namespace

TEST_CASE("relaxed recursion matches per-project enumeration") {
    const auto s = setup(1);
    const RelaxedContext ctx(s.model, s.penalty);
    for (int T = 0; T <= 3; ++T) {
        const auto sc = sample_scenario(2, 40 + T, T);
        const auto mu = random_mu(1, T + 1, T);
        const auto r = relaxed_inner_eval(ctx, sc, {0, 2}, mu);
        CHECK(r.value == doctest::Approx(brute_relaxed(ctx, sc, {0, 2}, mu)).epsilon(1e-12));
        CHECK(relaxed_objective(ctx, sc, {0, 2}, mu, r.actions) == doctest::Approx(r.value).epsilon(1e-12));
    }
}

TEST_CASE("relaxed value dominates the exact inner value for any mu >= 0") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto s = setup(seed);
        const RelaxedContext rctx(s.model, s.penalty);
        const InnerContext ictx(s.model, s.penalty);
        for (std::size_t k = 0; k < 10; ++k) {
            const auto sc = make_scenario(2, 0.9, seed, k, 6);
            const double exact = inner_exact(ictx, sc, {0, 0}).value;
            for (std::uint64_t j = 0; j < 3; ++j)
                CHECK(relaxed_inner_eval(rctx, sc, {0, 0}, random_mu(1, sc.tau + 1, j)).value >= exact - 1e-9);
        }
    }
}

TEST_CASE("relaxed subgradient passes one-sided finite differences") {
    const auto s = setup(3, 3, 3, 2);
    const RelaxedContext ctx(s.model, s.penalty);
    const auto sc = sample_scenario(3, 8, 4);
    const auto mu = random_mu(1, 5, 2);
    const auto r = relaxed_inner_eval(ctx, sc, {0, 1, 2}, mu);
    for (int t = 0; t <= 4; ++t)
        for (double h : {1e-5, -1e-5}) {
            auto shifted = mu;
            shifted.at(t, 0) += h;
            const double f1 = relaxed_inner_eval(ctx, sc, {0, 1, 2}, shifted).value;
            CHECK(f1 - r.value >= r.subgradient.at(t, 0) * h - 1e-10);
        }
}

TEST_CASE("with H = J^lambda the relaxed value at mu = lambda is nonpositive") {
    const auto s = setup(5);
    const RelaxedContext ctx(s.model, s.penalty);
    for (std::size_t k = 0; k < 20; ++k) {
        const auto sc = make_scenario(2, 0.9, 11, k, 30);
        const auto r = relaxed_inner_eval(ctx, sc, {1, 1}, MultiplierPath::constant(s.lag.lambda, sc.tau + 1));
        CHECK(r.value <= 1e-9);
    }
}

TEST_CASE("mu descent never reports a value above its start") {
    const auto s = setup(2);
    const RelaxedContext ctx(s.model, s.penalty);
    const auto sc = make_scenario(2, 0.9, 4, 0, 10);
    const auto res = minimize_mu(ctx, sc, {0, 0}, MultiplierPath::constant(s.lag.lambda, sc.tau + 1));
    CHECK(res.value <= res.initial_value);
    for (std::size_t k = 1; k < res.best_trace.size(); ++k) CHECK(res.best_trace[k] <= res.best_trace[k - 1]);
    CHECK(relaxed_inner_eval(ctx, sc, {0, 0}, res.mu).value == doctest::Approx(res.value).epsilon(1e-12));
}

TEST_CASE("converged mu descent agrees with the LP oracle on tiny scenarios") {
    MuSolverConfig cfg;
    cfg.max_iters = 20000;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto s = setup(seed, 2, 2, 2);
        const RelaxedContext ctx(s.model, s.penalty);
        for (int T = 0; T <= 2; ++T) {
            const auto sc = sample_scenario(2, seed * 7 + T, T);
            const auto lp = inner_lp_oracle(ctx, sc, {0, 1});
            CHECK(lp.primal_value == doctest::Approx(lp.dual_value).epsilon(1e-9));
            const auto res = minimize_mu(ctx, sc, {0, 1}, MultiplierPath::constant(s.lag.lambda, T + 1), cfg);
            CHECK(std::abs(res.value - lp.primal_value) <= 1e-3);
            CHECK(res.value >= lp.primal_value - 1e-9);
        }
    }
}

TEST_CASE("truncation chain is non-increasing for H = J^lambda") {
    const auto s = setup(6);
    const RelaxedContext ctx(s.model, s.penalty);
    for (std::size_t k = 0; k < 10; ++k) {
        const auto sc = make_scenario(2, 0.9, 21, k, 60);
        std::vector<int> Ts = {0, 2, 5, 10, sc.tau};
        std::sort(Ts.begin(), Ts.end());
        for (int& T : Ts) T = std::min(T, sc.tau);
        const auto chain = truncation_chain(ctx, sc, {0, 0}, Ts);
        for (std::size_t i = 1; i < chain.size(); ++i) CHECK(chain[i] <= chain[i - 1] + 1e-9);
    }
}

TEST_CASE("practical bound sits between the information bound and J^lambda") {
    const auto s = setup(7);
    const RelaxedContext rctx(s.model, s.penalty);
    EstimatorConfig est;
    est.n_scenarios = 100;
    est.seed = 17;
    const auto info = estimate_info_bound(s.model, s.penalty, {0, 0}, est);
    const auto prac = estimate_practical_bound(rctx, {0, 0}, est);
    const auto diff = paired_difference(prac.samples, info.samples);
    CHECK(diff.mean >= -3.0 * diff.se - 1e-9);
    CHECK(prac.mean <= s.lag.bound({0, 0}) + 1e-9);
    CHECK(prac.se >= 0.0);
}

TEST_CASE("truncation at or beyond the horizon cap reproduces the untruncated estimate") {
    const auto s = setup(8);
    const RelaxedContext ctx(s.model, s.penalty);
    EstimatorConfig est;
    est.n_scenarios = 20;
    est.seed = 3;
    est.tau_cap = 25;
    const auto full = estimate_practical_bound(ctx, {0, 0}, est);
    const auto cut = estimate_truncated_bound(ctx, {0, 0}, est, {}, 25);
    CHECK(cut.mean == full.mean);
    CHECK_THROWS_AS(estimate_truncated_bound(ctx, {0, 0}, est, {}, -1), ConfigError);
}

TEST_CASE("gap certificate prefactor and uniform Gamma check") {
    const auto s = setup(9);
    const auto cert = gap_certificate(s.model, s.penalty);
    CHECK(cert.prefactor == doctest::Approx((0.0 * 0.9 + 2.0) / (0.1 * 0.1)));
    CHECK(cert.bound == doctest::Approx(cert.prefactor * *std::max_element(cert.gamma.begin(), cert.gamma.end())));
    for (double g : cert.gamma) CHECK(g >= 0.0);
    const auto u = uniform_gamma_check(s.model, s.lag.lambda);
    CHECK(u.pass);
    for (std::size_t n = 0; n < u.gamma.size(); ++n) CHECK(u.gamma[n] == doctest::Approx(cert.gamma[n]));
}

TEST_CASE("joint penalties are rejected by the relaxed problem") {
    const auto s = setup(1);
    const auto v = joint_value_iteration(s.model);
    CHECK_THROWS_AS(RelaxedContext(s.model, Penalty::from_table(v.value)), ConfigError);
}
