#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "wcdp/lqc.hpp"

using namespace wcdp;
using namespace wcdp::oracle;

TEST_CASE("diagonal Riccati matches the dense matrix recursion") {
    const auto m = LqcModel::standard(3, 4, 1.0, 7);
    const numvec lam{0.1, 0.5, 0.0, 0.9};
    const auto a = riccati(m, lam);
    const auto d = riccati_dense(m, lam);
    for (int t = 0; t <= 4; ++t)
        for (int n = 0; n < 3; ++n) CHECK(a.k[t][n] == doctest::Approx(d.k[t][n]).epsilon(1e-12));
    CHECK(a.value(m.x0) == doctest::Approx(d.value(m.x0)).epsilon(1e-12));
}

TEST_CASE("multipliers outside the admissible set are rejected") {
    const auto m = LqcModel::standard(2, 2, 1.0, 1);
    CHECK_THROWS_AS(riccati(m, {0.1, 1.0}), ConfigError);
    CHECK_THROWS_AS(riccati(m, {-0.1, 0.0}), ConfigError);
    CHECK(lqc_lambda_cap(m)[0] == doctest::Approx(1.0 - lqc_margin));
}

TEST_CASE("exact-moment gradient matches central differences") {
    const auto m = LqcModel::standard(2, 3, 0.8, 3);
    const numvec lam{0.2, 0.4, 0.3};
    const auto g = lqc_lagrangian_gradient(m, riccati(m, lam));
    for (int t = 0; t < 3; ++t) {
        auto up = lam, dn = lam;
        up[t] += 1e-6;
        dn[t] -= 1e-6;
        const double fd = (riccati(m, up).value(m.x0) - riccati(m, dn).value(m.x0)) / 2e-6;
        CHECK(g[t] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("inner value at mu = lambda reproduces J^lambda on every path") {
    const auto m = LqcModel::standard(2, 4, 1.0, 5);
    const auto lag = riccati(m, {0.3, 0.1, 0.6, 0.2});
    for (std::size_t k = 0; k < 5; ++k) {
        const auto w = lqc_noise_path(m, 11, k);
        CHECK(lqc_inner_at(m, lag, w, lag.lambdas).value == doctest::Approx(lag.value(m.x0)).epsilon(1e-10));
    }
}

TEST_CASE("relaxed inner ascent never ends below its start") {
    const auto m = LqcModel::standard(2, 3, 0.5, 2);
    const auto lag = lqc_lagrangian_search(m).solution;
    const auto w = lqc_noise_path(m, 4, 0);
    const auto r = lqc_relaxed_inner(m, lag, w);
    CHECK(r.value >= r.initial_value - 1e-12);
}

TEST_CASE("noise paths are reproducible") {
    const auto m = LqcModel::standard(2, 3, 1.0, 1);
    const auto a = lqc_noise_path(m, 9, 2);
    CHECK(a.size() == 3);
    CHECK(a[0].size() == 2);
    CHECK(a == lqc_noise_path(m, 9, 2));
    CHECK(a != lqc_noise_path(m, 9, 3));
}

TEST_CASE("single-coordinate one-period cell matches grid-search oracles") {
    LqcConfig cfg;
    cfg.policy_paths = 4000;
    cfg.info_paths = 50;
    cfg.seed = 3;
    const auto m = LqcModel::standard(1, 1, 0.5, 21);
    const auto row = run_lqc_row(m, cfg);
    const auto s = scalar_of(m);
    const double pol = policy_oracle(s);
    const double lag = lagrangian_oracle(s);
    CHECK(std::abs(row.proj_value - pol) <= 0.005 * pol);
    CHECK(std::abs(row.lag_bound - lag) <= 0.005 * lag);
    // One constraint on one coordinate: no duality gap, and the penalty removes the noise.
    CHECK(std::abs(row.info_bound - pol) <= 0.005 * pol);
}

TEST_CASE("row ordering for a multi-period cell") {
    LqcConfig cfg;
    cfg.policy_paths = 2000;
    cfg.info_paths = 30;
    const auto m = LqcModel::standard(2, 5, 1.0, 8);
    const auto row = run_lqc_row(m, cfg);
    CHECK(row.unconstrained <= row.lag_bound + 1e-9);
    CHECK(row.lag_bound <= row.info_bound + 3.0 * row.info_se + 1e-9);
    CHECK(row.info_bound <= row.proj_value + 3.0 * (row.proj_se + row.info_se));
    std::ostringstream os;
    write_lqc_csv(os, {row});
    CHECK(os.str().rfind("N,b,T,proj_value", 0) == 0);
}
