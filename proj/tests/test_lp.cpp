#include <algorithm>
#include <cmath>
#include <optional>

#include "doctest.h"
#include "lp_oracle.hpp"
#include "wcdp/lp.hpp"
#include "wcdp/rng.hpp"

using namespace wcdp;
using oracle::random_lp;
using oracle::vertex_oracle;

namespace {

void check_certificates(const LinearProgram& lp, const LpSolution& s) {
    REQUIRE(s.status == LpStatus::optimal);
    double rhs_norm = 0.0;
    for (double b : lp.rhs) rhs_norm = std::max(rhs_norm, std::abs(b));
    CHECK(s.primal_residual <= 1e-8 * (1.0 + rhs_norm));
    CHECK(s.complementarity_residual <= 1e-7);
    CHECK(std::abs(s.objective_value - s.dual_objective) <= 1e-7 * (1.0 + std::abs(s.objective_value)));
    for (std::size_t i = 0; i < lp.row_count(); ++i) {
        if (lp.senses[i] == Sense::le) CHECK(s.dual[i] >= -1e-9);
        if (lp.senses[i] == Sense::ge) CHECK(s.dual[i] <= 1e-9);
    }
}

} // namespace

TEST_CASE("bounded single variable") {
    LinearProgram lp(1);
    lp.objective = {-1.0};
    lp.lower = {0.0};
    lp.add_row({1.0}, Sense::le, 1.0);
    const auto s = solve_lp(lp);
    check_certificates(lp, s);
    CHECK(s.primal[0] == doctest::Approx(1.0));
    CHECK(s.objective_value == doctest::Approx(-1.0));
    CHECK(s.dual[0] == doctest::Approx(1.0));
}

TEST_CASE("contradictory bounds are infeasible") {
    LinearProgram lp(1);
    lp.add_row({1.0}, Sense::ge, 1.0);
    lp.add_row({1.0}, Sense::le, 0.0);
    CHECK(solve_lp(lp).status == LpStatus::infeasible);
}

TEST_CASE("unbounded ray is detected") {
    LinearProgram lp(2);
    lp.objective = {-1.0, 0.0};
    lp.lower = {0.0, 0.0};
    lp.add_row({1.0, -1.0}, Sense::le, 1.0);
    CHECK(solve_lp(lp).status == LpStatus::unbounded);
}

TEST_CASE("two-dimensional polytope vertex") {
    LinearProgram lp(2);
    lp.objective = {-1.0, -1.0};
    lp.lower = {0.0, 0.0};
    lp.add_row({1.0, 2.0}, Sense::le, 4.0);
    lp.add_row({3.0, 1.0}, Sense::le, 6.0);
    const auto s = solve_lp(lp);
    check_certificates(lp, s);
    CHECK(s.objective_value == doctest::Approx(-2.8).epsilon(1e-12));
    CHECK(s.primal[0] == doctest::Approx(1.6));
    CHECK(s.primal[1] == doctest::Approx(1.2));
    // Oracle agrees with the hand-enumerated vertices (0,0), (2,0), (0,2), (1.6,1.2).
    CHECK(*vertex_oracle(lp) == doctest::Approx(-2.8).epsilon(1e-12));
}

TEST_CASE("equality rows, free variables and redundant constraints") {
    // min x + 2y  s.t. x + y = 3 (twice), x - y >= -1, y free, x <= 10.
    LinearProgram lp(2);
    lp.objective = {1.0, 2.0};
    lp.upper = {10.0, inf};
    lp.add_row({1.0, 1.0}, Sense::eq, 3.0);
    lp.add_row({2.0, 2.0}, Sense::eq, 6.0);
    lp.add_row({1.0, -1.0}, Sense::ge, -1.0);
    lp.add_row({0.0, 1.0}, Sense::ge, -20.0);
    const auto s = solve_lp(lp);
    check_certificates(lp, s);
    // y as small as allowed: x = 10 (upper bound), y = -7.
    CHECK(s.objective_value == doctest::Approx(10.0 - 14.0));
}

TEST_CASE("dimension mismatch is rejected") {
    LinearProgram lp(2);
    lp.add_row({1.0}, Sense::le, 1.0);
    CHECK_THROWS_AS(solve_lp(lp), ConfigError);
}

TEST_CASE("random LPs agree with rational vertex enumeration") {
    SplitMix rng(20240521);
    int checked = 0;
    for (int k = 0; k < 500; ++k) {
        const LinearProgram lp = random_lp(rng);
        const auto oracle = vertex_oracle(lp);
        REQUIRE(oracle.has_value());
        const auto s = solve_lp(lp);
        CAPTURE(k);
        check_certificates(lp, s);
        CHECK(std::abs(s.objective_value - *oracle) <= 1e-7 * (1.0 + std::abs(*oracle)));
        ++checked;
    }
    CHECK(checked == 500);
}

TEST_CASE("degenerate LP terminates under Bland's rule") {
    // A classic cycling example for the largest-coefficient rule.
    LinearProgram lp(4);
    lp.objective = {-0.75, 150.0, -0.02, 6.0};
    lp.lower = {0.0, 0.0, 0.0, 0.0};
    lp.add_row({0.25, -60.0, -0.04, 9.0}, Sense::le, 0.0);
    lp.add_row({0.5, -90.0, -0.02, 3.0}, Sense::le, 0.0);
    lp.add_row({0.0, 0.0, 1.0, 0.0}, Sense::le, 1.0);
    const auto s = solve_lp(lp);
    check_certificates(lp, s);
    CHECK(s.objective_value == doctest::Approx(-0.05));
}
