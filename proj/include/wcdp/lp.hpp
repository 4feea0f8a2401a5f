#pragma once

#include <string>
#include <vector>

#include "wcdp/common.hpp"

namespace wcdp {

enum class Sense { le, ge, eq };

/// minimize c'z  subject to  A z (senses) rhs,  lower <= z <= upper.
/// Bounds may be infinite; by default every variable is free.
struct LinearProgram {
    numvec objective;
    std::vector<numvec> rows;
    std::vector<Sense> senses;
    numvec rhs;
    numvec lower;
    numvec upper;

    explicit LinearProgram(std::size_t n_vars = 0)
        : objective(n_vars, 0.0), lower(n_vars, -inf), upper(n_vars, inf) {}

    std::size_t var_count() const { return objective.size(); }
    std::size_t row_count() const { return rows.size(); }

    void add_row(numvec coef, Sense s, double b) {
        rows.push_back(std::move(coef));
        senses.push_back(s);
        rhs.push_back(b);
    }
};

enum class LpStatus { optimal, infeasible, unbounded };

const char* to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    numvec primal;
    /// Row multipliers y with the sign convention of the Lagrangian c'z + y'(Az - rhs):
    /// y >= 0 on <= rows, y <= 0 on >= rows, free on = rows.
    numvec dual;
    double objective_value = 0.0;
    double dual_objective = 0.0;
    double primal_residual = 0.0;
    double complementarity_residual = 0.0;
    int iterations = 0;
};

/// Two-phase primal simplex on a dense tableau with Bland's anti-cycling rule.
/// Throws ConfigError on inconsistent dimensions or non-finite coefficients.
LpSolution solve_lp(const LinearProgram& lp);

} // namespace wcdp
