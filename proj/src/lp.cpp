#include "wcdp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wcdp {

const char* to_string(LpStatus s) {
    switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    }
    return "?";
}

namespace {

constexpr double pivot_tol = 1e-9;
constexpr double cost_tol = 1e-9;
constexpr double feas_tol = 1e-8;

// How an original variable is expressed in nonnegative standard-form columns:
// z = offset + sign * w[col]  (and, for free variables, - w[col + 1]).
struct VarMap {
    double offset = 0.0;
    double sign = 1.0;
    int col = -1;
    bool split = false;
};

void check_dimensions(const LinearProgram& lp) {
    const std::size_t n = lp.var_count();
    if (lp.lower.size() != n || lp.upper.size() != n)
        throw ConfigError("dimension-mismatch: bounds do not match the number of variables");
    if (lp.senses.size() != lp.rows.size() || lp.rhs.size() != lp.rows.size())
        throw ConfigError("dimension-mismatch: senses/rhs do not match the number of rows");
    for (const auto& r : lp.rows)
        if (r.size() != n) throw ConfigError("dimension-mismatch: constraint row has wrong length");
    auto finite = [](double v) { return std::isfinite(v); };
    for (double v : lp.objective)
        if (!finite(v)) throw ConfigError("objective coefficients must be finite");
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        if (!finite(lp.rhs[i])) throw ConfigError("rhs entries must be finite");
        for (double v : lp.rows[i])
            if (!finite(v)) throw ConfigError("constraint coefficients must be finite");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (lp.lower[j] == inf || lp.upper[j] == -inf || std::isnan(lp.lower[j]) || std::isnan(lp.upper[j]))
            throw ConfigError("invalid variable bounds");
    }
}

class Tableau {
public:
    Tableau(std::size_t m, std::size_t ncol) : m_(m), n_(ncol), t_(m * (ncol + 1), 0.0), basis_(m, 0) {}

    double& at(std::size_t i, std::size_t j) { return t_[i * (n_ + 1) + j]; }
    double& rhs(std::size_t i) { return t_[i * (n_ + 1) + n_]; }
    std::size_t& basis(std::size_t i) { return basis_[i]; }

    void pivot(std::size_t r, std::size_t c, numvec& cost, double& cost_rhs) {
        const double p = at(r, c);
        double* row = &t_[r * (n_ + 1)];
        for (std::size_t j = 0; j <= n_; ++j) row[j] /= p;
        row[c] = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* other = &t_[i * (n_ + 1)];
            const double f = other[c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) other[j] -= f * row[j];
            other[c] = 0.0;
        }
        const double f = cost[c];
        if (f != 0.0) {
            for (std::size_t j = 0; j < n_; ++j) cost[j] -= f * row[j];
            cost_rhs -= f * row[n_];
            cost[c] = 0.0;
        }
        basis_[r] = c;
    }

    // Bland's rule iterations; returns false when unbounded.
    bool optimize(numvec& cost, double& cost_rhs, std::size_t allowed_cols, int& iterations, int cap) {
        while (true) {
            std::size_t enter = n_;
            for (std::size_t j = 0; j < allowed_cols; ++j)
                if (cost[j] < -cost_tol) {
                    enter = j;
                    break;
                }
            if (enter == n_) return true;
            std::size_t leave = m_;
            double best = inf;
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = at(i, enter);
                if (a <= pivot_tol) continue;
                const double ratio = rhs(i) / a;
                const double slack = 1e-12 * (1.0 + std::abs(best));
                if (leave == m_ || ratio < best - slack) {
                    best = ratio;
                    leave = i;
                } else if (ratio <= best + slack && basis_[i] < basis_[leave]) {
                    leave = i;
                }
            }
            if (leave == m_) return false;
            pivot(leave, enter, cost, cost_rhs);
            if (++iterations > cap) throw NumericalError("simplex iteration limit exceeded");
        }
    }

    std::size_t rows() const { return m_; }

private:
    std::size_t m_, n_;
    numvec t_;
    std::vector<std::size_t> basis_;
};

} // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    check_dimensions(lp);
    const std::size_t n = lp.var_count();

    // Map each variable onto nonnegative columns.
    std::vector<VarMap> vm(n);
    std::size_t ncols = 0;
    std::vector<std::pair<std::size_t, double>> upper_rows; // (column, width)
    for (std::size_t j = 0; j < n; ++j) {
        const double l = lp.lower[j], u = lp.upper[j];
        VarMap& v = vm[j];
        v.col = static_cast<int>(ncols);
        if (std::isfinite(l)) {
            v.offset = l;
            ++ncols;
            if (std::isfinite(u)) upper_rows.emplace_back(v.col, u - l);
        } else if (std::isfinite(u)) {
            v.offset = u;
            v.sign = -1.0;
            ++ncols;
        } else {
            v.split = true;
            ncols += 2;
        }
    }
    const std::size_t n_struct = ncols;

    // Standard-form rows before slacks: coefficients over structural columns.
    struct Row {
        numvec coef;
        Sense sense;
        double rhs;
        double flip = 1.0;
    };
    std::vector<Row> rows;
    rows.reserve(lp.row_count() + upper_rows.size());
    for (std::size_t i = 0; i < lp.row_count(); ++i) {
        Row r{numvec(n_struct, 0.0), lp.senses[i], lp.rhs[i]};
        for (std::size_t j = 0; j < n; ++j) {
            const double a = lp.rows[i][j];
            if (a == 0.0) continue;
            r.rhs -= a * vm[j].offset;
            r.coef[vm[j].col] += a * vm[j].sign;
            if (vm[j].split) r.coef[vm[j].col + 1] -= a;
        }
        rows.push_back(std::move(r));
    }
    for (auto [col, width] : upper_rows) {
        Row r{numvec(n_struct, 0.0), Sense::le, width};
        r.coef[col] = 1.0;
        rows.push_back(std::move(r));
    }
    for (auto& r : rows) {
        if (r.rhs < 0.0) {
            for (double& v : r.coef) v = -v;
            r.rhs = -r.rhs;
            r.flip = -1.0;
            if (r.sense == Sense::le) r.sense = Sense::ge;
            else if (r.sense == Sense::ge) r.sense = Sense::le;
        }
    }

    const std::size_t m = rows.size();
    std::size_t n_slack = 0, n_art = 0;
    for (const auto& r : rows) {
        if (r.sense != Sense::eq) ++n_slack;
        if (r.sense != Sense::le) ++n_art;
    }
    const std::size_t slack0 = n_struct, art0 = n_struct + n_slack, total = art0 + n_art;
    // Column that carries each row's unit vector (slack for <=, artificial otherwise).
    std::vector<std::size_t> unit_col(m);

    Tableau tab(m, total);
    {
        std::size_t s = slack0, a = art0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n_struct; ++j) tab.at(i, j) = rows[i].coef[j];
            tab.rhs(i) = rows[i].rhs;
            if (rows[i].sense == Sense::le) {
                tab.at(i, s) = 1.0;
                unit_col[i] = s;
                tab.basis(i) = s++;
            } else {
                if (rows[i].sense == Sense::ge) tab.at(i, s++) = -1.0;
                tab.at(i, a) = 1.0;
                unit_col[i] = a;
                tab.basis(i) = a++;
            }
        }
    }

    LpSolution sol;
    const int cap = static_cast<int>(std::min<std::size_t>(50'000'000, 100 * (m + total) + 10'000));

    // Phase 1: minimize the sum of artificials.
    numvec cost(total, 0.0);
    double cost_rhs = 0.0;
    if (n_art > 0) {
        for (std::size_t j = art0; j < total; ++j) cost[j] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (tab.basis(i) < art0) continue;
            for (std::size_t j = 0; j < total; ++j) cost[j] -= tab.at(i, j);
            cost_rhs -= tab.rhs(i);
        }
        tab.optimize(cost, cost_rhs, art0, sol.iterations, cap);
        double infeas = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (tab.basis(i) >= art0) infeas += tab.rhs(i);
        double scale = 1.0;
        for (const auto& r : rows) scale = std::max(scale, std::abs(r.rhs));
        if (infeas > feas_tol * scale) {
            sol.status = LpStatus::infeasible;
            return sol;
        }
        // Drive zero-level artificials out of the basis where a structural pivot exists.
        for (std::size_t i = 0; i < m; ++i) {
            if (tab.basis(i) < art0) continue;
            std::size_t best = total;
            double mag = pivot_tol;
            for (std::size_t j = 0; j < art0; ++j)
                if (std::abs(tab.at(i, j)) > mag) {
                    mag = std::abs(tab.at(i, j));
                    best = j;
                }
            if (best != total) tab.pivot(i, best, cost, cost_rhs);
        }
    }

    // Phase 2 on the true objective; artificial columns may no longer enter.
    numvec c_std(total, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        c_std[vm[j].col] += lp.objective[j] * vm[j].sign;
        if (vm[j].split) c_std[vm[j].col + 1] -= lp.objective[j];
    }
    cost = c_std;
    cost_rhs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double cb = c_std[tab.basis(i)];
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j < total; ++j) cost[j] -= cb * tab.at(i, j);
        cost_rhs -= cb * tab.rhs(i);
    }
    if (!tab.optimize(cost, cost_rhs, art0, sol.iterations, cap)) {
        sol.status = LpStatus::unbounded;
        return sol;
    }

    // Primal.
    numvec w(total, 0.0);
    for (std::size_t i = 0; i < m; ++i) w[tab.basis(i)] = tab.rhs(i);
    sol.primal.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double z = vm[j].offset + vm[j].sign * w[vm[j].col];
        if (vm[j].split) z -= w[vm[j].col + 1];
        sol.primal[j] = z;
    }
    sol.status = LpStatus::optimal;
    sol.objective_value = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.objective_value += lp.objective[j] * sol.primal[j];

    // Duals: the reduced cost of row i's unit column is -pi_i; undo the row flip
    // and switch to the c'z + y'(Az - b) convention.
    sol.dual.assign(lp.row_count(), 0.0);
    for (std::size_t i = 0; i < lp.row_count(); ++i) {
        const double pi = -cost[unit_col[i]];
        sol.dual[i] = -pi * rows[i].flip;
    }

    // Reduced costs in the original space, dual objective and residuals.
    numvec red = lp.objective;
    for (std::size_t i = 0; i < lp.row_count(); ++i)
        if (sol.dual[i] != 0.0)
            for (std::size_t j = 0; j < n; ++j) red[j] += sol.dual[i] * lp.rows[i][j];
    double dual_obj = 0.0;
    double cmax = 1.0;
    for (double c : lp.objective) cmax = std::max(cmax, std::abs(c));
    for (std::size_t j = 0; j < n; ++j) {
        const double r = std::abs(red[j]) <= 1e-9 * cmax ? 0.0 : red[j];
        if (r > 0.0) dual_obj += r * (std::isfinite(lp.lower[j]) ? lp.lower[j] : -inf);
        else if (r < 0.0) dual_obj += r * (std::isfinite(lp.upper[j]) ? lp.upper[j] : inf);
        if (r != 0.0) {
            const double bound = r > 0.0 ? lp.lower[j] : lp.upper[j];
            const double gap = std::isfinite(bound) ? std::abs(sol.primal[j] - bound) : inf;
            sol.complementarity_residual = std::max(sol.complementarity_residual, std::abs(r) * gap);
        }
    }
    double prim_res = 0.0;
    for (std::size_t i = 0; i < lp.row_count(); ++i) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < n; ++j) lhs += lp.rows[i][j] * sol.primal[j];
        const double slack = lhs - lp.rhs[i];
        double viol = 0.0;
        if (lp.senses[i] == Sense::le) viol = std::max(0.0, slack);
        else if (lp.senses[i] == Sense::ge) viol = std::max(0.0, -slack);
        else viol = std::abs(slack);
        prim_res = std::max(prim_res, viol);
        sol.complementarity_residual = std::max(sol.complementarity_residual, std::abs(sol.dual[i] * slack));
    }
    for (std::size_t j = 0; j < n; ++j) {
        prim_res = std::max(prim_res, lp.lower[j] - sol.primal[j]);
        prim_res = std::max(prim_res, sol.primal[j] - lp.upper[j]);
    }
    for (std::size_t i = 0; i < lp.row_count(); ++i) dual_obj -= sol.dual[i] * lp.rhs[i];
    sol.dual_objective = dual_obj;
    sol.primal_residual = prim_res;
    return sol;
}

} // namespace wcdp
