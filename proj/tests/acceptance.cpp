// Acceptance criteria AC1-AC10. Prints one PASS/FAIL line per criterion and
// exits with the number of failures. Tolerances are fixed here, not tuned per run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "lp_oracle.hpp"
#include "oracles.hpp"
#include "wcdp/bandit.hpp"
#include "wcdp/finite_horizon.hpp"
#include "wcdp/inforelax.hpp"
#include "wcdp/lagrangian.hpp"
#include "wcdp/lp.hpp"
#include "wcdp/lqc.hpp"
#include "wcdp/practical.hpp"
#include "wcdp/rng.hpp"

using namespace wcdp;

namespace {

// Absolute floor added to every 3-SE ordering. When both sides are computed from the
// same exact identity the SE is zero and only rounding separates them; 1e-9 is the
// per-scenario tolerance the relaxed and truncated checks already use.
constexpr double round_off = 1e-9;

// Collects failed checks; the first few are kept for the report line.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (ok) return;
        ++failed_;
        if (notes_.size() < 3) notes_.push_back(what);
    }
    bool ok() const { return failed_ == 0; }
    std::string detail() const {
        std::ostringstream os;
        os << (total_ - failed_) << "/" << total_ << " checks";
        for (const auto& n : notes_) os << "; " << n;
        return os.str();
    }

private:
    std::size_t total_ = 0, failed_ = 0;
    std::vector<std::string> notes_;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

// The shared instance family of AC2-AC4 and AC7: N <= 3 projects, at most 4 states each.
WeaklyCoupledModel lattice_instance(int i) {
    const int N = 1 + i % 3;
    const int S = 2 + (i / 3) % 3;
    return fixtures::random_instance(1000 + i, N, S, 2);
}

constexpr int lattice_count = 20;

void ac1(Checks& c) {
    const auto m = fixtures::three_state(2.0, 4.0, 0.9);
    const auto v = joint_value_iteration(m);
    c.expect(std::abs(v.value[0] - 18.0) <= 1e-6 && std::abs(v.value[1]) <= 1e-6 && std::abs(v.value[2] - 20.0) <= 1e-6,
             fmt("V = (%g, %g, %g)", v.value[0], v.value[1], v.value[2]));

    const auto lag = optimal_lambda_lp(m, InitialDistribution::point(m, {0}));
    c.expect(std::abs(lag.lambda[0] - 6.0) <= 1e-6, fmt("lambda* = %g", lag.lambda[0]));
    for (int x = 0; x < 3; ++x) c.expect(std::abs(lag.bound({x}) - 60.0) <= 1e-6, fmt("J(%g) = %g", x, lag.bound({x})));

    const auto pen = Penalty::from_lagrangian(lag.bound);
    const auto sup = supersolution_check(m, pen);
    c.expect(sup.in_D_star && sup.epsilon >= 4.0 - 1e-6, fmt("epsilon = %g", sup.epsilon));

    const InnerContext ctx(m, pen);
    for (int T = 0; T <= 30; ++T) {
        const double val = inner_exact(ctx, sample_scenario(1, 500 + T, T), {0}).value;
        c.expect(std::abs(val - (-6.0 - 4.0 * T)) <= 1e-6, fmt("inner(T=%g) = %g", T, val));
    }

    EstimatorConfig est;
    est.n_scenarios = 1000;
    est.seed = 1;
    const auto e = estimate_info_bound(ctx, {0}, est);
    c.expect(std::abs(e.mean - 18.0) <= 3.0 * e.se, fmt("info = %g +- %g", e.mean, e.se));
}

void ac2(Checks& c) {
    for (int i = 0; i < lattice_count; ++i) {
        const auto m = lattice_instance(i);
        const auto v = joint_value_iteration(m);
        const InnerContext ctx(m, Penalty::from_table(v.value));
        const JointState x0(m.N(), 0);
        double worst = 0.0;
        for (std::size_t k = 0; k < 100; ++k) {
            const auto sc = make_scenario(m.N(), m.discount, 2000 + i, k, default_tau_cap(m.discount));
            worst = std::max(worst, std::abs(inner_exact(ctx, sc, x0).value));
        }
        c.expect(worst <= 1e-8, fmt("instance %g: max |inner| = %g", i, worst));
    }
}

struct LatticeRow {
    double V, info, info_se, prac, prac_se, lag;
    PairedDifference gap;
    double certificate;
    bool uniform_gamma;
    double max_relaxed;
};

// AC3 and AC7 share the estimates: 200 common scenarios per instance.
std::vector<LatticeRow> lattice_rows() {
    std::vector<LatticeRow> rows;
    for (int i = 0; i < lattice_count; ++i) {
        const auto m = lattice_instance(i);
        const JointState x0(m.N(), 0);
        const auto v = joint_value_iteration(m);
        const auto lag = optimal_lambda_lp(m, InitialDistribution::point(m, x0));
        const auto pen = Penalty::from_lagrangian(lag.bound);
        EstimatorConfig est;
        est.n_scenarios = 200;
        est.seed = 3000 + i;
        const auto info = estimate_info_bound(m, pen, x0, est);
        const RelaxedContext rctx(m, pen);
        const auto prac = estimate_practical_bound(rctx, x0, est);
        LatticeRow r;
        r.V = v.value[JointIndexer(m).encode(x0)];
        r.info = info.mean;
        r.info_se = info.se;
        r.prac = prac.mean;
        r.prac_se = prac.se;
        r.lag = lag.bound(x0);
        r.gap = paired_difference(prac.samples, info.samples);
        r.certificate = gap_certificate(m, pen).bound;
        r.uniform_gamma = uniform_gamma_check(m, lag.lambda).pass;
        r.max_relaxed = *std::max_element(prac.samples.begin(), prac.samples.end());
        rows.push_back(r);
    }
    return rows;
}

void ac3(Checks& c, const std::vector<LatticeRow>& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        c.expect(r.V <= r.info + 3.0 * r.info_se + round_off, fmt("instance %g: V %g > info %g", i, r.V, r.info));
        c.expect(r.info <= r.prac + 3.0 * combined(r.info_se, r.prac_se) + round_off,
                 fmt("instance %g: info %g > practical %g", i, r.info, r.prac));
        c.expect(r.prac <= r.lag + 3.0 * r.prac_se + round_off, fmt("instance %g: practical %g > J %g", i, r.prac, r.lag));
        c.expect(r.max_relaxed <= 1e-9, fmt("instance %g: relaxed inner value %g > 0", i, r.max_relaxed));
    }
}

void ac4(Checks& c) {
    for (int i = 0; i < lattice_count; ++i) {
        const auto m = lattice_instance(i);
        const auto nu = InitialDistribution::uniform(m);
        const auto alp = alp_bound(m, nu);
        const auto lag = optimal_lambda_lp(m, nu);
        c.expect(alp.objective <= lag.objective + 1e-6,
                 fmt("instance %g: ALP %g > J %g", i, alp.objective, lag.objective));
        c.expect(alp.min_slack >= -1e-7, fmt("instance %g: ALP slack %g", i, alp.min_slack));
    }
}

void ac5(Checks& c) {
    MuSolverConfig cfg;
    cfg.max_iters = 20000;
    int done = 0;
    for (int inst = 0; inst < 10; ++inst) {
        const auto m = fixtures::random_instance(4000 + inst, 2, 2, 2);
        const auto lag = optimal_lambda_lp(m, InitialDistribution::uniform(m));
        const RelaxedContext ctx(m, Penalty::from_lagrangian(lag.bound));
        for (int k = 0; k < 5; ++k, ++done) {
            const int tau = (inst + k) % 3;
            const auto sc = sample_scenario(2, 5000 + done, tau);
            const JointState x0{k % 2, (k / 2) % 2};
            const auto lp = inner_lp_oracle(ctx, sc, x0);
            const auto res = minimize_mu(ctx, sc, x0, MultiplierPath::constant(lag.lambda, tau + 1), cfg);
            c.expect(std::abs(lp.primal_value - lp.dual_value) <= 1e-6,
                     fmt("scenario %g: primal %g vs dual %g", done, lp.primal_value, lp.dual_value));
            c.expect(std::abs(res.value - lp.primal_value) <= 1e-3,
                     fmt("scenario %g: descent %g vs LP %g", done, res.value, lp.primal_value));
        }
    }
    c.expect(done == 50, "scenario count");
}

void ac6(Checks& c) {
    for (int i = 0; i < lattice_count; i += 4) {
        const auto m = lattice_instance(i);
        const JointState x0(m.N(), 0);
        const auto lag = optimal_lambda_lp(m, InitialDistribution::point(m, x0));
        const RelaxedContext ctx(m, Penalty::from_lagrangian(lag.bound));
        for (std::size_t k = 0; k < 40; ++k) {
            const auto sc = make_scenario(m.N(), m.discount, 3000 + i, k, default_tau_cap(m.discount));
            std::vector<int> Ts;
            for (int T : {0, 2, 5, 10, sc.tau}) Ts.push_back(std::min(T, sc.tau));
            std::sort(Ts.begin(), Ts.end());
            const auto chain = truncation_chain(ctx, sc, x0, Ts);
            for (std::size_t j = 1; j < chain.size(); ++j)
                c.expect(chain[j] <= chain[j - 1] + 1e-9,
                         fmt("instance %g: T=%g value above the previous horizon by %g", i, Ts[j], chain[j] - chain[j - 1]));
        }
    }
}

void ac7(Checks& c, const std::vector<LatticeRow>& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        c.expect(r.gap.mean <= r.certificate + 3.0 * r.gap.se + round_off,
                 fmt("instance %g: practical - info %g > certificate %g", i, r.gap.mean, r.certificate));
        c.expect(r.uniform_gamma, fmt("instance %g: Gamma above 4C/(1-beta)", i));
    }
}

void ac8(Checks& c) {
    for (int i = 0; i < 10; ++i) {
        const int N = 1 + i % 2;
        const int T = 1 + i % 5;
        const auto fm = fold_discount(fixtures::random_instance(6000 + i, N, 3, 2), T);
        const JointState x0(N, 0);
        const double u0 = fh_value(fm).values[0][0];
        const auto lag = fh_optimal_lambda(fm, x0);
        const auto pen = FhPenalty::from_lagrangian(lag.bound);
        const auto info = fh_info_bound(fm, pen, x0, 200, 7000 + i);
        const auto prac = fh_practical_bound(fm, pen, x0, 200, 7000 + i);
        c.expect(u0 <= info.mean + 3.0 * info.se + round_off, fmt("instance %g: U0 %g > info %g", i, u0, info.mean));
        c.expect(info.mean <= prac.mean + 3.0 * combined(info.se, prac.se) + round_off,
                 fmt("instance %g: info %g > practical %g", i, info.mean, prac.mean));
        c.expect(prac.mean <= lag.objective + 3.0 * prac.se + round_off,
                 fmt("instance %g: practical %g > J0 %g", i, prac.mean, lag.objective));
    }
    for (int i = 0; i < 6; ++i) {
        const int N = 1 + i % 2;
        const int T = i % 3;
        const auto fm = fold_discount(fixtures::random_instance(8000 + i, N, 2, 2), T);
        const auto v = fh_value(fm);
        const JointIndexer idx(fm.stage(0));
        for (std::size_t s = 0; s < idx.size(); ++s) {
            const double brute = oracle::brute_force_fh_value(fm, idx.decode(s));
            c.expect(std::abs(v.values[0][s] - brute) <= 1e-9, fmt("T=%g: recursion %g vs enumeration %g", T, v.values[0][s], brute));
        }
    }
}

void ac9(Checks& c) {
    BanditConfig bc;
    bc.info_scenarios = 100;
    bc.truncation = 50;
    bc.seed = 9;
    const auto rows = run_bandit_grid({2, 5}, {0.9}, 4, 90, bc);
    for (const auto& r : rows) {
        c.expect(r.policy_value <= r.info_bound + 3.0 * combined(r.policy_se, r.info_se) + round_off,
                 fmt("bandit N=%g: policy %g > info %g", r.N, r.policy_value, r.info_bound));
        c.expect(r.info_bound <= r.lag_bound + 3.0 * r.info_se + round_off,
                 fmt("bandit N=%g: info %g > Lagrangian %g", r.N, r.info_bound, r.lag_bound));
        c.expect(r.gap2.has_value() && *r.gap2 >= -0.05 && *r.gap2 <= 1.05,
                 fmt("bandit N=%g: Gap2 %g", r.N, r.gap2.value_or(NAN)));
    }

    LqcConfig lc;
    lc.seed = 11;
    const std::vector<LqcCell> cells = {{1, 0.5, 1}, {1, 0.5, 5}, {2, 0.5, 1}, {2, 0.5, 5}};
    const auto lrows = run_lqc_table(cells, 12, lc);
    for (const auto& r : lrows) {
        c.expect(r.unconstrained <= r.lag_bound + 1e-9,
                 fmt("lqc N=%g T=%g: unconstrained above Lagrangian by %g", r.N, r.T, r.unconstrained - r.lag_bound));
        c.expect(r.lag_bound <= r.info_bound + 3.0 * r.info_se + round_off,
                 fmt("lqc N=%g T=%g: Lagrangian above info by %g", r.N, r.T, r.lag_bound - r.info_bound));
        c.expect(r.info_bound <= r.proj_value + 3.0 * combined(r.info_se, r.proj_se) + round_off,
                 fmt("lqc N=%g T=%g: info above policy by %g", r.N, r.T, r.info_bound - r.proj_value));
    }
    // The N=1, T=1 cell against the one-dimensional grid searches.
    const auto m = LqcModel::standard(1, 1, 0.5, derive_seed(12, 0));
    const auto s = oracle::scalar_of(m);
    const double pol = oracle::policy_oracle(s), lag = oracle::lagrangian_oracle(s);
    c.expect(std::abs(lrows[0].proj_value - pol) <= 0.005 * pol, fmt("policy %g vs grid %g", lrows[0].proj_value, pol));
    c.expect(std::abs(lrows[0].lag_bound - lag) <= 0.005 * lag, fmt("Lagrangian %g vs grid %g", lrows[0].lag_bound, lag));
}

void ac10(Checks& c) {
    SplitMix rng(777);
    for (int k = 0; k < 500; ++k) {
        const auto lp = oracle::random_lp(rng);
        const auto exact = oracle::vertex_oracle(lp);
        const auto s = solve_lp(lp);
        c.expect(exact.has_value() && s.status == LpStatus::optimal &&
                     std::abs(s.objective_value - *exact) <= 1e-7 * (1.0 + std::abs(*exact)),
                 fmt("LP %g: simplex %g vs vertices %g", k, s.objective_value, exact.value_or(NAN)));
    }

    // One-sided finite differences of the convex Lagrangian and relaxed inner objectives.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto m = fixtures::random_instance(seed, 2, 3, 2);
        const auto nu = InitialDistribution::uniform(m);
        for (double lam : {0.2, 1.0}) {
            double f0 = 0.0;
            const auto g = lagrangian_subgradient(m, nu, {lam}, &f0);
            for (double h : {1e-4, -1e-4}) {
                const double f1 = lagrangian_bound(m, {lam + h}).weighted(m, nu);
                c.expect(f1 - f0 >= g[0] * h - 1e-9, fmt("Lagrangian FD at %g: %g < %g", lam, f1 - f0, g[0] * h));
            }
        }
        const auto lag = optimal_lambda_lp(m, nu);
        const RelaxedContext ctx(m, Penalty::from_lagrangian(lag.bound));
        const auto sc = sample_scenario(2, seed, 4);
        MultiplierPath mu(1, 5);
        for (int t = 0; t < 5; ++t) mu.at(t, 0) = 0.3 * t;
        const auto r = relaxed_inner_eval(ctx, sc, {0, 0}, mu);
        for (int t = 0; t < 5; ++t)
            for (double h : {1e-5, -1e-5}) {
                auto shifted = mu;
                shifted.at(t, 0) = std::max(0.0, shifted.at(t, 0) + h);
                const double step = shifted.at(t, 0) - mu.at(t, 0);
                const double f1 = relaxed_inner_eval(ctx, sc, {0, 0}, shifted).value;
                c.expect(f1 - r.value >= r.subgradient.at(t, 0) * step - 1e-10, "relaxed FD");
            }
    }

    // Chi-square goodness of fit of the inverse-CDF transition at 3 sigma.
    SubproblemSpec sp;
    sp.state_count = 5;
    sp.action_count = 1;
    sp.action_sets.assign(5, {0});
    sp.transition = {0.1, 0.25, 0.05, 0.4, 0.2};
    sp.transition.resize(25, 0.2);
    sp.reward.assign(5, 0.0);
    sp.weight.assign(5, 0.0);
    const std::size_t n = 200000;
    std::vector<double> counts(5, 0.0);
    for (std::size_t k = 0; k < n; ++k) counts[deterministic_transition(sp, 0, 0, counter_uniform(42, 0, k))] += 1.0;
    double chi2 = 0.0;
    for (int y = 0; y < 5; ++y) {
        const double e = n * sp.transition[y];
        chi2 += (counts[y] - e) * (counts[y] - e) / e;
    }
    const double dof = 4.0;
    c.expect(chi2 <= dof + 3.0 * std::sqrt(2.0 * dof), fmt("chi2 = %g", chi2));
}

} // namespace

int main() {
    const std::vector<LatticeRow>* shared = nullptr;
    std::vector<LatticeRow> rows;
    auto lattice = [&]() -> const std::vector<LatticeRow>& {
        if (!shared) {
            rows = lattice_rows();
            shared = &rows;
        }
        return *shared;
    };

    const std::vector<std::pair<const char*, std::function<void(Checks&)>>> criteria = {
        {"AC1 three-state golden values", ac1},
        {"AC2 zero-variance strong duality", ac2},
        {"AC3 bound lattice ordering", [&](Checks& c) { ac3(c, lattice()); }},
        {"AC4 ALP dominance and feasibility", ac4},
        {"AC5 mu descent equals the inner LP", ac5},
        {"AC6 truncation monotonicity", ac6},
        {"AC7 duality gap certificate", [&](Checks& c) { ac7(c, lattice()); }},
        {"AC8 finite-horizon chain and enumeration", ac8},
        {"AC9 bandit and LQC row properties", ac9},
        {"AC10 LP oracle, finite differences, chi-square", ac10},
    };

    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Checks c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            run(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!c.ok()) ++failures;
        std::printf("%s %s (%s, %.1fs)\n", c.ok() ? "PASS" : "FAIL", name, c.detail().c_str(), secs);
        std::fflush(stdout);
    }
    return failures;
}
