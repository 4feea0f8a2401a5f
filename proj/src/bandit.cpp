#include "wcdp/bandit.hpp"

#include <cmath>
#include <ostream>

#include "wcdp/lagrangian.hpp"
#include "wcdp/practical.hpp"
#include "wcdp/rng.hpp"

namespace wcdp {

BanditInstance generate_bandit(int N, int states, double beta, std::uint64_t seed) {
    if (N < 1 || states < 2) throw ConfigError("bandit needs N >= 1 and at least 2 states");
    BanditInstance inst;
    inst.states = states;
    inst.seed = seed;
    auto& m = inst.model;
    m.discount = beta;
    m.budget = {1.0, -1.0};
    for (int n = 0; n < N; ++n) {
        SplitMix rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
        SubproblemSpec sp;
        sp.state_count = states;
        sp.action_count = 2;
        sp.action_sets.assign(states, indvec{0, 1});
        sp.transition.assign(static_cast<std::size_t>(states) * 2 * states, 0.0);
        sp.reward.assign(static_cast<std::size_t>(states) * 2, 0.0);
        sp.weight.assign(static_cast<std::size_t>(states) * 2 * 2, 0.0);
        for (int a = 0; a < 2; ++a)
            for (int x = 0; x < states; ++x) {
                double* row = sp.transition.data() + (static_cast<std::size_t>(x) * 2 + a) * states;
                double sum = 0.0;
                for (int y = 0; y < states; ++y) sum += row[y] = rng.uniform();
                for (int y = 0; y < states; ++y) row[y] /= sum;
            }
        for (int x = 0; x < states; ++x) {
            sp.reward[static_cast<std::size_t>(x) * 2 + 1] = rng.uniform();
            sp.weight[(static_cast<std::size_t>(x) * 2 + 1) * 2 + 0] = 1.0;
            sp.weight[(static_cast<std::size_t>(x) * 2 + 1) * 2 + 1] = -1.0;
        }
        m.subproblems.push_back(std::move(sp));
    }
    // Project 0 active, the rest passive: fits both rows at every joint state.
    indvec null(N, 0);
    null[0] = 1;
    m.null_actions = null;
    return inst;
}

BanditDefaults bandit_defaults(double beta) {
    if (std::abs(beta - 0.9) < 1e-12) return {50, 200};
    if (std::abs(beta - 0.95) < 1e-12) return {100, 400};
    if (std::abs(beta - 0.98) < 1e-12) return {150, 1000};
    return {static_cast<int>(std::lround(5.0 / (1.0 - beta))), 400};
}

BanditRow run_bandit_table(const BanditInstance& inst, const JointState& x0, const BanditConfig& cfg) {
    const auto& m = inst.model;
    const auto defaults = bandit_defaults(m.discount);
    BanditRow row;
    row.N = m.N();
    row.beta = m.discount;
    row.states = inst.states;
    row.seed = cfg.seed;
    row.truncation = cfg.truncation > 0 ? cfg.truncation : defaults.truncation;
    row.max_iters = cfg.max_iters > 0 ? cfg.max_iters : defaults.max_iters;

    const auto lag = optimal_lambda_lp(m, InitialDistribution::point(m, x0));
    row.lag_bound = lag.bound(x0);

    const auto policy = lagrangian_greedy_policy(m, lag.bound);
    const auto pol = simulate_policy(m, policy, x0, cfg.policy_paths, default_path_horizon(m), cfg.seed, cfg.exec);
    row.policy_value = pol.mean;
    row.policy_se = pol.se;

    const RelaxedContext ctx(m, Penalty::from_lagrangian(lag.bound));
    EstimatorConfig est;
    est.n_scenarios = cfg.info_scenarios;
    est.seed = cfg.seed;
    est.exec = cfg.exec;
    MuSolverConfig solver;
    solver.max_iters = row.max_iters;
    const auto info = estimate_truncated_bound(ctx, x0, est, solver, row.truncation);
    row.info_bound = info.mean;
    row.info_se = info.se;

    row.gap1 = relative_gap(row.info_bound - row.policy_value, row.policy_value, row.lag_bound);
    row.gap2 = relative_gap(row.lag_bound - row.info_bound, row.lag_bound - row.policy_value, row.lag_bound);
    return row;
}

std::vector<BanditRow> run_bandit_grid(const std::vector<int>& Ns, const std::vector<double>& betas, int states,
                                       std::uint64_t instance_seed, const BanditConfig& cfg) {
    std::vector<std::pair<int, double>> cells;
    for (double b : betas)
        for (int n : Ns) cells.emplace_back(n, b);
    std::vector<BanditRow> rows(cells.size());
    BanditConfig inner = cfg;
    inner.exec = Execution::serial;
    for_each_index(cells.size(), cfg.exec, [&](std::size_t i) {
        const auto inst = generate_bandit(cells[i].first, states, cells[i].second, derive_seed(instance_seed, i));
        rows[i] = run_bandit_table(inst, JointState(cells[i].first, 0), inner);
    });
    return rows;
}

void write_bandit_csv(std::ostream& os, const std::vector<BanditRow>& rows) {
    os << "N,beta,policy_value,policy_se,lag_bound,info_bound,info_se,gap1,gap2,seed\n";
    for (const auto& r : rows)
        os << r.N << ',' << format_number(r.beta) << ',' << format_number(r.policy_value) << ','
           << format_number(r.policy_se) << ',' << format_number(r.lag_bound) << ',' << format_number(r.info_bound)
           << ',' << format_number(r.info_se) << ',' << format_gap(r.gap1) << ',' << format_gap(r.gap2) << ','
           << r.seed << '\n';
}

} // namespace wcdp
