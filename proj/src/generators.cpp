#include "wcdp/generators.hpp"

#include <algorithm>

#include "wcdp/rng.hpp"

namespace wcdp {

WeaklyCoupledModel three_state_model(double c, double l, double beta) {
    SubproblemSpec sp;
    sp.state_count = 3;
    sp.action_count = 2;
    sp.action_sets = {{0, 1}, {0, 1}, {0, 1}};
    sp.transition.assign(3 * 2 * 3, 0.0);
    sp.reward.assign(3 * 2, 0.0);
    sp.weight.assign(3 * 2, 0.0);
    auto set = [&](int x, int a, int next, double r, double b) {
        sp.transition[(x * 2 + a) * 3 + next] = 1.0;
        sp.reward[x * 2 + a] = r;
        sp.weight[x * 2 + a] = b;
    };
    set(0, 0, 2, 0.0, 0.0);
    set(0, 1, 1, 0.0, 0.0);
    set(1, 0, 1, 0.0, 0.0);
    set(1, 1, 1, c * (2.0 + l), 2.0);
    set(2, 0, 2, 0.0, 0.0);
    set(2, 1, 2, c, 1.0);
    WeaklyCoupledModel m;
    m.subproblems = {sp};
    m.budget = {1.0};
    m.discount = beta;
    m.null_actions = indvec{0};
    return m;
}

WeaklyCoupledModel random_model(std::uint64_t seed, int N, int S, int A, double beta) {
    SplitMix rng(seed);
    WeaklyCoupledModel m;
    m.discount = beta;
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        SubproblemSpec sp;
        sp.state_count = S;
        sp.action_count = A;
        sp.action_sets.assign(S, {});
        for (int x = 0; x < S; ++x)
            for (int a = 0; a < A; ++a) sp.action_sets[x].push_back(a);
        sp.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
        sp.reward.assign(static_cast<std::size_t>(S) * A, 0.0);
        sp.weight.assign(static_cast<std::size_t>(S) * A, 0.0);
        for (int x = 0; x < S; ++x)
            for (int a = 0; a < A; ++a) {
                double sum = 0.0;
                for (int y = 0; y < S; ++y) {
                    const double w = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
                    sp.transition[(static_cast<std::size_t>(x) * A + a) * S + y] = w;
                    sum += w;
                }
                if (sum == 0.0) {
                    sp.transition[(static_cast<std::size_t>(x) * A + a) * S + x] = 1.0;
                    sum = 1.0;
                }
                for (int y = 0; y < S; ++y) sp.transition[(static_cast<std::size_t>(x) * A + a) * S + y] /= sum;
                sp.reward[static_cast<std::size_t>(x) * A + a] = rng.uniform() + (a > 0 ? 0.5 * a : 0.0);
                const double b = a == 0 ? 0.0 : rng.uniform(0.2, 1.0);
                sp.weight[static_cast<std::size_t>(x) * A + a] = b;
                total = std::max(total, b);
            }
        m.subproblems.push_back(std::move(sp));
    }
    m.budget = {0.5 * N * 0.6 + 0.1 * total};
    m.null_actions = indvec(N, 0);
    return m;
}

} // namespace wcdp
