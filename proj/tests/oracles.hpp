#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>

#include "wcdp/finite_horizon.hpp"
#include "wcdp/lqc.hpp"

namespace wcdp::oracle {

// Best expected reward over every deterministic Markov policy, each evaluated by
// propagating the joint state distribution forward from x0.
inline double brute_force_fh_value(const FiniteHorizonModel& fm, const JointState& x0) {
    const int T = fm.horizon;
    std::vector<WeaklyCoupledModel> st;
    for (int t = 0; t <= T; ++t) st.push_back(fm.stage(t));
    const JointIndexer idx(st[0]);
    const std::size_t S = idx.size();
    std::vector<std::vector<std::vector<JointAction>>> options(T + 1, std::vector<std::vector<JointAction>>(S));
    for (int t = 0; t <= T; ++t)
        for (std::size_t s = 0; s < S; ++s) options[t][s] = feasible_joint_actions(st[t], idx.decode(s));

    std::vector<std::vector<std::size_t>> choice(T + 1, std::vector<std::size_t>(S, 0));
    auto evaluate = [&]() {
        numvec p(S, 0.0);
        p[idx.encode(x0)] = 1.0;
        double total = 0.0;
        for (int t = 0; t <= T; ++t) {
            numvec next(S, 0.0);
            for (std::size_t s = 0; s < S; ++s) {
                if (p[s] == 0.0) continue;
                const auto x = idx.decode(s);
                const auto& a = options[t][s][choice[t][s]];
                total += p[s] * joint_reward(st[t], x, a);
                for (std::size_t y = 0; y < S; ++y) {
                    const auto xn = idx.decode(y);
                    double q = 1.0;
                    for (int n = 0; n < fm.N(); ++n) q *= st[t].subproblems[n].P(x[n], a[n], xn[n]);
                    next[y] += p[s] * q;
                }
            }
            p = next;
        }
        return total;
    };
    double best = -inf;
    while (true) {
        best = std::max(best, evaluate());
        int t = 0;
        std::size_t s = 0;
        while (t <= T) {
            if (++choice[t][s] < options[t][s].size()) break;
            choice[t][s] = 0;
            if (++s == S) {
                s = 0;
                ++t;
            }
        }
        if (t > T) break;
    }
    return best;
}

// One-period, one-coordinate problem: cost R a^2 + Q (x0 + a + w)^2 with a^2 >= b.
struct Scalar {
    double R, Q, x0, sigma, b;
};

inline Scalar scalar_of(const LqcModel& m) { return {m.R[0][0], m.Q[0], m.x0[0], m.sigma[0][0], m.b}; }

// Best admissible action by grid search over |a| >= sqrt(b).
inline double policy_oracle(const Scalar& s) {
    double best = inf;
    for (double r = std::sqrt(s.b); r <= 5.0; r += 1e-5)
        for (double a : {r, -r}) best = std::min(best, s.R * a * a + s.Q * (s.x0 + a) * (s.x0 + a));
    return best + s.Q * s.sigma * s.sigma;
}

// Dual function maximized by grid search over lambda in [0, R - margin].
inline double lagrangian_oracle(const Scalar& s) {
    double best = -inf;
    for (double lam = 0.0; lam <= s.R - lqc_margin; lam += 1e-6) {
        const double r = s.R - lam;
        best = std::max(best, lam * s.b + s.Q * s.sigma * s.sigma + r * s.Q * s.x0 * s.x0 / (r + s.Q));
    }
    return best;
}

} // namespace wcdp::oracle
