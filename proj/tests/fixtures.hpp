#pragma once

// Shared instances for unit and acceptance tests.

#include <cstdint>

#include "wcdp/generators.hpp"

namespace wcdp::fixtures {

inline WeaklyCoupledModel three_state(double c = 2.0, double l = 4.0, double beta = 0.9) {
    return three_state_model(c, l, beta);
}

inline WeaklyCoupledModel random_instance(std::uint64_t seed, int N, int S, int A, double beta = 0.9) {
    return random_model(seed, N, S, A, beta);
}

} // namespace wcdp::fixtures
