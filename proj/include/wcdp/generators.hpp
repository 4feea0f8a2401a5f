#pragma once

#include <cstdint>

#include "wcdp/model.hpp"

namespace wcdp {

/**
 * Three-state single-project instance with a closed-form solution: from state 0
 * the controller either parks in state 2 (reward c per period, weight 1) or
 * moves to state 1 (reward c(2 + l) per period, weight 2). Budget 1.
 */
WeaklyCoupledModel three_state_model(double c = 2.0, double l = 4.0, double beta = 0.9);

/**
 * Random instance with a free null action 0 in every state and a single
 * budget row that binds for roughly half the projects.
 */
WeaklyCoupledModel random_model(std::uint64_t seed, int N, int S, int A, double beta = 0.9);

} // namespace wcdp
