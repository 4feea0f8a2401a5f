#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "wcdp/finite_horizon.hpp"
#include "wcdp/model.hpp"

namespace wcdp {

/**
 * JSON layout "wcdp-v1":
 *
 *   { "schema": "wcdp-v1", "discount": 0.9, "budget": [b_1, ...], "null_actions": [..]?,
 *     "subproblems": [ { "states": S, "actions": A, "action_sets": [[..], ..]?,
 *                        "transition": [x][a][x'], "reward": [x][a], "weight": [x][a][l] } ] }
 *
 * Omitted action_sets mean every action is admissible everywhere. "wcdp-fh-v1"
 * replaces discount/budget/subproblems by "horizon" and "periods": [{budget, subproblems}].
 */
nlohmann::json model_to_json(const WeaklyCoupledModel& model);
WeaklyCoupledModel model_from_json(const nlohmann::json& j);

nlohmann::json fh_model_to_json(const FiniteHorizonModel& model);
FiniteHorizonModel fh_model_from_json(const nlohmann::json& j);

WeaklyCoupledModel load_model(const std::string& path);
FiniteHorizonModel load_fh_model(const std::string& path);

/// FNV-1a 64 of a canonical serialisation, as 16 hex digits.
std::string fingerprint(const nlohmann::json& canonical);

std::uint64_t fnv1a64(const std::string& bytes);

} // namespace wcdp
