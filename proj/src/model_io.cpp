#include "wcdp/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace wcdp {

using nlohmann::json;

namespace {

json spec_to_json(const SubproblemSpec& sp, int L) {
    json t = json::array(), r = json::array(), w = json::array();
    for (int x = 0; x < sp.state_count; ++x) {
        json tx = json::array(), rx = json::array(), wx = json::array();
        for (int a = 0; a < sp.action_count; ++a) {
            json row = json::array();
            for (int y = 0; y < sp.state_count; ++y) row.push_back(sp.P(x, a, y));
            tx.push_back(std::move(row));
            rx.push_back(sp.R(x, a));
            json wl = json::array();
            for (int l = 0; l < L; ++l) wl.push_back(sp.B(x, a, l, L));
            wx.push_back(std::move(wl));
        }
        t.push_back(std::move(tx));
        r.push_back(std::move(rx));
        w.push_back(std::move(wx));
    }
    return {{"states", sp.state_count}, {"actions", sp.action_count}, {"action_sets", sp.action_sets},
            {"transition", t},          {"reward", r},                {"weight", w}};
}

// Reads a required field, turning type and presence errors into ConfigError with the path.
template <class T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

SubproblemSpec spec_from_json(const json& j, int L, const std::string& where) {
    SubproblemSpec sp;
    sp.state_count = field<int>(j, "states", where);
    sp.action_count = field<int>(j, "actions", where);
    const int S = sp.state_count, A = sp.action_count;
    if (S < 1 || A < 1) throw ConfigError(where + ": states and actions must be positive");
    if (j.contains("action_sets")) {
        sp.action_sets = field<std::vector<indvec>>(j, "action_sets", where);
    } else {
        indvec all(A);
        for (int a = 0; a < A; ++a) all[a] = a;
        sp.action_sets.assign(S, all);
    }
    const auto t = field<std::vector<std::vector<numvec>>>(j, "transition", where);
    const auto r = field<std::vector<numvec>>(j, "reward", where);
    const auto w = field<std::vector<std::vector<numvec>>>(j, "weight", where);
    if (static_cast<int>(t.size()) != S || static_cast<int>(r.size()) != S || static_cast<int>(w.size()) != S)
        throw ConfigError(where + ": transition, reward and weight need one entry per state");
    sp.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    sp.reward.assign(static_cast<std::size_t>(S) * A, 0.0);
    sp.weight.assign(static_cast<std::size_t>(S) * A * L, 0.0);
    for (int x = 0; x < S; ++x) {
        if (static_cast<int>(t[x].size()) != A || static_cast<int>(r[x].size()) != A ||
            static_cast<int>(w[x].size()) != A)
            throw ConfigError(where + ": every state needs one entry per action");
        for (int a = 0; a < A; ++a) {
            if (static_cast<int>(t[x][a].size()) != S) throw ConfigError(where + ": transition rows need S entries");
            if (static_cast<int>(w[x][a].size()) != L) throw ConfigError(where + ": weights need one entry per row");
            for (int y = 0; y < S; ++y) sp.transition[(static_cast<std::size_t>(x) * A + a) * S + y] = t[x][a][y];
            sp.reward[static_cast<std::size_t>(x) * A + a] = r[x][a];
            for (int l = 0; l < L; ++l) sp.weight[(static_cast<std::size_t>(x) * A + a) * L + l] = w[x][a][l];
        }
    }
    return sp;
}

void expect_schema(const json& j, const char* schema) {
    const auto s = field<std::string>(j, "schema", "model");
    if (s != schema) throw ConfigError("model: expected schema '" + std::string(schema) + "', got '" + s + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace

json model_to_json(const WeaklyCoupledModel& model) {
    json subs = json::array();
    for (const auto& sp : model.subproblems) subs.push_back(spec_to_json(sp, model.L()));
    json j = {{"schema", "wcdp-v1"}, {"discount", model.discount}, {"budget", model.budget}, {"subproblems", subs}};
    if (model.null_actions) j["null_actions"] = *model.null_actions;
    return j;
}

WeaklyCoupledModel model_from_json(const json& j) {
    expect_schema(j, "wcdp-v1");
    WeaklyCoupledModel m;
    m.discount = field<double>(j, "discount", "model");
    m.budget = field<numvec>(j, "budget", "model");
    const auto subs = field<json>(j, "subproblems", "model");
    if (!subs.is_array() || subs.empty()) throw ConfigError("model.subproblems must be a non-empty array");
    for (std::size_t n = 0; n < subs.size(); ++n)
        m.subproblems.push_back(
            spec_from_json(subs[n], m.L(), "model.subproblems[" + std::to_string(n) + "]"));
    if (j.contains("null_actions")) m.null_actions = field<indvec>(j, "null_actions", "model");
    return m;
}

json fh_model_to_json(const FiniteHorizonModel& model) {
    json periods = json::array();
    for (int t = 0; t <= model.horizon; ++t) {
        json subs = json::array();
        for (const auto& sp : model.specs[t]) subs.push_back(spec_to_json(sp, model.L()));
        periods.push_back({{"budget", model.budgets[t]}, {"subproblems", subs}});
    }
    json j = {{"schema", "wcdp-fh-v1"}, {"horizon", model.horizon}, {"periods", periods}};
    if (model.null_actions) j["null_actions"] = *model.null_actions;
    return j;
}

FiniteHorizonModel fh_model_from_json(const json& j) {
    expect_schema(j, "wcdp-fh-v1");
    FiniteHorizonModel m;
    m.horizon = field<int>(j, "horizon", "model");
    const auto periods = field<json>(j, "periods", "model");
    if (!periods.is_array() || static_cast<int>(periods.size()) != m.horizon + 1)
        throw ConfigError("model.periods needs horizon + 1 entries");
    for (std::size_t t = 0; t < periods.size(); ++t) {
        const std::string where = "model.periods[" + std::to_string(t) + "]";
        m.budgets.push_back(field<numvec>(periods[t], "budget", where));
        const auto subs = field<json>(periods[t], "subproblems", where);
        std::vector<SubproblemSpec> specs;
        for (std::size_t n = 0; n < subs.size(); ++n)
            specs.push_back(spec_from_json(subs[n], static_cast<int>(m.budgets.back().size()),
                                           where + ".subproblems[" + std::to_string(n) + "]"));
        m.specs.push_back(std::move(specs));
    }
    if (j.contains("null_actions")) m.null_actions = field<indvec>(j, "null_actions", "model");
    return m;
}

WeaklyCoupledModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

FiniteHorizonModel load_fh_model(const std::string& path) { return fh_model_from_json(read_json_file(path)); }

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint(const json& canonical) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical.dump())));
    return buf;
}

} // namespace wcdp
