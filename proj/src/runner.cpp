#include "wcdp/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "wcdp/bandit.hpp"
#include "wcdp/finite_horizon.hpp"
#include "wcdp/generators.hpp"
#include "wcdp/inforelax.hpp"
#include "wcdp/lagrangian.hpp"
#include "wcdp/lqc.hpp"
#include "wcdp/model_io.hpp"
#include "wcdp/practical.hpp"

namespace wcdp {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code(Error::Kind kind) {
    switch (kind) {
    case Error::Kind::config:
    case Error::Kind::model: return 2;
    case Error::Kind::guard: return 3;
    case Error::Kind::numerical: return 4;
    }
    return 4;
}

namespace {

const std::set<std::string> known_modes = {"exact",        "lagrangian", "alp",       "info", "practical",
                                           "bandit-table", "lqc-table",  "finite-horizon"};

bool stochastic(const std::string& mode) {
    return mode == "info" || mode == "practical" || mode == "bandit-table" || mode == "lqc-table" ||
           mode == "finite-horizon";
}

template <class T>
T get(const json& j, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config.") + key + ": " + e.what());
    }
}

template <class T>
T require(const json& j, const char* key, const char* where) {
    if (!j.contains(key)) throw ConfigError(std::string(where) + ": missing field '" + key + "'");
    return get<T>(j, key, T{});
}

// Doubles printed so that reading them back gives the same bits.
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string state_text(const JointState& x) {
    std::string s;
    for (std::size_t n = 0; n < x.size(); ++n) s += (n ? ";" : "") + std::to_string(x[n]);
    return s;
}

class ResultsWriter {
public:
    ResultsWriter() { os_ << "key,state,value,se,count,seed\n"; }

    void exact(const std::string& key, const std::string& state, double value) {
        os_ << key << ',' << state << ',' << num(value) << ",,,\n";
    }
    void estimate(const std::string& key, const std::string& state, const BoundEstimate& e) {
        os_ << key << ',' << state << ',' << num(e.mean) << ',' << num(e.se) << ',' << e.count << ',' << e.seed
            << '\n';
    }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

json summary(const std::string& kind, double value, const std::string& weighting) {
    return {{"kind", kind}, {"value", value}, {"se", 0.0}, {"n", 0}, {"seed", nullptr}, {"weighting", weighting}};
}

json summary(const std::string& kind, const BoundEstimate& e, const std::string& weighting) {
    return {{"kind", kind}, {"value", e.mean}, {"se", e.se}, {"n", e.count}, {"seed", e.seed}, {"weighting", weighting}};
}

WeaklyCoupledModel build_model(const json& spec, const std::string& base_dir) {
    if (!spec.is_object()) throw ConfigError("config.model must be an object");
    WeaklyCoupledModel m;
    if (spec.contains("file")) {
        fs::path p = get<std::string>(spec, "file", "");
        if (p.is_relative()) p = fs::path(base_dir) / p;
        m = load_model(p.string());
    } else {
        const auto gen = require<std::string>(spec, "generator", "config.model");
        const double beta = get<double>(spec, "beta", 0.9);
        if (gen == "three-state") {
            m = three_state_model(get<double>(spec, "c", 2.0), get<double>(spec, "l", 4.0), beta);
        } else if (gen == "random") {
            m = random_model(require<std::uint64_t>(spec, "seed", "config.model"), get<int>(spec, "N", 2),
                             get<int>(spec, "states", 3), get<int>(spec, "actions", 2), beta);
        } else if (gen == "bandit") {
            m = generate_bandit(get<int>(spec, "N", 2), get<int>(spec, "states", 4), beta,
                                require<std::uint64_t>(spec, "seed", "config.model"))
                    .model;
        } else {
            throw ConfigError("config.model.generator: unknown generator '" + gen + "'");
        }
    }
    require_valid(m);
    return m;
}

JointState start_state(const json& doc, int N) {
    auto x0 = get<JointState>(doc, "x0", JointState(N, 0));
    if (static_cast<int>(x0.size()) != N) throw ConfigError("config.x0 needs one entry per project");
    return x0;
}

struct Weighting {
    InitialDistribution nu;
    std::string label;
};

Weighting weighting(const json& doc, const WeaklyCoupledModel& m, const JointState& x0) {
    const auto kind = get<std::string>(doc, "initial", "point");
    if (kind == "point") return {InitialDistribution::point(m, x0), "point:" + state_text(x0)};
    if (kind == "uniform") return {InitialDistribution::uniform(m), "uniform"};
    throw ConfigError("config.initial must be 'point' or 'uniform'");
}

EstimatorConfig estimator(const json& doc, Execution exec) {
    EstimatorConfig est;
    est.n_scenarios = doc.at("n_scenarios").get<std::size_t>();
    est.seed = doc.at("seed").get<std::uint64_t>();
    est.tau_cap = get<int>(doc, "tau_cap", -1);
    est.exec = exec;
    return est;
}

MuSolverConfig solver(const json& doc) {
    MuSolverConfig cfg;
    const auto sg = get<json>(doc, "subgradient", json::object());
    cfg.step0 = get<double>(sg, "step0", cfg.step0);
    cfg.kappa = get<double>(sg, "kappa", cfg.kappa);
    cfg.max_iters = get<int>(sg, "max_iters", cfg.max_iters);
    if (cfg.step0 <= 0.0 || cfg.kappa <= 0.0 || cfg.max_iters < 1)
        throw ConfigError("config.subgradient needs step0 > 0, kappa > 0, max_iters >= 1");
    return cfg;
}

Penalty build_penalty(const std::string& name, const WeaklyCoupledModel& m, const JointState& x0) {
    if (name == "lagrangian") return Penalty::from_lagrangian(optimal_lambda_lp(m, InitialDistribution::point(m, x0)).bound);
    if (name == "alp") return Penalty::from_alp(alp_bound(m, InitialDistribution::point(m, x0)));
    if (name == "exact") return Penalty::from_table(joint_value_iteration(m).value);
    if (name == "zero") return Penalty::zero(m);
    throw ConfigError("config.penalty: unknown penalty '" + name + "'");
}

void write_subproblem_values(ResultsWriter& out, const std::string& key, const std::vector<ValueTable>& parts) {
    for (std::size_t n = 0; n < parts.size(); ++n)
        for (std::size_t x = 0; x < parts[n].size(); ++x)
            out.exact(key + "[" + std::to_string(n) + "]", std::to_string(x), parts[n][x]);
}

struct ModeResult {
    std::string results;
    json summaries = json::array();
    std::string fingerprint;
};

ModeResult run_discounted(const ExperimentConfig& cfg, Execution exec) {
    const auto& doc = cfg.document;
    const auto m = build_model(doc.at("model"), cfg.base_dir);
    const auto x0 = start_state(doc, m.N());
    ModeResult r;
    r.fingerprint = fingerprint(model_to_json(m));
    ResultsWriter out;

    if (cfg.mode == "exact") {
        const auto w = weighting(doc, m, x0);
        const auto jv = joint_value_iteration(m);
        const JointIndexer index(m);
        for (std::size_t s = 0; s < index.size(); ++s) out.exact("V", state_text(index.decode(s)), jv.value[s]);
        const double v = expectation(m, w.nu, jv.value);
        out.exact("bound", w.label, v);
        r.summaries.push_back(summary("exact", v, w.label));
    } else if (cfg.mode == "lagrangian") {
        const auto w = weighting(doc, m, x0);
        const auto lag = optimal_lambda_lp(m, w.nu);
        for (std::size_t l = 0; l < lag.lambda.size(); ++l)
            out.exact("lambda[" + std::to_string(l) + "]", "", lag.lambda[l]);
        out.exact("constant", "", lag.bound.constant);
        write_subproblem_values(out, "H", lag.bound.subproblem_values);
        out.exact("bound", w.label, lag.objective);
        r.summaries.push_back(summary("lagrangian", lag.objective, w.label));
    } else if (cfg.mode == "alp") {
        const auto w = weighting(doc, m, x0);
        const auto alp = alp_bound(m, w.nu);
        out.exact("theta", "", alp.theta);
        write_subproblem_values(out, "H", alp.subproblem_values);
        out.exact("min_slack", "", alp.min_slack);
        out.exact("constraints", "", static_cast<double>(alp.constraint_count));
        out.exact("bound", w.label, alp.objective);
        r.summaries.push_back(summary("alp", alp.objective, w.label));
    } else {
        if (get<std::string>(doc, "initial", "point") != "point")
            throw ConfigError("config.initial: info and practical bounds are defined at a point x0");
        const auto name = get<std::string>(doc, "penalty", "lagrangian");
        const auto pen = build_penalty(name, m, x0);
        const auto est = estimator(doc, exec);
        const std::string label = "point:" + state_text(x0);
        BoundEstimate e;
        if (cfg.mode == "info") {
            e = estimate_info_bound(m, pen, x0, est);
        } else {
            if (pen.kind != Penalty::Kind::separable)
                throw ConfigError("config.penalty: the practical bound needs a separable penalty");
            const RelaxedContext ctx(m, pen);
            e = estimate_practical_bound(ctx, x0, est, solver(doc), get<int>(doc, "truncation", -1));
        }
        out.estimate("bound", label, e);
        out.exact("bias_bound", "", e.bias_bound);
        r.summaries.push_back(summary(cfg.mode, e, label));
    }
    r.results = out.str();
    return r;
}

ModeResult run_finite_horizon(const ExperimentConfig& cfg, Execution exec) {
    const auto& doc = cfg.document;
    const auto& spec = doc.at("model");
    FiniteHorizonModel fm;
    bool have = false;
    if (spec.is_object() && spec.contains("file")) {
        fs::path p = get<std::string>(spec, "file", "");
        if (p.is_relative()) p = fs::path(cfg.base_dir) / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot open '" + p.string() + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("model file is not valid JSON: ") + e.what());
        }
        if (get<std::string>(j, "schema", "") == "wcdp-fh-v1") {
            fm = fh_model_from_json(j);
            have = true;
        }
    }
    if (!have) fm = fold_discount(build_model(spec, cfg.base_dir), require<int>(doc, "horizon", "config"));
    validate_finite_horizon(fm);

    const auto x0 = start_state(doc, fm.N());
    const std::string label = "point:" + state_text(x0);
    const auto n = doc.at("n_scenarios").get<std::size_t>();
    const auto seed = doc.at("seed").get<std::uint64_t>();

    ModeResult r;
    r.fingerprint = fingerprint(fh_model_to_json(fm));
    ResultsWriter out;
    const auto v = fh_value(fm);
    const double u0 = v.values[0][JointIndexer(fm.stage(0)).encode(x0)];
    const auto lag = fh_optimal_lambda(fm, x0);
    const auto pen = FhPenalty::from_lagrangian(lag.bound);
    const auto info = fh_info_bound(fm, pen, x0, n, seed, exec);
    const auto prac = fh_practical_bound(fm, pen, x0, n, seed, solver(doc), exec);

    out.exact("U0", label, u0);
    out.estimate("info", label, info);
    out.estimate("practical", label, prac);
    out.exact("J0", label, lag.objective);
    for (std::size_t t = 0; t < lag.bound.lambdas.size(); ++t)
        for (std::size_t l = 0; l < lag.bound.lambdas[t].size(); ++l)
            out.exact("lambda[" + std::to_string(t) + "][" + std::to_string(l) + "]", "", lag.bound.lambdas[t][l]);
    r.summaries.push_back(summary("exact", u0, label));
    r.summaries.push_back(summary("info", info, label));
    r.summaries.push_back(summary("practical", prac, label));
    r.summaries.push_back(summary("lagrangian", lag.objective, label));
    r.results = out.str();
    return r;
}

ModeResult run_bandit_mode(const ExperimentConfig& cfg, Execution exec) {
    const auto& doc = cfg.document;
    const auto b = get<json>(doc, "bandit", json::object());
    BanditConfig bc;
    bc.seed = doc.at("seed").get<std::uint64_t>();
    bc.policy_paths = get<std::size_t>(b, "policy_paths", bc.policy_paths);
    bc.info_scenarios = get<std::size_t>(b, "info_scenarios", bc.info_scenarios);
    bc.truncation = get<int>(b, "truncation", -1);
    bc.max_iters = get<int>(b, "max_iters", -1);
    bc.exec = exec;
    if (bc.policy_paths == 0 || bc.info_scenarios == 0)
        throw ConfigError("config.bandit: path and scenario counts must be positive");
    const auto Ns = get<std::vector<int>>(b, "N", {2, 5});
    const auto betas = get<std::vector<double>>(b, "beta", {0.9});
    const int states = get<int>(b, "states", 4);
    const auto instance_seed = get<std::uint64_t>(b, "instance_seed", bc.seed);
    const auto rows = run_bandit_grid(Ns, betas, states, instance_seed, bc);
    std::ostringstream os;
    write_bandit_csv(os, rows);
    ModeResult r;
    r.results = os.str();
    r.fingerprint = fingerprint({{"bandit", b}, {"instance_seed", instance_seed}});
    return r;
}

ModeResult run_lqc_mode(const ExperimentConfig& cfg, Execution exec) {
    const auto& doc = cfg.document;
    const auto q = get<json>(doc, "lqc", json::object());
    LqcConfig lc;
    lc.seed = doc.at("seed").get<std::uint64_t>();
    lc.policy_paths = get<std::size_t>(q, "policy_paths", lc.policy_paths);
    lc.info_paths = get<std::size_t>(q, "info_paths", lc.info_paths);
    lc.exec = exec;
    if (lc.policy_paths == 0 || lc.info_paths == 0) throw ConfigError("config.lqc: path counts must be positive");
    std::vector<LqcCell> cells;
    for (const auto& c : get<json>(q, "cells", json::array({{{"N", 1}, {"b", 1.0}, {"T", 1}}})))
        cells.push_back({require<int>(c, "N", "config.lqc.cells"), require<double>(c, "b", "config.lqc.cells"),
                         require<int>(c, "T", "config.lqc.cells")});
    const auto model_seed = get<std::uint64_t>(q, "model_seed", lc.seed);
    const auto rows = run_lqc_table(cells, model_seed, lc);
    std::ostringstream os;
    write_lqc_csv(os, rows);
    ModeResult r;
    r.results = os.str();
    r.fingerprint = fingerprint({{"lqc", q}, {"model_seed", model_seed}});
    return r;
}

json error_record(const std::string& tag, int code, const std::string& message) {
    return {{"status", "error"}, {"kind", tag}, {"exit_code", code}, {"message", message}};
}

} // namespace

ExperimentConfig parse_experiment(const json& document, const std::string& base_dir,
                                  std::optional<std::uint64_t> seed_override) {
    if (!document.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;
    cfg.document = document;
    cfg.base_dir = base_dir;
    cfg.mode = require<std::string>(document, "mode", "config");
    if (!known_modes.count(cfg.mode)) throw ConfigError("config.mode: unknown mode '" + cfg.mode + "'");
    if (seed_override) cfg.document["seed"] = *seed_override;
    auto& doc = cfg.document;

    if (stochastic(cfg.mode)) {
        if (!doc.contains("seed")) throw ConfigError("config.seed is required for mode '" + cfg.mode + "'");
        (void)get<std::uint64_t>(doc, "seed", 0);
    }
    if (cfg.mode == "info" || cfg.mode == "practical" || cfg.mode == "finite-horizon") {
        if (!doc.contains("n_scenarios")) throw ConfigError("config.n_scenarios is required");
        long long n = 0;
        try {
            n = doc.at("n_scenarios").get<long long>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config.n_scenarios: ") + e.what());
        }
        if (n <= 0) throw ConfigError("config.n_scenarios must be positive");
    }
    if (cfg.mode != "bandit-table" && cfg.mode != "lqc-table" && !doc.contains("model"))
        throw ConfigError("config.model is required for mode '" + cfg.mode + "'");
    return cfg;
}

RunOutput run_experiment(const ExperimentConfig& cfg, Execution exec) {
    const auto start = std::chrono::steady_clock::now();
    ModeResult r;
    if (cfg.mode == "finite-horizon")
        r = run_finite_horizon(cfg, exec);
    else if (cfg.mode == "bandit-table")
        r = run_bandit_mode(cfg, exec);
    else if (cfg.mode == "lqc-table")
        r = run_lqc_mode(cfg, exec);
    else
        r = run_discounted(cfg, exec);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RunOutput out;
    out.results = std::move(r.results);
    out.manifest = {{"tool", "wcdp"},
                    {"version", wcdp_version},
                    {"mode", cfg.mode},
                    {"config", cfg.document},
                    {"seeds", {{"seed", cfg.document.contains("seed") ? cfg.document["seed"] : json(nullptr)}}},
                    {"threads", exec == Execution::serial ? 1 : thread_count()},
                    {"wall_clock_seconds", seconds},
                    {"fingerprint", r.fingerprint},
                    {"results_file", "results.csv"},
                    {"results_fnv1a64", fingerprint(json(out.results))},
                    {"summary", r.summaries}};
    return out;
}

int run_cli(const std::string& config_path, const std::string& out_dir, int threads,
            std::optional<std::uint64_t> seed_override) {
    auto fail = [&](const std::string& tag, int code, const std::string& message) {
        const auto rec = error_record(tag, code, message);
        std::cerr << rec.dump() << '\n';
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (!ec) std::ofstream(fs::path(out_dir) / "error.json") << rec.dump(2) << '\n';
        return code;
    };
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config '" + config_path + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        set_thread_count(threads);
        const auto base = fs::path(config_path).parent_path().string();
        const auto cfg = parse_experiment(doc, base.empty() ? "." : base, seed_override);
        const auto out = run_experiment(cfg, Execution::parallel);

        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "results.csv", std::ios::binary) << out.results;
        std::ofstream(fs::path(out_dir) / "manifest.json") << out.manifest.dump(2) << '\n';
        return 0;
    } catch (const Error& e) {
        return fail(e.tag(), exit_code(e.kind()), e.what());
    } catch (const json::exception& e) {
        return fail("config-error", 2, e.what());
    } catch (const std::exception& e) {
        return fail("numerical-failure", 4, e.what());
    }
}

namespace {

int rank(const std::string& kind) {
    if (kind == "exact") return 0;
    if (kind == "info") return 1;
    if (kind == "practical") return 2;
    if (kind == "lagrangian") return 3;
    if (kind == "alp") return 10;
    return -1;
}

bool ordered(const std::string& lower, const std::string& upper) {
    const int a = rank(lower), b = rank(upper);
    if (a < 0 || b < 0) return false;
    if (a == 10) return b == 3;
    if (b == 10) return false;
    return a < b;
}

} // namespace

CompareReport compare_manifests(const std::vector<json>& manifests) {
    if (manifests.empty()) throw ConfigError("compare needs at least one results manifest");
    CompareReport report;
    struct Entry {
        std::string kind, weighting;
        double value, se;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        const auto& m = manifests[i];
        const auto fp = get<std::string>(m, "fingerprint", "");
        if (i == 0)
            report.fingerprint = fp;
        else if (fp != report.fingerprint)
            throw ConfigError("fingerprint mismatch: '" + report.fingerprint + "' vs '" + fp + "'");
        for (const auto& s : get<json>(m, "summary", json::array())) {
            Entry e;
            e.kind = require<std::string>(s, "kind", "summary");
            e.weighting = get<std::string>(s, "weighting", "");
            e.value = require<double>(s, "value", "summary");
            const bool is_stochastic = e.kind == "info" || e.kind == "practical";
            if (is_stochastic && (!s.contains("se") || !s["se"].is_number() || !s.contains("n") ||
                                  !s["n"].is_number() || get<double>(s, "n", 0) <= 0 || !s.contains("seed") ||
                                  s["seed"].is_null()))
                throw ConfigError("stochastic summary '" + e.kind + "' lacks se, n or seed");
            e.se = s.contains("se") && s["se"].is_number() ? s["se"].get<double>() : 0.0;
            entries.push_back(e);
        }
    }
    for (const auto& lo : entries)
        for (const auto& hi : entries) {
            if (!ordered(lo.kind, hi.kind)) continue;
            CompareRow row;
            row.lower = lo.kind;
            row.upper = hi.kind;
            row.lower_value = lo.value;
            row.upper_value = hi.value;
            row.slack = 3.0 * std::sqrt(lo.se * lo.se + hi.se * hi.se);
            const double tol = 1e-6 * std::max({1.0, std::abs(lo.value), std::abs(hi.value)});
            const double diff = hi.value - lo.value;
            if (lo.weighting != hi.weighting)
                row.status = "skipped";
            else if (std::abs(diff) <= tol && row.slack <= tol)
                row.status = "equal";
            else if (diff >= -row.slack - tol)
                row.status = "pass";
            else
                row.status = "violation";
            if (row.status == "violation") ++report.violations;
            report.rows.push_back(row);
        }
    return report;
}

std::string format_compare(const CompareReport& report) {
    std::ostringstream os;
    os << "lower,upper,lower_value,upper_value,difference,slack,status\n";
    for (const auto& r : report.rows)
        os << r.lower << ',' << r.upper << ',' << num(r.lower_value) << ',' << num(r.upper_value) << ','
           << num(r.upper_value - r.lower_value) << ',' << num(r.slack) << ',' << r.status << '\n';
    return os.str();
}

int compare_cli(const std::vector<std::string>& inputs, const std::string& out_path) {
    try {
        std::vector<json> manifests;
        for (const auto& in : inputs) {
            fs::path p = in;
            if (fs::is_directory(p)) p /= "manifest.json";
            std::ifstream f(p);
            if (!f) throw ConfigError("cannot open '" + p.string() + "'");
            try {
                manifests.push_back(json::parse(f));
            } catch (const json::parse_error& e) {
                throw ConfigError("'" + p.string() + "' is not valid JSON: " + e.what());
            }
        }
        const auto report = compare_manifests(manifests);
        const auto text = format_compare(report);
        std::cout << text;
        if (!out_path.empty()) std::ofstream(out_path, std::ios::binary) << text;
        return report.violations == 0 ? 0 : 1;
    } catch (const Error& e) {
        const int code = exit_code(e.kind());
        std::cerr << error_record(e.tag(), code, e.what()).dump() << '\n';
        return code;
    }
}

} // namespace wcdp
