// wcdp: config-driven runner for the bound lattice.
//
//   wcdp --config run.json --out results/ [--threads K] [--seed S]
//   wcdp compare results/a results/b [--out report.csv]

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wcdp/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Bounds for weakly coupled dynamic programs"};
    app.set_version_flag("--version", std::string(wcdp::wcdp_version));

    std::string config;
    std::string out_dir = "out";
    int threads = 0;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config, "Experiment config (JSON)");
    app.add_option("--out", out_dir, "Output directory for results.csv and manifest.json");
    app.add_option("--threads", threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "Override the config seed");

    auto* compare = app.add_subcommand("compare", "Check the bound ordering across results");
    std::vector<std::string> inputs;
    std::string report;
    compare->add_option("results", inputs, "Run directories or manifest.json files")->required();
    compare->add_option("--out", report, "Also write the report CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (compare->parsed()) return wcdp::compare_cli(inputs, report);
    if (config.empty()) {
        std::fprintf(stderr, "%s\n", app.help().c_str());
        return 2;
    }
    return wcdp::run_cli(config, out_dir, threads, seed);
}
