#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gplab/error.hpp"
#include "gplab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Gross-Pitaevskii and small-N many-body laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::vector<std::string> suites;
    std::optional<std::size_t> samples;

    for (const auto& [name, help] : {std::pair{"gp", "Minimise the GP functional"},
                                     std::pair{"manybody", "Solve the N-boson ground state and its density matrix"},
                                     std::pair{"sweep", "Compare many-body and GP over N at fixed g"},
                                     std::pair{"props", "Run the inequality property suites"}}) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
        sub->add_option("--seed", seed, "Seed (overrides seed)");
        sub->add_option("--jobs", jobs, "Parallel rows or suites")->check(CLI::PositiveNumber);
        if (std::string(name) == "props") {
            sub->add_option("--suite", suites, "Suites to run (dyson, poincare, increment, localization)");
            sub->add_option("--samples", samples, "Samples per suite");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : gplab::exit_code::config_error;
    }

    const std::string mode = app.get_subcommands().front()->get_name();
    gplab::ExperimentConfig cfg;
    try {
        cfg = gplab::load_config(config_path);
        if (mode == "props") gplab::apply_props_overrides(cfg, suites, samples);
    } catch (const gplab::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return gplab::exit_code::config_error;
    }
    if (mode != gplab::to_string(cfg.mode)) {
        std::cerr << "config mode '" << gplab::to_string(cfg.mode) << "' does not match subcommand '" << mode
                  << "'\n";
        return gplab::exit_code::config_error;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.seed = *seed;
    return gplab::run_experiment(cfg, jobs);
}
