// Command-line front end: scenario-driven experiments on the self-financing
// wealth toolkit. See README.md for the scenario schema.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lobkit/errors.hpp"
#include "lobkit/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

int classify_error(const std::exception& e) {
    if (dynamic_cast<const lobkit::ValidationError*>(&e) ||
        dynamic_cast<const lobkit::ConfigError*>(&e) ||
        dynamic_cast<const lobkit::UnsupportedError*>(&e) ||
        dynamic_cast<const lobkit::ShapeError*>(&e))
        return kExitValidation;
    if (dynamic_cast<const lobkit::Error*>(&e)) return kExitNumeric;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lobkit: self-financing wealth, price impact, hedging and "
                 "market-making experiments on limit-order-book models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;

    auto* run = app.add_subcommand("run", "run a scenario and write its artifacts");
    run->add_option("config", config_path, "scenario file (TOML)")->required();
    run->add_option("--out", out_dir, "output directory (default: [output].dir or ./out)");
    run->add_option("--seed", seed, "override the Monte Carlo seed");
    run->add_option("--set", overrides, "override a config key, e.g. --set book.recovery=1.0")
        ->take_all();
    run->add_option("--threads", threads, "worker threads for Monte Carlo loops");

    auto* validate = app.add_subcommand("validate", "report config violations without running");
    validate->add_option("config", config_path, "scenario file (TOML)")->required();
    validate->add_option("--set", overrides, "override a config key")->take_all();

    app.add_subcommand("list-experiments", "print the available experiment names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list-experiments")) {
            for (const auto& name : lobkit::cli::experiment_names()) std::cout << name << "\n";
            return kExitOk;
        }

        const auto scenario = lobkit::cli::load_scenario(config_path, overrides);

        if (app.got_subcommand("validate")) {
            const auto violations = lobkit::cli::validate_scenario(scenario);
            if (violations.empty()) {
                std::cout << "ok: " << scenario.name << " (" << scenario.experiment << ")\n";
            } else {
                std::cout << violations.size() << " violation(s):\n";
                for (const auto& v : violations) std::cout << "  - " << v << "\n";
            }
            return kExitOk;
        }

        lobkit::cli::RunOptions options;
        if (!out_dir.empty())
            options.out_dir = out_dir;
        else
            options.out_dir = scenario.config.string_or("output.dir", "out");
        options.seed_override = seed;
        options.threads = threads;

        const auto result = lobkit::cli::run_scenario(scenario, options);
        std::cout << "wrote " << options.out_dir << "/result.json\n";
        std::cout << result["results"].dump(2) << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_error(e);
    }
}
