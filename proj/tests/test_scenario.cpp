#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lobkit/scenario.hpp"

using namespace lobkit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("lobkit_test_" + std::to_string(rng::hash(2024, 0, 0, 0) % 100000));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string write_config(const TempDir& dir, const std::string& name, const std::string& body) {
    const fs::path file = dir.path / name;
    std::ofstream out(file);
    out << body;
    return file.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kManipulationConfig = R"(
[scenario]
name = "manip"
experiment = "manipulation"
[manipulation]
lambdas = [0.5, 1.0, 2.0]
inventory_vol = 1.0
mc_check = false
[book]
density = 1.0
[grid]
horizon = 1.0
[mc]
seed = 3
)";

}  // namespace

TEST_CASE("experiment catalog") {
    REQUIRE(cli::experiment_names().size() == 7);
}

TEST_CASE("valid configs produce no violations") {
    TempDir dir;
    const auto path = write_config(dir, "manip.toml", kManipulationConfig);
    const auto scenario = cli::load_scenario(path);
    REQUIRE(cli::validate_scenario(scenario).empty());
}

TEST_CASE("unknown keys are listed") {
    TempDir dir;
    const auto path = write_config(dir, "bad.toml", std::string(kManipulationConfig) +
                                                        "\n[extra]\nmystery = 1\n");
    const auto scenario = cli::load_scenario(path);
    const auto violations = cli::validate_scenario(scenario);
    REQUIRE(violations.size() == 1);
    REQUIRE(violations[0].find("unknown key: extra.mystery") != std::string::npos);
}

TEST_CASE("out-of-range fill correlation is a violation") {
    TempDir dir;
    const auto path = write_config(dir, "mm.toml", R"(
[scenario]
name = "mm"
experiment = "market-make"
[mm]
model = "custom"
rho_const = 2.0
rho_power = 0.0
[alpha]
model = "martingale"
sigma = 0.3
[grid]
steps = 100
[mc]
paths = 10
)");
    const auto violations = cli::validate_scenario(cli::load_scenario(path));
    REQUIRE(violations.size() == 1);
    REQUIRE(violations[0].find("[0,1]") != std::string::npos);
}

TEST_CASE("strict time stepping flags the admissible step") {
    TempDir dir;
    const auto path = write_config(dir, "hedge.toml", R"(
[scenario]
name = "hedge"
experiment = "hedge"
[pde]
payoff = "call"
strike = 100.0
spot = 100.0
sigma = 0.2
sigma_kind = "additive"
spread_mode = "constant"
spread = 0.75
n_space = 200
n_time = 10
auto_substep = false
[grid]
horizon = 1.0
)");
    const auto violations = cli::validate_scenario(cli::load_scenario(path));
    REQUIRE(violations.size() == 1);
    REQUIRE(violations[0].find("admissible") != std::string::npos);
}

TEST_CASE("overrides rewrite config values") {
    TempDir dir;
    const auto path = write_config(dir, "manip.toml", kManipulationConfig);
    const auto scenario = cli::load_scenario(path, {"manipulation.lambdas=[1.0]", "mc.seed=9"});
    REQUIRE(scenario.config.at("manipulation.lambdas").as_array().size() == 1);
    REQUIRE(scenario.config.at("mc.seed").as_integer() == 9);
}

TEST_CASE("no price manipulation at full recovery") {
    TempDir dir;
    const auto path = write_config(dir, "manip.toml", kManipulationConfig);
    const auto scenario = cli::load_scenario(path);
    cli::RunOptions options;
    options.out_dir = (dir.path / "out").string();
    const auto result = cli::run_scenario(scenario, options);
    bool found_zero = false;
    for (const auto& row : result["results"]["rows"])
        if (row["lambda"].get<double>() == 1.0) {
            REQUIRE(row["expected_profit"].get<double>() == 0.0);
            found_zero = true;
        }
    REQUIRE(found_zero);
    REQUIRE(fs::exists(dir.path / "out" / "result.json"));
    REQUIRE(fs::exists(dir.path / "out" / "manipulation.csv"));
}

TEST_CASE("identical seeds produce byte-identical artifacts") {
    TempDir dir;
    const auto path = write_config(dir, "jacod.toml", R"(
[scenario]
name = "jacod-small"
experiment = "verify-jacod"
[jacod]
test_function = "cubic"
drift = 1.0
vol = 1.0
scale = 500
[grid]
horizon = 1.0
[mc]
paths = 300
seed = 9
)");
    const auto scenario = cli::load_scenario(path);
    cli::RunOptions a, b;
    a.out_dir = (dir.path / "a").string();
    b.out_dir = (dir.path / "b").string();
    b.threads = 4;  // threading must not change the bytes
    cli::run_scenario(scenario, a);
    cli::run_scenario(scenario, b);
    REQUIRE(slurp(dir.path / "a" / "result.json") == slurp(dir.path / "b" / "result.json"));

    cli::RunOptions c;
    c.out_dir = (dir.path / "c").string();
    c.seed_override = 10;
    cli::run_scenario(scenario, c);
    REQUIRE(slurp(dir.path / "a" / "result.json") != slurp(dir.path / "c" / "result.json"));
}

TEST_CASE("linear payoff hedge runs end to end") {
    TempDir dir;
    const auto path = write_config(dir, "hedge.toml", R"(
[scenario]
name = "linear-hedge"
experiment = "hedge"
[pde]
payoff = "linear"
slope = 2.0
intercept = 1.0
spot = 100.0
sigma = 0.2
sigma_kind = "additive"
spread_mode = "constant"
spread = 0.75
n_space = 64
n_time = 16
[grid]
horizon = 1.0
)");
    const auto scenario = cli::load_scenario(path);
    cli::RunOptions options;
    options.out_dir = (dir.path / "out").string();
    const auto result = cli::run_scenario(scenario, options);
    REQUIRE(result["results"]["max_abs_value_minus_payoff"].get<double>() <= 1e-10);
    REQUIRE(fs::exists(dir.path / "out" / "surfaces.csv"));
}

TEST_CASE("running an invalid scenario throws a validation error") {
    TempDir dir;
    const auto path = write_config(dir, "bad.toml", R"(
[scenario]
name = "bad"
experiment = "no-such-experiment"
)");
    const auto scenario = cli::load_scenario(path);
    cli::RunOptions options;
    options.out_dir = (dir.path / "out").string();
    REQUIRE_THROWS_AS(cli::run_scenario(scenario, options), ValidationError);
}

TEST_CASE("market-make scenario writes the policy series") {
    TempDir dir;
    const auto path = write_config(dir, "mm.toml", R"(
[scenario]
name = "mm-small"
experiment = "market-make"
[mm]
model = "explicit"
[alpha]
model = "martingale"
sigma = 0.3
spot = 100.0
[grid]
horizon = 1.0
steps = 200
[mc]
paths = 200
seed = 5
)");
    const auto scenario = cli::load_scenario(path);
    cli::RunOptions options;
    options.out_dir = (dir.path / "out").string();
    const auto result = cli::run_scenario(scenario, options);
    REQUIRE(result["results"]["expected_profit"].get<double>() > 0.0);
    const std::string csv = slurp(dir.path / "out" / "policy.csv");
    REQUIRE(csv.rfind("t,alpha,s,sigma,inv_vol\n", 0) == 0);
}
