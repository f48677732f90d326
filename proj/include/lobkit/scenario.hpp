#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lobkit/csv.hpp"
#include "lobkit/errors.hpp"
#include "lobkit/hedging.hpp"
#include "lobkit/impact.hpp"
#include "lobkit/ledger.hpp"
#include "lobkit/mm.hpp"
#include "lobkit/orderbook.hpp"
#include "lobkit/process.hpp"
#include "lobkit/toml.hpp"

namespace lobkit::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "convergence", "impact-limit", "manipulation", "hedge",
        "replicate",   "market-make",  "verify-jacod"};
    return names;
}

struct Scenario {
    std::string name;
    std::string experiment;
    toml::Document config;
    std::string base_dir;  // resolves relative book files
};

struct RunOptions {
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    std::size_t threads = 1;
};

// ---------------------------------------------------------------------------
// loading and overrides

inline void apply_override(toml::Document& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ValidationError("override must be key=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    doc.set(key, toml::detail::parse_value(assignment.substr(eq + 1), 0));
}

inline Scenario load_scenario(const std::string& path,
                              const std::vector<std::string>& overrides = {}) {
    Scenario s;
    s.config = toml::parse_file(path);
    for (const auto& o : overrides) apply_override(s.config, o);
    s.name = s.config.string_or("scenario.name",
                                std::filesystem::path(path).stem().string());
    s.experiment = s.config.string_or("scenario.experiment", "");
    s.base_dir = std::filesystem::path(path).parent_path().string();
    return s;
}

// ---------------------------------------------------------------------------
// typed builders (shared by validation and execution)

namespace detail {

inline std::uint64_t effective_seed(const Scenario& s, const RunOptions& options) {
    if (options.seed_override) return *options.seed_override;
    return static_cast<std::uint64_t>(s.config.integer_or("mc.seed", 1));
}

inline std::size_t positive_count(const toml::Document& doc, const std::string& key,
                                  std::int64_t fallback) {
    const std::int64_t v = doc.integer_or(key, fallback);
    if (v <= 0) throw ValidationError(key + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

inline TimeGrid build_grid(const toml::Document& doc) {
    return TimeGrid(doc.number_or("grid.horizon", 1.0), positive_count(doc, "grid.steps", 1000));
}

inline ShapeSpec build_shape(const Scenario& s) {
    const std::string shape = s.config.string_or("book.shape", "flat");
    if (shape == "flat") return ShapeSpec::flat(s.config.number_or("book.density", 1.0));
    if (shape == "half-spread-wall")
        return ShapeSpec::half_spread_wall(s.config.number_or("book.spread", 1.0));
    if (shape == "tabulated") {
        const std::string file = s.config.string_or("book.file", "");
        if (file.empty()) throw ValidationError("book.file is required for tabulated shapes");
        const auto path = std::filesystem::path(file).is_absolute()
                              ? std::filesystem::path(file)
                              : std::filesystem::path(s.base_dir) / file;
        return ShapeSpec::load_tabulated(path.string());
    }
    throw ValidationError("book.shape must be flat, half-spread-wall or tabulated");
}

inline ImpactBookModel build_book(const Scenario& s) {
    return ImpactBookModel(build_shape(s), s.config.number_or("book.recovery", 1.0));
}

inline MMModel build_mm_model(const Scenario& s) {
    const std::string scaling_name = s.config.string_or("mm.scaling", "gaussian");
    MMModel::SpreadScaling scaling;
    if (scaling_name == "gaussian")
        scaling = MMModel::SpreadScaling::Gaussian;
    else if (scaling_name == "unit")
        scaling = MMModel::SpreadScaling::Unit;
    else
        throw ValidationError("mm.scaling must be gaussian or unit");

    const std::string model = s.config.string_or("mm.model", "explicit");
    if (model == "explicit") return MMModel::explicit_model(scaling);
    if (model == "custom") {
        const double fill_scale = s.config.number_or("mm.fill_scale", 1.0);
        const double fill_power = s.config.number_or("mm.fill_power", 2.0);
        const double rho_const = s.config.number_or("mm.rho_const", 1.0);
        const double rho_power = s.config.number_or("mm.rho_power", 1.0);
        return MMModel::custom(
            [fill_scale, fill_power](double x) {
                return fill_scale / std::pow(1.0 + x, fill_power);
            },
            [rho_const, rho_power](double x) { return rho_const / std::pow(1.0 + x, rho_power); },
            scaling);
    }
    throw ValidationError("mm.model must be explicit or custom");
}

inline AlphaModel build_alpha_model(const Scenario& s) {
    const std::string model = s.config.string_or("alpha.model", "martingale");
    const double sigma = s.config.number_or("alpha.sigma", 0.3);
    const double spot = s.config.number_or("alpha.spot", 100.0);
    const double T = s.config.number_or("grid.horizon", 1.0);
    if (model == "martingale") return AlphaModel::martingale(sigma, spot, T);
    if (model == "black-scholes")
        return AlphaModel::black_scholes(s.config.number_or("alpha.mu", 0.0), sigma, spot, T);
    if (model == "ou")
        return AlphaModel::ornstein_uhlenbeck(s.config.number_or("alpha.reversion", 1.0), sigma,
                                              spot, T);
    throw ValidationError("alpha.model must be martingale, black-scholes or ou");
}

inline PdeProblem build_pde_problem(const Scenario& s) {
    PdeProblem prob;
    const auto& doc = s.config;
    const double strike = doc.number_or("pde.strike", 100.0);
    const std::string payoff = doc.string_or("pde.payoff", "call");
    if (payoff == "call") {
        prob.payoff = payoffs::call(strike);
        prob.payoff_kinks = {strike};
    } else if (payoff == "put") {
        prob.payoff = payoffs::put(strike);
        prob.payoff_kinks = {strike};
    } else if (payoff == "short-call") {
        prob.payoff = [strike](double p) { return -std::max(p - strike, 0.0); };
        prob.payoff_kinks = {strike};
    } else if (payoff == "call-spread") {
        const double strike2 = doc.number_or("pde.strike2", strike + 10.0);
        prob.payoff = payoffs::call_spread(strike, strike2);
        prob.payoff_kinks = {strike, strike2};
    } else if (payoff == "linear") {
        prob.payoff = payoffs::linear(doc.number_or("pde.slope", 1.0),
                                      doc.number_or("pde.intercept", 0.0));
    } else if (payoff == "constant") {
        prob.payoff = payoffs::constant(doc.number_or("pde.value", 1.0));
    } else {
        throw ValidationError(
            "pde.payoff must be call, put, short-call, call-spread, linear or constant");
    }

    prob.maturity = doc.number_or("grid.horizon", 1.0);
    prob.spot = doc.number_or("pde.spot", 100.0);
    const double vol = doc.number_or("pde.sigma", 0.2);
    const double drift = doc.number_or("pde.drift", 0.0);
    const std::string kind = doc.string_or("pde.sigma_kind", "multiplicative");
    if (kind == "multiplicative") {
        prob.sigma = [vol](double p) { return vol * p; };
        prob.drift = [drift](double p) { return drift * p; };
        prob.mc_process = ItoProcessSpec::gbm(drift, vol, prob.spot);
        const auto [lo, hi] = default_domain_multiplicative(prob.spot, vol, prob.maturity);
        prob.p_min = lo;
        prob.p_max = hi;
    } else if (kind == "additive") {
        prob.sigma = [vol](double) { return vol; };
        prob.drift = [drift](double) { return drift; };
        const auto [lo, hi] = default_domain_additive(prob.spot, vol, prob.maturity);
        prob.p_min = lo;
        prob.p_max = hi;
    } else {
        throw ValidationError("pde.sigma_kind must be multiplicative or additive");
    }
    prob.p_min = doc.number_or("pde.p_min", prob.p_min);
    prob.p_max = doc.number_or("pde.p_max", prob.p_max);

    const std::string spread_mode = doc.string_or("pde.spread_mode", "cancellation");
    if (spread_mode == "cancellation") {
        prob.cost_at = cancellation_book(prob.sigma);
    } else if (spread_mode == "constant") {
        const double spread = doc.number_or("pde.spread", 1.0);
        if (!(spread > 0.0)) throw ValidationError("pde.spread must be > 0");
        prob.cost_at = spread_book([spread](double) { return spread; });
    } else {
        throw ValidationError("pde.spread_mode must be cancellation or constant");
    }

    prob.n_space = positive_count(doc, "pde.n_space", 400);
    prob.n_time = positive_count(doc, "pde.n_time", 400);
    const std::string boundary = doc.string_or("pde.boundary", "linearity");
    if (boundary == "linearity")
        prob.boundary = PdeBoundary::Linearity;
    else if (boundary == "payoff")
        prob.boundary = PdeBoundary::PayoffExtrapolation;
    else
        throw ValidationError("pde.boundary must be linearity or payoff");
    prob.auto_substep = doc.boolean_or("pde.auto_substep", true);
    prob.allow_ill_posed = doc.boolean_or("pde.allow_ill_posed", false);
    prob.smooth_kinks = doc.boolean_or("pde.smooth_kinks", true);
    prob.validate();
    return prob;
}

inline std::vector<std::size_t> build_scales(const toml::Document& doc, const std::string& key) {
    const toml::Value* v = doc.find(key);
    if (!v) throw ValidationError("missing config key: " + key);
    std::vector<std::size_t> scales;
    for (const auto& item : v->as_array()) {
        if (item.as_integer() <= 0) throw ValidationError(key + " entries must be positive");
        scales.push_back(static_cast<std::size_t>(item.as_integer()));
    }
    return scales;
}

// allowed configuration keys per experiment
inline std::set<std::string> allowed_keys(const std::string& experiment) {
    std::set<std::string> keys = {"scenario.name", "scenario.experiment", "output.dir",
                                  "mc.paths",      "mc.seed",             "grid.horizon",
                                  "grid.steps"};
    auto add = [&keys](std::initializer_list<const char*> more) {
        for (const char* k : more) keys.insert(k);
    };
    if (experiment == "convergence")
        add({"convergence.scales", "convergence.seeds", "convergence.order",
             "convergence.correlation", "convergence.reference_refinement", "price.sigma",
             "inventory.sigma", "book.shape", "book.density", "book.spread", "book.file",
             "book.recovery"});
    else if (experiment == "impact-limit")
        add({"impact.scale", "inventory.vol", "inventory.drift", "book.shape", "book.density",
             "book.spread", "book.file", "book.recovery"});
    else if (experiment == "manipulation")
        add({"manipulation.lambdas", "manipulation.inventory_vol", "manipulation.mc_check",
             "manipulation.steps", "book.density"});
    else if (experiment == "hedge" || experiment == "replicate")
        add({"pde.payoff", "pde.strike", "pde.strike2", "pde.slope", "pde.intercept",
             "pde.value", "pde.sigma", "pde.sigma_kind", "pde.drift", "pde.spread_mode",
             "pde.spread", "pde.spot", "pde.p_min", "pde.p_max", "pde.n_space", "pde.n_time",
             "pde.boundary", "pde.auto_substep", "pde.allow_ill_posed", "pde.smooth_kinks",
             "replicate.steps", "replicate.censor_exits"});
    else if (experiment == "market-make")
        add({"mm.model", "mm.scaling", "mm.fill_scale", "mm.fill_power", "mm.rho_const",
             "mm.rho_power", "alpha.model", "alpha.sigma", "alpha.mu", "alpha.reversion",
             "alpha.spot"});
    else if (experiment == "verify-jacod")
        add({"jacod.test_function", "jacod.drift", "jacod.vol", "jacod.scale",
             "jacod.growth_degree"});
    return keys;
}

inline LimitLawSpec build_limit_law_spec(const Scenario& s, std::uint64_t seed,
                                         std::size_t threads) {
    LimitLawSpec spec;
    const std::string fn = s.config.string_or("jacod.test_function", "cubic");
    if (fn == "cubic") {
        spec.test_function = [](double y) { return y * y * y; };
        spec.test_function_slope = [](double y) { return 3.0 * y * y; };
        spec.growth_degree = 3.0;
    } else if (fn == "identity") {
        spec.test_function = [](double y) { return y; };
        spec.test_function_slope = [](double) { return 1.0; };
        spec.growth_degree = 1.0;
    } else {
        throw ValidationError("jacod.test_function must be cubic or identity");
    }
    spec.growth_degree = s.config.number_or("jacod.growth_degree", spec.growth_degree);
    spec.drift = s.config.number_or("jacod.drift", 0.0);
    spec.vol = s.config.number_or("jacod.vol", 1.0);
    spec.scale = positive_count(s.config, "jacod.scale", 10000);
    spec.paths = positive_count(s.config, "mc.paths", 10000);
    spec.horizon = s.config.number_or("grid.horizon", 1.0);
    spec.seed = seed;
    spec.threads = threads;
    return spec;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// validation

inline std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> violations;
    const auto& names = experiment_names();
    if (s.experiment.empty()) {
        violations.push_back("scenario.experiment is required");
        return violations;
    }
    if (std::find(names.begin(), names.end(), s.experiment) == names.end()) {
        violations.push_back("unknown experiment: " + s.experiment);
        return violations;
    }

    const auto allowed = detail::allowed_keys(s.experiment);
    for (const auto& [key, value] : s.config.entries())
        if (!allowed.count(key)) violations.push_back("unknown key: " + key);

    auto attempt = [&violations](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            violations.push_back(e.what());
        }
    };

    attempt([&] { detail::build_grid(s.config); });
    if (s.experiment == "convergence") {
        attempt([&] {
            const auto scales = detail::build_scales(s.config, "convergence.scales");
            if (scales.size() < 2) throw ValidationError("convergence.scales needs >= 2 entries");
            legendre_transform(detail::build_shape(s));
            const std::string order = s.config.string_or("convergence.order", "limit");
            if (order != "limit" && order != "market")
                throw ValidationError("convergence.order must be limit or market");
            const double corr = s.config.number_or(
                "convergence.correlation", order == "limit" ? -1.0 : 1.0);
            if (!(corr >= -1.0 && corr <= 1.0))
                throw ValidationError("convergence.correlation must lie in [-1,1]");
        });
    } else if (s.experiment == "impact-limit") {
        attempt([&] {
            detail::build_book(s);
            if (!(s.config.number_or("inventory.vol", 1.0) >= 0.0))
                throw ValidationError("inventory.vol must be >= 0");
            detail::positive_count(s.config, "impact.scale", 100000);
            detail::positive_count(s.config, "mc.paths", 500);
        });
    } else if (s.experiment == "manipulation") {
        attempt([&] {
            const toml::Value* lambdas = s.config.find("manipulation.lambdas");
            if (!lambdas) throw ValidationError("missing config key: manipulation.lambdas");
            for (const auto& lam : lambdas->as_array())
                if (!(lam.as_number() > 0.0))
                    throw ValidationError("manipulation.lambdas must be positive");
            if (!(s.config.number_or("book.density", 1.0) > 0.0))
                throw ValidationError("book.density must be > 0");
        });
    } else if (s.experiment == "hedge" || s.experiment == "replicate") {
        attempt([&] {
            const PdeProblem prob = detail::build_pde_problem(s);
            if (!prob.auto_substep) {
                const double admissible = estimate_admissible_dtau(prob);
                const double slab = prob.maturity / static_cast<double>(prob.n_time);
                if (slab > admissible)
                    throw ValidationError(
                        "pde.n_time violates the CFL bound: admissible dtau <= " +
                        format_short(admissible) + ", configured " + format_short(slab));
            }
            if (s.experiment == "replicate")
                detail::build_scales(s.config, "replicate.steps");
        });
    } else if (s.experiment == "market-make") {
        attempt([&] {
            detail::build_mm_model(s);
            detail::build_alpha_model(s);
        });
    } else if (s.experiment == "verify-jacod") {
        attempt([&] { detail::build_limit_law_spec(s, 1, 1); });
    }
    return violations;
}

// ---------------------------------------------------------------------------
// execution

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
}

inline json run_convergence(const Scenario& s, std::uint64_t seed) {
    const auto scales = build_scales(s.config, "convergence.scales");
    const std::string order_name = s.config.string_or("convergence.order", "limit");
    const OrderType order = order_name == "limit" ? OrderType::Limit : OrderType::Market;
    const double corr =
        s.config.number_or("convergence.correlation", order == OrderType::Limit ? -1.0 : 1.0);
    const auto cost = legendre_transform(build_shape(s));
    const auto price = ItoProcessSpec::martingale(s.config.number_or("price.sigma", 1.0), 0.0);
    const auto inventory =
        ItoProcessSpec::martingale(s.config.number_or("inventory.sigma", 1.0), 0.0);
    const std::size_t seeds = positive_count(s.config, "convergence.seeds", 200);
    const std::size_t refinement = positive_count(s.config, "convergence.reference_refinement", 4);

    const auto result = convergence_experiment(
        price, inventory, [corr](double) { return corr; }, cost, order, scales, seeds, seed,
        s.config.number_or("grid.horizon", 1.0), {}, refinement);

    json out;
    out["scales"] = result.scales;
    out["rms_sup_deviation"] = result.rms_sup_deviation;
    out["fitted_rate"] = result.fitted_rate;
    out["order"] = order_name;
    out["seeds"] = seeds;
    return out;
}

inline json run_impact_limit(const Scenario& s, std::uint64_t seed, std::size_t threads) {
    const ImpactBookModel book = build_book(s);
    const CostFunction cost = legendre_transform(book.shape);
    const double vol = s.config.number_or("inventory.vol", 1.0);
    const double drift = s.config.number_or("inventory.drift", 0.0);
    const std::size_t scale = positive_count(s.config, "impact.scale", 100000);
    const std::size_t paths = positive_count(s.config, "mc.paths", 500);
    const double horizon = s.config.number_or("grid.horizon", 1.0);

    const auto theory = limit_coeffs_from_inventory(drift, vol, cost, book.recovery);

    const TimeGrid grid(horizon, scale);
    const auto spec = ItoProcessSpec::custom(
        0.0, [drift](double, double) { return drift; }, [vol](double, double) { return vol; });
    std::vector<double> drifts(paths), qvs(paths), covs(paths);
    parallel_for(paths, threads, [&](std::size_t i) {
        const auto L = simulate_path(spec, grid, seed, i);
        const auto p = price_from_trades(L, book, 100.0, static_cast<double>(scale));
        drifts[i] = p.back() - p.front();
        qvs[i] = quadratic_covariation(p, p).back();
        covs[i] = quadratic_covariation(p, L).back();
    });
    double dm = 0, qm = 0, cm = 0;
    for (std::size_t i = 0; i < paths; ++i) {
        dm += drifts[i];
        qm += qvs[i];
        cm += covs[i];
    }
    const double n = static_cast<double>(paths);
    dm /= n;
    qm /= n;
    cm /= n;
    double dv = 0, cv = 0;
    for (std::size_t i = 0; i < paths; ++i) {
        dv += (drifts[i] - dm) * (drifts[i] - dm);
        cv += (covs[i] - cm) * (covs[i] - cm);
    }

    json out;
    out["theory"] = {{"drift_rate", theory.drift_rate},
                     {"vol_rate", theory.vol_rate},
                     {"covariation_rate", theory.covariation_rate}};
    out["sample"] = {{"drift_rate", dm / horizon},
                     {"vol_rate", std::sqrt(qm / horizon)},
                     {"covariation_rate", cm / horizon}};
    out["stderr"] = {{"drift_rate", std::sqrt(dv / (n - 1.0) / n) / horizon},
                     {"covariation_rate", std::sqrt(cv / (n - 1.0) / n) / horizon}};
    out["paths"] = paths;
    out["scale"] = scale;
    for (const auto& w : book.warnings()) out["warnings"].push_back(w);
    return out;
}

inline json run_manipulation(const Scenario& s, std::uint64_t seed) {
    const double density = s.config.number_or("book.density", 1.0);
    const double vol = s.config.number_or("manipulation.inventory_vol", 1.0);
    const double horizon = s.config.number_or("grid.horizon", 1.0);
    const bool mc_check = s.config.boolean_or("manipulation.mc_check", true);

    ManipulationConfig config;
    if (mc_check) {
        config.paths = positive_count(s.config, "mc.paths", 2000);
        config.steps = positive_count(s.config, "manipulation.steps", 1000);
        config.seed = seed;
    }

    json rows = json::array();
    const toml::Value* lambdas = s.config.find("manipulation.lambdas");
    if (!lambdas) throw ValidationError("missing config key: manipulation.lambdas");
    for (const auto& lam : lambdas->as_array()) {
        const auto result = manipulation_profit(density, lam.as_number(), vol, horizon, config);
        json row;
        row["lambda"] = lam.as_number();
        row["expected_profit"] = result.closed_form;
        if (result.has_mc) {
            row["mc_mean"] = result.mc_mean;
            row["mc_standard_error"] = result.mc_standard_error;
        }
        for (const auto& w : result.warnings) row["warnings"].push_back(w);
        rows.push_back(row);
    }
    json out;
    out["rows"] = rows;
    return out;
}

inline json run_hedge(const Scenario& s, const std::string& out_dir) {
    const PdeProblem prob = build_pde_problem(s);
    const PdeSolution sol = solve_pde(prob);
    const auto strat = replication_strategy(sol);

    auto surf = open_output(out_dir + "/surfaces.csv");
    sol.write_csv(surf);

    json out;
    out["price"] = strat.price;
    out["initial_delta"] = strat.initial_delta;
    out["initial_cash"] = strat.initial_cash;
    out["order_class"] = hedge_order_class_name(classify_order_type(sol));
    out["min_parabolicity_margin"] = sol.min_margin();
    double max_dev_from_payoff = 0.0;
    for (std::size_t j = 0; j < sol.pgrid.size(); ++j)
        max_dev_from_payoff = std::max(
            max_dev_from_payoff, std::abs(sol.value[0][j] - prob.payoff(sol.pgrid[j])));
    out["max_abs_value_minus_payoff"] = max_dev_from_payoff;
    return out;
}

inline json run_replicate(const Scenario& s, std::uint64_t seed, const std::string& out_dir,
                          std::size_t threads) {
    const PdeProblem prob = build_pde_problem(s);
    const PdeSolution sol = solve_pde(prob);
    const auto steps = build_scales(s.config, "replicate.steps");

    json rows = json::array();
    std::vector<double> rmss;
    for (std::size_t n : steps) {
        ReplicationConfig config;
        config.paths = positive_count(s.config, "mc.paths", 10000);
        config.steps = n;
        config.seed = seed;
        config.threads = threads;
        config.censor_exits = s.config.boolean_or("replicate.censor_exits", false);
        const auto report = replication_error(sol, prob, config);
        json row;
        row["steps"] = n;
        row["rms"] = report.rms;
        row["mean"] = report.mean;
        row["mean_standard_error"] = report.mean_standard_error;
        row["q05"] = report.q05;
        row["q50"] = report.q50;
        row["q95"] = report.q95;
        row["grid_exits"] = report.grid_exits;
        rows.push_back(row);
        rmss.push_back(report.rms);
    }
    json out;
    out["price"] = sol.price;
    out["rows"] = rows;
    if (steps.size() >= 2 && rmss.front() > 0.0 && rmss.back() > 0.0) {
        out["fitted_rate"] = std::log(rmss.front() / rmss.back()) /
                             std::log(static_cast<double>(steps.back()) /
                                      static_cast<double>(steps.front()));
    }

    auto csv_out = open_output(out_dir + "/replication.csv");
    CsvWriter csv(csv_out, {"steps", "rms", "mean", "mean_standard_error"});
    for (std::size_t i = 0; i < steps.size(); ++i)
        csv.row({static_cast<double>(steps[i]), rows[i]["rms"].get<double>(),
                 rows[i]["mean"].get<double>(), rows[i]["mean_standard_error"].get<double>()});
    return out;
}

inline json run_market_make(const Scenario& s, std::uint64_t seed, const std::string& out_dir) {
    const MMModel model = build_mm_model(s);
    const AlphaModel alpha_model = build_alpha_model(s);
    const TimeGrid grid = build_grid(s.config);
    MMSimConfig config;
    config.paths = positive_count(s.config, "mc.paths", 10000);
    config.seed = seed;
    const auto report = simulate_mm(model, alpha_model, grid, config);

    auto csv_out = open_output(out_dir + "/policy.csv");
    report.sample_policy.write_csv(csv_out, grid);

    json out;
    out["mean_pnl"] = report.mean_pnl;
    out["pnl_standard_error"] = report.pnl_standard_error;
    out["expected_profit"] = report.theory_profit;
    out["mean_inventory_change"] = report.mean_inventory_change;
    out["inventory_standard_error"] = report.inventory_standard_error;
    out["mean_realized_covariation"] = report.mean_realized_covariation;
    out["paths"] = report.paths;
    return out;
}

inline json run_verify_jacod(const Scenario& s, std::uint64_t seed, std::size_t threads) {
    const auto spec = build_limit_law_spec(s, seed, threads);
    const auto report = verify_limit_law(spec);
    json out;
    out["theory"] = {{"mean", report.theory.mean},
                     {"variance", report.theory.variance},
                     {"covariation", report.theory.covariation}};
    out["sample"] = {{"mean", report.sample.mean},
                     {"variance", report.sample.variance},
                     {"covariation", report.sample.covariation}};
    out["stderr"] = {{"mean", report.standard_error.mean},
                     {"variance", report.standard_error.variance},
                     {"covariation", report.standard_error.covariation}};
    out["errors"] = {{"mean", report.mean_error},
                     {"variance", report.variance_error},
                     {"covariation", report.covariation_error}};
    out["scale"] = report.scale;
    out["paths"] = report.paths;
    out["growth_degree"] = report.growth_degree;
    return out;
}

}  // namespace detail

// Runs the scenario, writes result.json plus experiment CSVs into the output
// directory, and returns the result document.
inline json run_scenario(const Scenario& s, const RunOptions& options) {
    const auto violations = validate_scenario(s);
    if (!violations.empty()) {
        std::string all = "invalid scenario:";
        for (const auto& v : violations) all += "\n  - " + v;
        throw ValidationError(all);
    }

    const std::string out_dir =
        !options.out_dir.empty() ? options.out_dir : s.config.string_or("output.dir", "out");
    std::filesystem::create_directories(out_dir);
    const std::uint64_t seed = detail::effective_seed(s, options);

    json results;
    if (s.experiment == "convergence") {
        const auto r = detail::run_convergence(s, seed);
        auto csv_out = open_output(out_dir + "/convergence.csv");
        CsvWriter csv(csv_out, {"scale", "rms_sup_deviation"});
        for (std::size_t i = 0; i < r["scales"].size(); ++i)
            csv.row({static_cast<double>(r["scales"][i].get<std::size_t>()),
                     r["rms_sup_deviation"][i].get<double>()});
        results = r;
    } else if (s.experiment == "impact-limit") {
        results = detail::run_impact_limit(s, seed, options.threads);
    } else if (s.experiment == "manipulation") {
        const auto r = detail::run_manipulation(s, seed);
        auto csv_out = open_output(out_dir + "/manipulation.csv");
        CsvWriter csv(csv_out, {"lambda", "expected_profit", "mc_mean", "mc_standard_error"});
        for (const auto& row : r["rows"]) {
            csv.row({row["lambda"].get<double>(), row["expected_profit"].get<double>(),
                     row.contains("mc_mean") ? row["mc_mean"].get<double>() : 0.0,
                     row.contains("mc_standard_error") ? row["mc_standard_error"].get<double>()
                                                       : 0.0});
        }
        results = r;
    } else if (s.experiment == "hedge") {
        results = detail::run_hedge(s, out_dir);
    } else if (s.experiment == "replicate") {
        results = detail::run_replicate(s, seed, out_dir, options.threads);
    } else if (s.experiment == "market-make") {
        results = detail::run_market_make(s, seed, out_dir);
    } else if (s.experiment == "verify-jacod") {
        results = detail::run_verify_jacod(s, seed, options.threads);
    } else {
        throw ValidationError("unknown experiment: " + s.experiment);
    }

    json doc;
    doc["scenario"] = s.name;
    doc["experiment"] = s.experiment;
    doc["seed"] = seed;
    doc["versions"] = {{"lobkit", kVersion}};
    doc["results"] = results;
    detail::write_text(out_dir + "/result.json", doc.dump(2) + "\n");
    return doc;
}

}  // namespace lobkit::cli
