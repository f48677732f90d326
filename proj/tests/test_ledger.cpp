#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "lobkit/ledger.hpp"

using namespace lobkit;

namespace {

SamplePath make_path(const TimeGrid& grid, std::vector<double> values) {
    SamplePath p;
    p.grid = grid;
    p.values = std::move(values);
    return p;
}

const ItoProcessSpec kUnitBm = ItoProcessSpec::martingale(1.0, 0.0);

}  // namespace

TEST_CASE("single trade accounting") {
    // L=10, dp=0.1, dL=-2, quadratic cost c(l)=l^2/2
    const TimeGrid grid(1.0, 1);
    const auto p = make_path(grid, {100.0, 100.1});
    const auto L = make_path(grid, {10.0, 8.0});
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));

    const auto limit = discrete_wealth(p, L, cost, OrderType::Limit, 1.0);
    REQUIRE(limit.terminal_wealth() == Catch::Approx(2.8).margin(1e-12));

    const auto market = discrete_wealth(p, L, cost, OrderType::Market, 1.0);
    REQUIRE(market.terminal_wealth() == Catch::Approx(-1.2).margin(1e-12));
}

TEST_CASE("no trades means pure position accounting") {
    const TimeGrid grid(1.0, 200);
    const auto p = simulate_path(ItoProcessSpec::gbm(0.05, 0.3, 100.0), grid, 3);
    const auto L = make_path(grid, std::vector<double>(grid.nodes(), 4.0));
    const auto cost = legendre_transform(ShapeSpec::half_spread_wall(1.0));
    const auto ledger = discrete_wealth(p, L, cost, OrderType::Limit, 200.0);
    REQUIRE(ledger.terminal_wealth() ==
            Catch::Approx(4.0 * (p.back() - p.front())).margin(1e-10));
    REQUIRE(ledger.cost_term.back() == 0.0);
    REQUIRE(ledger.covariation_term.back() == 0.0);
}

TEST_CASE("ledger identities hold exactly") {
    const TimeGrid grid(1.0, 500);
    auto [p, L] = correlated_pair(kUnitBm, kUnitBm, [](double) { return -0.6; }, grid, 5);
    const auto cost = legendre_transform(ShapeSpec::flat(2.0));
    const auto ledger = discrete_wealth(p, L, cost, OrderType::Limit, 500.0, 3.25);
    for (std::size_t k = 0; k < ledger.wealth.size(); ++k) {
        REQUIRE(ledger.wealth[k] ==
                3.25 + ledger.position_term[k] + ledger.cost_term[k] + ledger.covariation_term[k]);
        REQUIRE(ledger.cash[k] == ledger.wealth[k] - p.values[k] * L.values[k]);
    }
}

TEST_CASE("limit orders dominate market orders pathwise") {
    const TimeGrid grid(1.0, 400);
    auto [p, L] = correlated_pair(kUnitBm, kUnitBm, [](double) { return -0.4; }, grid, 9);
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    const auto limit = discrete_wealth(p, L, cost, OrderType::Limit, 400.0);
    const auto market = discrete_wealth(p, L, cost, OrderType::Market, 400.0);

    double twice_costs = 0.0;
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double dl = L.values[k + 1] - L.values[k];
        twice_costs += 2.0 * cost.scaled_eval(dl, 400.0);
    }
    for (std::size_t k = 0; k < limit.wealth.size(); ++k)
        REQUIRE(limit.wealth[k] >= market.wealth[k]);
    REQUIRE(limit.terminal_wealth() - market.terminal_wealth() ==
            Catch::Approx(twice_costs).margin(1e-10));
}

TEST_CASE("asymmetric tabulated costs are rejected") {
    const auto shape = ShapeSpec::tabulated({{-1.0, 2.0}, {0.0, 0.0}, {2.0, 4.0}});
    const auto cost = legendre_transform(shape);
    const TimeGrid grid(1.0, 1);
    const auto p = make_path(grid, {1.0, 1.1});
    const auto L = make_path(grid, {0.0, 0.5});
    REQUIRE_THROWS_AS(discrete_wealth(p, L, cost, OrderType::Limit, 1.0), ValidationError);
}

TEST_CASE("continuous wealth drift matches the ito oracle") {
    // p = W, L = -W on a quadratic-cost book: E[X_1 - X_0] = 0.5 - 1 = -0.5
    const TimeGrid grid(1.0, 256);
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    const std::size_t paths = 10000;
    std::vector<double> xs(paths);
    for (std::size_t i = 0; i < paths; ++i) {
        auto [p, L] = correlated_pair(kUnitBm, kUnitBm, [](double) { return -1.0; }, grid, 41, i);
        const auto ledger =
            continuous_wealth(p, L, {1.0}, {1.0}, {-1.0}, cost, OrderType::Limit);
        xs[i] = ledger.terminal_wealth();
    }
    const auto stat = testutil::mean_se(xs);
    REQUIRE(std::abs(stat.mean - (-0.5)) <= 3.0 * stat.se);
}

TEST_CASE("frictionless reduction at zero inventory vol") {
    const TimeGrid grid(1.0, 300);
    const auto p = simulate_path(kUnitBm, grid, 7);
    std::vector<double> drifting(grid.nodes());
    for (std::size_t k = 0; k < drifting.size(); ++k) drifting[k] = 2.0 + 0.5 * grid.node(k);
    const auto L = make_path(grid, drifting);
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    const auto ledger = continuous_wealth(p, L, {1.0}, {0.0}, {}, cost, OrderType::Market);
    REQUIRE(ledger.terminal_wealth() == Catch::Approx(ledger.position_term.back()).margin(0.0));
    REQUIRE(ledger.cost_term.back() == 0.0);
    REQUIRE(ledger.covariation_term.back() == 0.0);
}

TEST_CASE("market orders on a wall book match the wealth integrand pointwise") {
    const TimeGrid grid(1.0, 100);
    const double s = 0.8, sigma = 1.3, l = 0.6;
    auto [p, L] = correlated_pair(ItoProcessSpec::martingale(sigma, 10.0),
                                  ItoProcessSpec::martingale(l, 1.0),
                                  [](double) { return 1.0; }, grid, 23);
    const auto cost = legendre_transform(ShapeSpec::half_spread_wall(s));
    const auto ledger =
        continuous_wealth(p, L, {sigma}, {l}, {}, cost, OrderType::Market);
    const double dt = grid.dt();
    const double g = s * l * kInvSqrt2Pi;
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double friction = (ledger.cost_term[k + 1] - ledger.cost_term[k]) +
                                (ledger.covariation_term[k + 1] - ledger.covariation_term[k]);
        REQUIRE(std::abs(friction - (sigma * l - g) * dt) <= 1e-10);
    }
}

TEST_CASE("sign constraint is enforced and can be lifted") {
    const TimeGrid grid(1.0, 16);
    auto [p, L] = correlated_pair(kUnitBm, kUnitBm, [](double) { return 1.0; }, grid, 2);
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    // positive covariation cannot come from limit orders
    REQUIRE_THROWS_AS(continuous_wealth(p, L, {1.0}, {1.0}, {}, cost, OrderType::Limit),
                      ConsistencyError);
    ContinuousWealthOptions relaxed;
    relaxed.enforce_sign_constraint = false;
    REQUIRE_NOTHROW(continuous_wealth(p, L, {1.0}, {1.0}, {}, cost, OrderType::Limit, relaxed));
    // and market orders require nonnegative covariation
    REQUIRE_THROWS_AS(continuous_wealth(p, L, {1.0}, {-1.0}, {}, cost, OrderType::Market),
                      ConsistencyError);
}

TEST_CASE("discrete cost flow concentrates around its gaussian mean") {
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    auto mad_at = [&](std::size_t n) {
        const TimeGrid grid(1.0, n);
        double acc = 0.0;
        const std::size_t seeds = 60;
        for (std::size_t s = 0; s < seeds; ++s) {
            const auto w = simulate_path(kUnitBm, grid, 77, s);
            double flow = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                flow += cost.scaled_eval(w.values[k + 1] - w.values[k], static_cast<double>(n));
            acc += std::abs(flow - 0.5);  // E[c(Z)] = 1/2 per unit time
        }
        return acc / static_cast<double>(seeds);
    };
    REQUIRE(mad_at(6400) < mad_at(400) / 2.0);
}

TEST_CASE("deterministic inputs leave no discretization gap") {
    // frozen price and inventory: both accountings are identically zero flows
    const auto price = ItoProcessSpec::martingale(0.0, 1.0);
    const auto inventory = ItoProcessSpec::martingale(0.0, 3.0);
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    const auto result = convergence_experiment(price, inventory, [](double) { return 0.0; }, cost,
                                               OrderType::Market, {100, 400, 1600}, 3, 5);
    for (double dev : result.rms_sup_deviation) REQUIRE(dev <= 1e-10);
}

TEST_CASE("trade-clock wealth converges at rate one half") {
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    const auto result =
        convergence_experiment(kUnitBm, kUnitBm, [](double) { return -1.0; }, cost,
                               OrderType::Limit, {500, 2000, 8000}, 60, 11);
    REQUIRE(result.rms_sup_deviation[0] > result.rms_sup_deviation[1]);
    REQUIRE(result.rms_sup_deviation[1] > result.rms_sup_deviation[2]);
    REQUIRE(result.fitted_rate > 0.3);
    REQUIRE(result.fitted_rate < 0.7);
}

TEST_CASE("market orders converge the same way") {
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    const auto result =
        convergence_experiment(kUnitBm, kUnitBm, [](double) { return 1.0; }, cost,
                               OrderType::Market, {500, 2000, 8000}, 40, 13);
    REQUIRE(result.fitted_rate > 0.3);
    REQUIRE(result.fitted_rate < 0.7);
}

TEST_CASE("scales must divide the finest") {
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    REQUIRE_THROWS_AS(convergence_experiment(kUnitBm, kUnitBm, [](double) { return -1.0; }, cost,
                                             OrderType::Limit, {300, 1000}, 2, 1),
                      ValidationError);
}

TEST_CASE("anti-correlated paths are consistent, comoving ones are not") {
    const TimeGrid grid(1.0, 4096);
    const auto p = simulate_path(kUnitBm, grid, 19);
    SamplePath Lneg = p, Lpos = p;
    for (auto& v : Lneg.values) v = -v;
    REQUIRE(consistency_check(p, Lneg, 64).is_consistent);
    const auto bad = consistency_check(p, Lpos, 64);
    REQUIRE_FALSE(bad.is_consistent);
    REQUIRE(bad.violations.size() == bad.window_count);
}

TEST_CASE("moderate anti-correlation passes the windowed check") {
    const TimeGrid grid(1.0, 100000);
    std::size_t windows = 0, passed = 0;
    for (std::size_t s = 0; s < 20; ++s) {
        auto [p, L] = correlated_pair(kUnitBm, kUnitBm, [](double) { return -0.5; }, grid, 47, s);
        const auto report = consistency_check(p, L, 1000);
        windows += report.window_count;
        passed += report.window_count - report.violations.size();
    }
    REQUIRE(static_cast<double>(passed) >= 0.99 * static_cast<double>(windows));
}

TEST_CASE("consistency window bounds are validated") {
    const TimeGrid grid(1.0, 32);
    const auto p = simulate_path(kUnitBm, grid, 1);
    REQUIRE_THROWS_AS(consistency_check(p, p, 0), ValidationError);
    REQUIRE_THROWS_AS(consistency_check(p, p, 33), ShapeError);
}

TEST_CASE("ledger serializes to csv") {
    const TimeGrid grid(1.0, 1);
    const auto p = make_path(grid, {100.0, 100.1});
    const auto L = make_path(grid, {10.0, 8.0});
    const auto cost = legendre_transform(ShapeSpec::flat(1.0));
    const auto ledger = discrete_wealth(p, L, cost, OrderType::Limit, 1.0);
    std::ostringstream out;
    ledger.write_csv(out);
    std::istringstream in(out.str());
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    REQUIRE(header == "t,X,position_term,cost_term,covariation_term,K");
    // second column of the last row round-trips the terminal wealth
    std::istringstream cols(row1);
    std::string field;
    std::getline(cols, field, ',');
    std::getline(cols, field, ',');
    REQUIRE(std::stod(field) == ledger.terminal_wealth());
}
