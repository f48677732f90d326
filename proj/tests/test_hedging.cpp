#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "lobkit/hedging.hpp"

using namespace lobkit;

namespace {

// Frictionless reference marcher for v_tau = sigma(p)^2/2 v_pp, used to
// cross-check the nonlinear solver in the cancellation regime.
std::vector<double> frictionless_reference(const std::vector<double>& pgrid,
                                           const std::function<double(double)>& sigma,
                                           const std::function<double(double)>& payoff,
                                           double maturity, std::size_t substeps) {
    const double dp = pgrid[1] - pgrid[0];
    const double dtau = maturity / static_cast<double>(substeps);
    std::vector<double> w(pgrid.size()), next(pgrid.size());
    for (std::size_t j = 0; j < pgrid.size(); ++j) w[j] = payoff(pgrid[j]);
    for (std::size_t s = 0; s < substeps; ++s) {
        for (std::size_t j = 1; j + 1 < w.size(); ++j) {
            const double sv = sigma(pgrid[j]);
            const double u = (w[j + 1] - 2.0 * w[j] + w[j - 1]) / (dp * dp);
            next[j] = w[j] + dtau * 0.5 * sv * sv * u;
        }
        next[0] = 2.0 * next[1] - next[2];
        next[w.size() - 1] = 2.0 * next[w.size() - 2] - next[w.size() - 3];
        std::swap(w, next);
    }
    return w;
}

PdeProblem cancellation_call_problem(std::size_t n_space, std::size_t n_time) {
    PdeProblem prob;
    const double rel_vol = 0.2;
    prob.payoff = payoffs::call(100.0);
    prob.payoff_kinks = {100.0};
    prob.maturity = 1.0;
    prob.sigma = [rel_vol](double p) { return rel_vol * p; };
    prob.drift = [](double) { return 0.0; };
    prob.cost_at = cancellation_book(prob.sigma);
    prob.spot = 100.0;
    const auto [lo, hi] = default_domain_multiplicative(100.0, rel_vol, 1.0);
    prob.p_min = lo;
    prob.p_max = hi;
    prob.n_space = n_space;
    prob.n_time = n_time;
    prob.mc_process = ItoProcessSpec::gbm(0.0, rel_vol, 100.0);
    return prob;
}

PdeProblem bachelier_call_problem() {
    PdeProblem prob;
    prob.payoff = payoffs::call(100.0);
    prob.payoff_kinks = {100.0};
    prob.maturity = 1.0;
    prob.sigma = [](double) { return 0.2; };
    prob.drift = [](double) { return 0.0; };
    prob.cost_at = spread_book([](double) { return 0.75; });
    prob.spot = 100.0;
    prob.p_min = 98.0;
    prob.p_max = 102.0;
    prob.n_space = 400;
    prob.n_time = 200;
    return prob;
}

}  // namespace

TEST_CASE("linear payoffs are invariant under the pricing flow") {
    PdeProblem prob;
    prob.payoff = payoffs::linear(2.0, 1.0);
    prob.maturity = 1.0;
    prob.sigma = [](double) { return 0.2; };
    prob.cost_at = spread_book([](double) { return 1.0; });
    prob.spot = 100.0;
    prob.p_min = 90.0;
    prob.p_max = 110.0;
    prob.n_space = 64;
    prob.n_time = 16;
    const auto sol = solve_pde(prob);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.value.size(); ++i)
        for (std::size_t j = 0; j < sol.pgrid.size(); ++j)
            worst = std::max(worst, std::abs(sol.value[i][j] - (2.0 * sol.pgrid[j] + 1.0)));
    REQUIRE(worst <= 1e-10);

    const auto strat = replication_strategy(sol);
    REQUIRE(strat.initial_delta == Catch::Approx(2.0).margin(1e-9));
    REQUIRE(strat.initial_cash == Catch::Approx(1.0).margin(1e-7));
}

TEST_CASE("constant payoffs are pure cash") {
    PdeProblem prob;
    prob.payoff = payoffs::constant(7.0);
    prob.maturity = 0.5;
    prob.sigma = [](double) { return 0.3; };
    prob.cost_at = spread_book([](double) { return 1.2; });
    prob.spot = 50.0;
    prob.p_min = 45.0;
    prob.p_max = 55.0;
    prob.n_space = 32;
    prob.n_time = 8;
    const auto sol = solve_pde(prob);
    const auto strat = replication_strategy(sol);
    REQUIRE(strat.initial_delta == Catch::Approx(0.0).margin(1e-10));
    REQUIRE(strat.initial_cash == Catch::Approx(7.0).margin(1e-10));
}

TEST_CASE("terminal slice stores the payoff exactly") {
    const auto prob = bachelier_call_problem();
    const auto sol = solve_pde(prob);
    for (std::size_t j = 0; j < sol.pgrid.size(); ++j)
        REQUIRE(sol.value.back()[j] == prob.payoff(sol.pgrid[j]));
}

TEST_CASE("cancellation regime reproduces black-scholes") {
    const auto prob = cancellation_call_problem(400, 400);
    const auto sol = solve_pde(prob);
    const double bs = closed_form::black_scholes_call(100.0, 100.0, 0.2, 1.0);
    REQUIRE(std::abs(sol.price - bs) <= 1e-3);
    REQUIRE(sol.min_margin() >= 0.0);
    // delta against the closed form
    REQUIRE(std::abs(sol.delta_at(0.0, 100.0) -
                     closed_form::black_scholes_delta(100.0, 100.0, 0.2, 1.0)) <= 1e-3);
}

TEST_CASE("cancellation equals the frictionless marcher to grid accuracy") {
    auto prob = cancellation_call_problem(200, 100);
    prob.smooth_kinks = false;  // reference marches the raw payoff
    const auto sol = solve_pde(prob);
    const auto ref = frictionless_reference(sol.pgrid, prob.sigma, prob.payoff, prob.maturity,
                                            40000);
    // compare on the central half of the grid (boundaries differ by policy)
    double worst = 0.0;
    for (std::size_t j = sol.pgrid.size() / 4; j < 3 * sol.pgrid.size() / 4; ++j)
        worst = std::max(worst, std::abs(sol.value[0][j] - ref[j]));
    REQUIRE(worst <= 2e-3);
}

TEST_CASE("constant-spread linear variant matches the heat kernel") {
    const auto prob = bachelier_call_problem();
    const auto sol = solve_pde(prob);
    const double variance = 2.0 * 0.2 * 0.75 * kInvSqrt2Pi - 0.2 * 0.2;
    REQUIRE(variance > 0.0);
    double worst = 0.0;
    for (double p = 99.0; p <= 101.0; p += 0.125)
        worst = std::max(worst,
                         std::abs(sol.value_at(0.0, p) -
                                  closed_form::bachelier_call(p, 100.0, variance)));
    REQUIRE(worst <= 1e-3);
}

TEST_CASE("diffusion report for the proportional-cost variant") {
    const auto frictionless = linear_effective_diffusion(0.4, 0.0);
    REQUIRE(frictionless.coefficient == Catch::Approx(0.08).margin(1e-15));
    REQUIRE_FALSE(frictionless.negative);
    REQUIRE_FALSE(frictionless.well_posed);  // terminal-value march needs spread

    const auto unit = linear_effective_diffusion(1.0, 1.0);
    REQUIRE(unit.coefficient == Catch::Approx(0.10106).margin(1e-5));

    const auto cancel = linear_effective_diffusion(0.3, kSqrt2Pi * 0.3);
    REQUIRE(cancel.coefficient == Catch::Approx(-0.045).margin(1e-12));
    REQUIRE(cancel.negative);
    REQUIRE(cancel.well_posed);
    REQUIRE(cancel.forward_diffusion == Catch::Approx(0.045).margin(1e-12));
}

TEST_CASE("gamma sign classifies the hedging order type") {
    auto prob = cancellation_call_problem(200, 100);
    REQUIRE(classify_order_type(solve_pde(prob)) == HedgeOrderClass::Market);

    auto short_call = prob;
    short_call.payoff = [](double p) { return -std::max(p - 100.0, 0.0); };
    REQUIRE(classify_order_type(solve_pde(short_call)) == HedgeOrderClass::Limit);

    auto spread = prob;
    spread.payoff = payoffs::call_spread(85.0, 115.0);
    spread.payoff_kinks = {85.0, 115.0};
    REQUIRE(classify_order_type(solve_pde(spread)) == HedgeOrderClass::Mixed);
}

TEST_CASE("raising the payoff never lowers the value") {
    PdeProblem base = bachelier_call_problem();
    base.boundary = PdeBoundary::PayoffExtrapolation;
    base.n_space = 100;
    base.n_time = 50;
    const auto sol1 = solve_pde(base);

    PdeProblem lifted = base;
    lifted.payoff = [&](double p) {
        return std::max(p - 100.0, 0.0) + 0.5 * std::max(0.0, 1.0 - std::abs(p - 100.0) / 1.5);
    };
    lifted.payoff_kinks = {98.5, 100.0, 101.5};
    const auto sol2 = solve_pde(lifted);

    for (std::size_t i = 0; i < sol1.value.size(); ++i)
        for (std::size_t j = 0; j < sol1.pgrid.size(); ++j)
            REQUIRE(sol2.value[i][j] >= sol1.value[i][j] - 1e-12);
}

TEST_CASE("delta surface is the centered difference of the value surface") {
    const auto sol = solve_pde(bachelier_call_problem());
    const auto& v = sol.value[0];
    const double dp = sol.dp();
    for (std::size_t j = 1; j + 1 < v.size(); ++j)
        REQUIRE(sol.delta[0][j] == Catch::Approx((v[j + 1] - v[j - 1]) / (2.0 * dp)).margin(0.0));
    // and the scaled gamma surface carries the inventory-vol sign coupling
    for (std::size_t j = 1; j + 1 < v.size(); ++j) {
        const double l = 0.2 * sol.gamma[0][j];
        if (sol.gamma[0][j] > 1e-9) REQUIRE(l > 0.0);
        if (sol.gamma[0][j] < -1e-9) REQUIRE(l < 0.0);
    }
}

TEST_CASE("negative parabolicity margins abort unless researched") {
    // a flat book near zero gamma has margin -sigma^2/2 < 0
    PdeProblem prob;
    prob.payoff = payoffs::call(100.0);
    prob.payoff_kinks = {100.0};
    prob.maturity = 0.25;
    prob.sigma = [](double) { return 0.2; };
    prob.cost_at = [](double) { return legendre_transform(ShapeSpec::flat(1.0)); };
    prob.spot = 100.0;
    prob.p_min = 97.0;
    prob.p_max = 103.0;
    prob.n_space = 60;
    prob.n_time = 20;
    REQUIRE_THROWS_AS(solve_pde(prob), IllPosedError);

    prob.allow_ill_posed = true;
    prob.n_time = 2000;  // keep the unstable march short and bounded
    prob.maturity = 0.01;
    const auto sol = solve_pde(prob);
    REQUIRE(sol.min_margin() < 0.0);
}

TEST_CASE("strict stepping reports the admissible step") {
    auto prob = bachelier_call_problem();
    prob.auto_substep = false;
    prob.n_time = 10;  // far too coarse for the CFL bound
    try {
        solve_pde(prob);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("admissible") != std::string::npos);
    }
}

TEST_CASE("linear payoff replicates itself exactly") {
    PdeProblem prob;
    prob.payoff = payoffs::linear(3.0, -5.0);
    prob.maturity = 1.0;
    prob.sigma = [](double) { return 0.2; };
    prob.drift = [](double) { return 0.05; };
    prob.cost_at = spread_book([](double) { return 0.8; });
    prob.spot = 100.0;
    prob.p_min = 95.0;
    prob.p_max = 105.0;
    prob.n_space = 64;
    prob.n_time = 16;
    const auto sol = solve_pde(prob);
    ReplicationConfig config;
    config.paths = 50;
    config.steps = 2000;
    config.seed = 3;
    const auto report = replication_error(sol, prob, config);
    REQUIRE(report.rms <= 1e-10);
}

TEST_CASE("frictionless-regime hedging has unbiased terminal error") {
    const auto prob = cancellation_call_problem(400, 400);
    const auto sol = solve_pde(prob);
    ReplicationConfig config;
    config.paths = 2000;
    config.steps = 1000;
    config.seed = 17;
    const auto report = replication_error(sol, prob, config);
    REQUIRE(std::abs(report.mean) <= 3.0 * report.mean_standard_error + 5e-4);
    REQUIRE(report.rms <= 0.01 * 100.0);
    REQUIRE(report.q05 <= report.q25);
    REQUIRE(report.q25 <= report.q50);
    REQUIRE(report.q50 <= report.q75);
    REQUIRE(report.q75 <= report.q95);
}

TEST_CASE("surfaces serialize to csv") {
    PdeProblem prob;
    prob.payoff = payoffs::linear(1.0, 0.0);
    prob.maturity = 1.0;
    prob.sigma = [](double) { return 0.1; };
    prob.cost_at = spread_book([](double) { return 0.5; });
    prob.spot = 10.0;
    prob.p_min = 8.0;
    prob.p_max = 12.0;
    prob.n_space = 4;
    prob.n_time = 4;
    const auto sol = solve_pde(prob);
    std::ostringstream out;
    sol.write_csv(out);
    REQUIRE(out.str().rfind("t,p,v,v_p,v_pp\n", 0) == 0);
}

TEST_CASE("default domains follow the five-sigma rule") {
    const auto [mlo, mhi] = default_domain_multiplicative(100.0, 0.2, 1.0);
    REQUIRE(mlo == Catch::Approx(100.0 * std::exp(-1.0)).margin(1e-10));
    REQUIRE(mhi == Catch::Approx(100.0 * std::exp(1.0)).margin(1e-10));
    const auto [alo, ahi] = default_domain_additive(100.0, 0.2, 1.0);
    REQUIRE(alo == Catch::Approx(99.0).margin(1e-12));
    REQUIRE(ahi == Catch::Approx(101.0).margin(1e-12));
}
