#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "lobkit/csv.hpp"
#include "lobkit/errors.hpp"
#include "lobkit/orderbook.hpp"
#include "lobkit/process.hpp"

namespace lobkit {

// Limit orders collect transaction costs, market orders pay them.
enum class OrderType { Limit, Market };

inline double cost_sign(OrderType order) { return order == OrderType::Limit ? 1.0 : -1.0; }

inline const char* order_name(OrderType order) {
    return order == OrderType::Limit ? "limit" : "market";
}

// Wealth path decomposed into its three accounting components. At every node
// X = X0 + position + cost + covariation holds exactly (in accumulation
// order), and cash is defined through X = p L + K.
struct WealthLedger {
    TimeGrid grid;
    std::vector<double> wealth;            // X
    std::vector<double> position_term;     // cumulative sum of L dp
    std::vector<double> cost_term;         // cumulative signed cost flow
    std::vector<double> covariation_term;  // cumulative d[L,p]
    std::vector<double> cash;              // K = X - p L
    std::vector<std::string> warnings;

    double initial_wealth() const { return wealth.front(); }
    double terminal_wealth() const { return wealth.back(); }

    void write_csv(std::ostream& out) const {
        CsvWriter csv(out, {"t", "X", "position_term", "cost_term", "covariation_term", "K"});
        for (std::size_t k = 0; k < wealth.size(); ++k)
            csv.row({grid.node(k), wealth[k], position_term[k], cost_term[k],
                     covariation_term[k], cash[k]});
    }
};

namespace detail {

inline void check_same_grid(const SamplePath& p, const SamplePath& L, const char* where) {
    if (!(p.grid == L.grid) || p.values.size() != L.values.size())
        throw ShapeError(std::string(where) + ": price and inventory grids differ");
}

inline void check_even_cost(const CostFunction& cost, const char* where) {
    if (!cost.is_even())
        throw ValidationError(std::string(where) +
                              ": asymmetric transaction costs are not supported");
}

// Per-step coefficient access with broadcasting: a singleton vector means a
// constant coefficient; otherwise one value per step (left endpoint), with a
// nodes-length vector also accepted.
inline double coef_at(const std::vector<double>& v, std::size_t k) {
    return v.size() == 1 ? v[0] : v[k];
}

inline void check_coef_size(const std::vector<double>& v, std::size_t steps, const char* name,
                            const char* where) {
    if (v.size() != 1 && v.size() != steps && v.size() != steps + 1)
        throw ShapeError(std::string(where) + ": coefficient path '" + name +
                         "' must have 1, N or N+1 entries");
}

}  // namespace detail

// Trade-clock wealth accounting: per step
//   dX = L dp + sign * cN(-+ dL) + dp dL,
// where cN(l) = c(sqrt(scale) l)/scale is the conjugate of the rescaled book
// and sign is + for limit orders, - for market orders.
inline WealthLedger discrete_wealth(const SamplePath& p, const SamplePath& L,
                                    const CostFunction& cost, OrderType order, double scale,
                                    double initial_wealth = 0.0) {
    detail::check_same_grid(p, L, "discrete_wealth");
    detail::check_even_cost(cost, "discrete_wealth");
    if (!(scale >= 1.0)) throw ValidationError("discrete_wealth: scale must be >= 1");

    const std::size_t n = p.grid.steps;
    WealthLedger ledger;
    ledger.grid = p.grid;
    ledger.wealth.resize(n + 1);
    ledger.position_term.assign(n + 1, 0.0);
    ledger.cost_term.assign(n + 1, 0.0);
    ledger.covariation_term.assign(n + 1, 0.0);
    ledger.cash.resize(n + 1);

    const double sgn = cost_sign(order);
    double pos = 0.0, cst = 0.0, cov = 0.0;
    ledger.wealth[0] = initial_wealth;
    ledger.cash[0] = initial_wealth - p.values[0] * L.values[0];
    for (std::size_t k = 0; k < n; ++k) {
        const double dp = p.values[k + 1] - p.values[k];
        const double dl = L.values[k + 1] - L.values[k];
        const double traded = -sgn * dl;  // c(-dL) for limit, c(+dL) for market
        if (std::sqrt(scale) * std::abs(traded) > cost.domain_bound())
            throw DomainError("discrete_wealth: trade at step " + std::to_string(k) +
                              " exceeds the cost domain");
        pos += L.values[k] * dp;
        cst += sgn * cost.scaled_eval(traded, scale);
        cov += dp * dl;
        ledger.position_term[k + 1] = pos;
        ledger.cost_term[k + 1] = cst;
        ledger.covariation_term[k + 1] = cov;
        ledger.wealth[k + 1] = initial_wealth + pos + cst + cov;
        ledger.cash[k + 1] = ledger.wealth[k + 1] - p.values[k + 1] * L.values[k + 1];
    }
    return ledger;
}

inline WealthLedger discrete_wealth(const SamplePath& p, const SamplePath& L,
                                    const CostFunction& cost, OrderType order) {
    return discrete_wealth(p, L, cost, order, static_cast<double>(p.grid.steps));
}

struct ContinuousWealthOptions {
    double initial_wealth = 0.0;
    // Off allows diagnostic runs with the d[p,L] sign constraint violated.
    bool enforce_sign_constraint = true;
    // Use realized dp*dL instead of the lower-variance sigma*l*rho dt form.
    bool realized_covariation = false;
};

// Continuous-time wealth on a discrete grid:
//   dX = L dp + sign * E[c(|l| Z)] dt + d[L,p],
// with d[L,p] taken as sigma*l*rho dt (coefficient form) or realized dp dL.
// sigma and l are the price/inventory vol coefficient paths (l signed), rho
// the driver correlation (singleton broadcasts; empty means rho = 1).
inline WealthLedger continuous_wealth(const SamplePath& p, const SamplePath& L,
                                      const std::vector<double>& sigma,
                                      const std::vector<double>& l,
                                      const std::vector<double>& rho, const CostFunction& cost,
                                      OrderType order, ContinuousWealthOptions options = {}) {
    detail::check_same_grid(p, L, "continuous_wealth");
    detail::check_even_cost(cost, "continuous_wealth");
    const std::size_t n = p.grid.steps;
    detail::check_coef_size(sigma, n, "sigma", "continuous_wealth");
    detail::check_coef_size(l, n, "l", "continuous_wealth");
    const std::vector<double> rho1{1.0};
    const std::vector<double>& rho_eff = rho.empty() ? rho1 : rho;
    detail::check_coef_size(rho_eff, n, "rho", "continuous_wealth");

    // A limit-order inventory must trade against the price: d[p,L] < 0
    // whenever both actually move. Market orders require d[p,L] >= 0.
    if (options.enforce_sign_constraint) {
        for (std::size_t k = 0; k < n; ++k) {
            const double s = detail::coef_at(sigma, k);
            const double lv = detail::coef_at(l, k);
            const double r = detail::coef_at(rho_eff, k);
            const double rate = s * lv * r;
            const bool trading = s != 0.0 && lv != 0.0;
            const bool bad = (order == OrderType::Limit) ? (trading && rate >= 0.0)
                                                         : (rate < 0.0);
            if (bad)
                throw ConsistencyError(
                    "continuous_wealth: d[p,L] sign constraint for " +
                    std::string(order_name(order)) + " orders violated at node " +
                    std::to_string(k) + " (t=" + std::to_string(p.grid.node(k)) + ")");
        }
    }

    WealthLedger ledger;
    ledger.grid = p.grid;
    ledger.wealth.resize(n + 1);
    ledger.position_term.assign(n + 1, 0.0);
    ledger.cost_term.assign(n + 1, 0.0);
    ledger.covariation_term.assign(n + 1, 0.0);
    ledger.cash.resize(n + 1);

    const double sgn = cost_sign(order);
    const double dt = p.grid.dt();
    double pos = 0.0, cst = 0.0, cov = 0.0;
    ledger.wealth[0] = options.initial_wealth;
    ledger.cash[0] = options.initial_wealth - p.values[0] * L.values[0];
    for (std::size_t k = 0; k < n; ++k) {
        const double dp = p.values[k + 1] - p.values[k];
        pos += L.values[k] * dp;
        cst += sgn * cost.gaussian_mean(std::abs(detail::coef_at(l, k))) * dt;
        if (options.realized_covariation) {
            cov += dp * (L.values[k + 1] - L.values[k]);
        } else {
            cov += detail::coef_at(sigma, k) * detail::coef_at(l, k) *
                   detail::coef_at(rho_eff, k) * dt;
        }
        ledger.position_term[k + 1] = pos;
        ledger.cost_term[k + 1] = cst;
        ledger.covariation_term[k + 1] = cov;
        ledger.wealth[k + 1] = options.initial_wealth + pos + cst + cov;
        ledger.cash[k + 1] = ledger.wealth[k + 1] - p.values[k + 1] * L.values[k + 1];
    }
    return ledger;
}

// Result of the discrete -> continuous convergence study.
struct ConvergenceResult {
    std::vector<std::size_t> scales;
    std::vector<double> rms_sup_deviation;  // one entry per scale
    double fitted_rate = 0.0;               // least-squares slope of -log(rms) vs log(N)

    void write_csv(std::ostream& out) const {
        CsvWriter csv(out, {"scale", "rms_sup_deviation"});
        for (std::size_t i = 0; i < scales.size(); ++i)
            csv.row({static_cast<double>(scales[i]), rms_sup_deviation[i]});
    }
};

// For each scale N: build the trade-clock wealth from the subsampled pair and
// compare it, uniformly over common nodes, with the continuous-limit wealth
// on the finest grid. RMS over seeds, then a rate fit across scales.
inline ConvergenceResult convergence_experiment(
    const ItoProcessSpec& price_spec, const ItoProcessSpec& inventory_spec,
    const std::function<double(double)>& corr, const CostFunction& cost, OrderType order,
    std::vector<std::size_t> scales, std::size_t n_seeds, std::uint64_t seed,
    double horizon = 1.0, ContinuousWealthOptions options = {},
    std::size_t reference_refinement = 4) {
    if (scales.empty()) throw ValidationError("convergence_experiment: no scales given");
    if (!std::is_sorted(scales.begin(), scales.end()))
        throw ValidationError("convergence_experiment: scales must be increasing");
    if (reference_refinement < 2)
        throw ValidationError("convergence_experiment: reference grid must refine every scale");
    const std::size_t finest = scales.back() * reference_refinement;
    for (std::size_t N : scales)
        if (scales.back() % N != 0)
            throw ValidationError("convergence_experiment: every scale must divide the largest");
    if (n_seeds == 0) throw ValidationError("convergence_experiment: need at least one seed");

    const TimeGrid fine_grid(horizon, finest);
    std::vector<double> sq_acc(scales.size(), 0.0);

    for (std::size_t s = 0; s < n_seeds; ++s) {
        auto [p, L] = correlated_pair(price_spec, inventory_spec, corr, fine_grid, seed, s);
        std::vector<double> sigma(finest), lvol(finest), rho(finest);
        for (std::size_t k = 0; k < finest; ++k) {
            const double t = fine_grid.node(k);
            sigma[k] = price_spec.vol_at(t, p.values[k]);
            lvol[k] = inventory_spec.vol_at(t, L.values[k]);
            rho[k] = corr(t);
        }
        const WealthLedger cont = continuous_wealth(p, L, sigma, lvol, rho, cost, order, options);

        for (std::size_t si = 0; si < scales.size(); ++si) {
            const std::size_t N = scales[si];
            const std::size_t stride = finest / N;
            SamplePath pc, Lc;
            pc.grid = Lc.grid = TimeGrid(horizon, N);
            pc.seed = Lc.seed = seed;
            pc.values.resize(N + 1);
            Lc.values.resize(N + 1);
            for (std::size_t j = 0; j <= N; ++j) {
                pc.values[j] = p.values[j * stride];
                Lc.values[j] = L.values[j * stride];
            }
            const WealthLedger disc =
                discrete_wealth(pc, Lc, cost, order, static_cast<double>(N),
                                options.initial_wealth);
            // u.c.p. distance: the trade-clock wealth is a step process held
            // at floor(N t), compared against the limit on every fine node.
            double sup = 0.0;
            for (std::size_t k = 0; k <= finest; ++k)
                sup = std::max(sup, std::abs(disc.wealth[k / stride] - cont.wealth[k]));
            sq_acc[si] += sup * sup;
        }
    }

    ConvergenceResult result;
    result.scales = std::move(scales);
    for (std::size_t si = 0; si < result.scales.size(); ++si)
        result.rms_sup_deviation.push_back(std::sqrt(sq_acc[si] / static_cast<double>(n_seeds)));

    // least-squares slope of log(rms) against log(N); rate is its negative
    if (result.scales.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(result.scales.size());
        for (std::size_t i = 0; i < result.scales.size(); ++i) {
            const double x = std::log(static_cast<double>(result.scales[i]));
            const double y = std::log(std::max(result.rms_sup_deviation[i], 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        result.fitted_rate = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return result;
}

// One covariation window of the consistency scan.
struct ConsistencyWindow {
    std::size_t first_node = 0;
    std::size_t last_node = 0;
    double increment = 0.0;
};

struct ConsistencyReport {
    bool is_consistent = true;
    std::size_t window_count = 0;
    std::vector<ConsistencyWindow> violations;
};

// Realized-covariation increments over consecutive windows of `window_steps`
// steps each (only full windows are scanned). The pair is consistent with
// limit-order trading when every increment is strictly negative.
inline ConsistencyReport consistency_check(const SamplePath& p, const SamplePath& L,
                                           std::size_t window_steps) {
    detail::check_same_grid(p, L, "consistency_check");
    if (window_steps < 1) throw ValidationError("consistency_check: window must cover >= 1 step");
    if (window_steps > p.grid.steps)
        throw ShapeError("consistency_check: window is larger than the path");

    ConsistencyReport report;
    const std::size_t n = p.grid.steps;
    for (std::size_t start = 0; start + window_steps <= n; start += window_steps) {
        double inc = 0.0;
        for (std::size_t k = start; k < start + window_steps; ++k)
            inc += (p.values[k + 1] - p.values[k]) * (L.values[k + 1] - L.values[k]);
        ++report.window_count;
        if (!(inc < 0.0)) {
            report.is_consistent = false;
            report.violations.push_back({start, start + window_steps, inc});
        }
    }
    return report;
}

}  // namespace lobkit
