#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lobkit/errors.hpp"
#include "lobkit/gaussian.hpp"
#include "lobkit/ledger.hpp"
#include "lobkit/orderbook.hpp"
#include "lobkit/parallel.hpp"
#include "lobkit/process.hpp"

namespace lobkit {

// Diffusion-limit coefficients of the structural impact model.
struct ImpactLimitCoeffs {
    double drift_rate = 0.0;
    double vol_rate = 0.0;          // >= 0
    double covariation_rate = 0.0;  // d[p,L]/dt, <= 0 for limit-order books
};

// Price built from trades: p_{k+1} = p_k + lambda * (cN)'(-dL_k), with cN the
// conjugate of the trade-clock rescaled book.
inline SamplePath price_from_trades(const SamplePath& L, const ImpactBookModel& book, double p0,
                                    double scale) {
    if (!(scale >= 1.0)) throw ValidationError("price_from_trades: scale must be >= 1");
    const CostFunction cost = legendre_transform(book.shape);
    SamplePath p;
    p.grid = L.grid;
    p.seed = L.seed;
    p.values.resize(L.values.size());
    p.values[0] = p0;
    for (std::size_t k = 0; k + 1 < L.values.size(); ++k) {
        const double dl = L.values[k + 1] - L.values[k];
        const double impact = book.recovery * cost.scaled_d1(-dl, scale);
        if (!std::isfinite(impact))
            throw DomainError("price_from_trades: marginal cost undefined at step " +
                              std::to_string(k));
        p.values[k + 1] = p.values[k] + impact;
    }
    return p;
}

inline SamplePath price_from_trades(const SamplePath& L, const ImpactBookModel& book, double p0) {
    return price_from_trades(L, book, p0, static_cast<double>(L.grid.steps));
}

// Trades built from price moves: L_{k+1} = L_k - (gammaN)'(dp_k / lambda).
inline SamplePath trades_from_price(const SamplePath& p, const ImpactBookModel& book, double L0,
                                    double scale) {
    if (!(scale >= 1.0)) throw ValidationError("trades_from_price: scale must be >= 1");
    const double root = std::sqrt(scale);
    SamplePath L;
    L.grid = p.grid;
    L.seed = p.seed;
    L.values.resize(p.values.size());
    L.values[0] = L0;
    for (std::size_t k = 0; k + 1 < p.values.size(); ++k) {
        const double dp = p.values[k + 1] - p.values[k];
        const double arg = root * dp / book.recovery;
        if (!book.shape.contains(arg))
            throw DomainError("trades_from_price: price move at step " + std::to_string(k) +
                              " exceeds the book support");
        L.values[k + 1] = L.values[k] - book.shape.slope(arg) / root;
    }
    return L;
}

inline SamplePath trades_from_price(const SamplePath& p, const ImpactBookModel& book, double L0) {
    return trades_from_price(p, book, L0, static_cast<double>(p.grid.steps));
}

// Price diffusion-limit coefficients from inventory coefficients (b, l):
//   drift = -lambda b E[c''(lZ)]
//   vol   =  lambda sqrt(E[c'(lZ)^2])
//   d[p,L]= -lambda E[lZ c'(lZ)]
inline ImpactLimitCoeffs limit_coeffs_from_inventory(double b, double l, const CostFunction& cost,
                                                     double lambda) {
    if (!(lambda > 0.0)) throw ValidationError("limit coefficients: lambda must be > 0");
    if (!(l >= 0.0)) throw ValidationError("limit coefficients: l is a vol magnitude, must be >= 0");
    ImpactLimitCoeffs out;
    out.drift_rate = -lambda * b * cost.gaussian_mean_curvature(l);
    out.vol_rate = lambda * std::sqrt(cost.gaussian_mean_slope_sq(l));
    out.covariation_rate = -lambda * cost.gaussian_mean_id_slope(l);
    return out;
}

namespace detail {

// Gaussian moments of the shape gradient, E[h(gamma', sigma Z / lambda)], in
// closed form for flat books. Bounded-support shapes have no finite Gaussian
// moments (the argument escapes the book), so they are rejected for sigma > 0.
inline void require_full_support(const ShapeSpec& shape, double sigma) {
    if (sigma > 0.0 && std::isfinite(shape.support_bound()))
        throw DomainError("shape-side Gaussian moments need unbounded book support "
                          "(Gaussian arguments escape a bounded book)");
}

}  // namespace detail

// Inventory diffusion-limit coefficients from price coefficients (mu, sigma):
//   drift = -(mu/lambda) E[gamma''(sigma Z / lambda)]
//   vol   =  sqrt(E[gamma'(sigma Z / lambda)^2])
//   d[p,L]= -E[sigma Z gamma'(sigma Z / lambda)]
inline ImpactLimitCoeffs limit_coeffs_from_price(double mu, double sigma, const ShapeSpec& shape,
                                                 double lambda) {
    if (!(lambda > 0.0)) throw ValidationError("limit coefficients: lambda must be > 0");
    if (!(sigma >= 0.0))
        throw ValidationError("limit coefficients: sigma is a vol magnitude, must be >= 0");
    ImpactLimitCoeffs out;
    if (shape.variant() == ShapeSpec::Variant::Flat) {
        const double m = shape.density();
        out.drift_rate = -mu * m / lambda;
        out.vol_rate = m * sigma / lambda;
        out.covariation_rate = -m * sigma * sigma / lambda;
        return out;
    }
    detail::require_full_support(shape, sigma);
    // sigma == 0: pointwise evaluation at 0.
    out.drift_rate = -(mu / lambda) * shape.curvature(0.0);
    const double g0 = shape.slope(0.0);
    out.vol_rate = std::abs(g0);
    out.covariation_rate = 0.0;
    return out;
}

// Configuration of the functional-CLT verifier. The shipped verifier is the
// constant-coefficient case, which admits exact moment oracles.
struct LimitLawSpec {
    std::function<double(double)> test_function;        // F, odd
    std::function<double(double)> test_function_slope;  // F'
    double drift = 0.0;  // b
    double vol = 1.0;    // sigma, > 0
    std::size_t scale = 10000;  // N
    std::size_t paths = 10000;  // M
    double horizon = 1.0;
    // polynomial growth bookkeeping, reported but not enforced
    double growth_degree = 3.0;
    std::uint64_t seed = 1;
    std::size_t quadrature_order = kDefaultQuadratureOrder;
    std::size_t threads = 1;
};

struct LimitLawStats {
    double mean = 0.0;
    double variance = 0.0;
    double covariation = 0.0;
};

struct LimitLawReport {
    LimitLawStats theory;
    LimitLawStats sample;
    LimitLawStats standard_error;
    double mean_error = 0.0;
    double variance_error = 0.0;
    double covariation_error = 0.0;
    std::size_t scale = 0;
    std::size_t paths = 0;
    double growth_degree = 0.0;
};

inline constexpr std::size_t kLimitLawMinScale = 100;
inline constexpr std::size_t kLimitLawMinPaths = 100;

// Simulates the normalized sums (1/sqrt(N)) sum F(sqrt(N) dY) over M paths of
// the Ito process Y and compares terminal mean / variance / covariation-with-Y
// against the limit-law moments b E[F'(sZ)] T, E[F(sZ)^2] T, E[sZ F(sZ)] T.
inline LimitLawReport verify_limit_law(const LimitLawSpec& spec) {
    if (!spec.test_function || !spec.test_function_slope)
        throw ValidationError("verify_limit_law: F and F' are required");
    if (!(spec.vol > 0.0)) throw ValidationError("verify_limit_law: vol must be > 0");
    if (spec.scale < kLimitLawMinScale)
        throw ValidationError("verify_limit_law: scale below the floor of " +
                              std::to_string(kLimitLawMinScale));
    if (spec.paths < kLimitLawMinPaths)
        throw ValidationError("verify_limit_law: paths below the floor of " +
                              std::to_string(kLimitLawMinPaths));
    for (double y : {0.3, 0.9, 1.7, 2.6}) {
        const double sum = spec.test_function(y) + spec.test_function(-y);
        if (std::abs(sum) > 1e-9 * (1.0 + std::abs(spec.test_function(y))))
            throw ValidationError("verify_limit_law: test function must be odd");
    }

    const auto& F = spec.test_function;
    const double T = spec.horizon;
    LimitLawReport report;
    report.scale = spec.scale;
    report.paths = spec.paths;
    report.growth_degree = spec.growth_degree;
    report.theory.mean =
        spec.drift * gaussian_expect(spec.test_function_slope, spec.vol, spec.quadrature_order) * T;
    report.theory.variance =
        gaussian_expect([&](double y) { return F(y) * F(y); }, spec.vol, spec.quadrature_order) * T;
    report.theory.covariation =
        gaussian_expect([&](double y) { return y * F(y); }, spec.vol, spec.quadrature_order) * T;

    const std::size_t n = spec.scale;
    const std::size_t m = spec.paths;
    const double dt = T / static_cast<double>(n);
    const double root_n = std::sqrt(static_cast<double>(n));

    std::vector<double> terminal(m), covar(m);
    parallel_for(m, spec.threads, [&](std::size_t i) {
        double s = 0.0, cov = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double z = rng::gaussian(spec.seed, i, k, 0);
            const double dy = spec.drift * dt + spec.vol * std::sqrt(dt) * z;
            const double ds = F(root_n * dy) / root_n;
            s += ds;
            cov += ds * dy;
        }
        terminal[i] = s;
        covar[i] = cov;
    });

    double mean = 0.0, cov_mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mean += terminal[i];
        cov_mean += covar[i];
    }
    mean /= static_cast<double>(m);
    cov_mean /= static_cast<double>(m);

    double var = 0.0, m4 = 0.0, cov_var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double d = terminal[i] - mean;
        var += d * d;
        m4 += d * d * d * d;
        const double dc = covar[i] - cov_mean;
        cov_var += dc * dc;
    }
    var /= static_cast<double>(m - 1);
    m4 /= static_cast<double>(m);
    cov_var /= static_cast<double>(m - 1);

    report.sample.mean = mean;
    report.sample.variance = var;
    report.sample.covariation = cov_mean;
    report.standard_error.mean = std::sqrt(var / static_cast<double>(m));
    report.standard_error.variance =
        std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(m));
    report.standard_error.covariation = std::sqrt(cov_var / static_cast<double>(m));
    report.mean_error = std::abs(report.sample.mean - report.theory.mean);
    report.variance_error = std::abs(report.sample.variance - report.theory.variance);
    report.covariation_error = std::abs(report.sample.covariation - report.theory.covariation);
    return report;
}

// Flat-book wealth: price from trades, then
//   dX = L dp + (1/2 - lambda) l^2 / m dt.
// The whole effective friction rate sits in the cost component (impact and
// collected spread are netted there; the covariation column stays zero).
inline WealthLedger flat_book_wealth(const SamplePath& L, const std::vector<double>& l,
                                     const ImpactBookModel& book, double p0,
                                     double initial_wealth = 0.0) {
    if (book.shape.variant() != ShapeSpec::Variant::Flat)
        throw UnsupportedError("flat_book_wealth: book shape must be flat");
    const std::size_t n = L.grid.steps;
    detail::check_coef_size(l, n, "l", "flat_book_wealth");

    const double m = book.shape.density();
    const double lambda = book.recovery;
    const SamplePath p = price_from_trades(L, book, p0, static_cast<double>(n));

    WealthLedger ledger;
    ledger.grid = L.grid;
    ledger.warnings = book.warnings();
    ledger.wealth.resize(n + 1);
    ledger.position_term.assign(n + 1, 0.0);
    ledger.cost_term.assign(n + 1, 0.0);
    ledger.covariation_term.assign(n + 1, 0.0);
    ledger.cash.resize(n + 1);
    ledger.wealth[0] = initial_wealth;
    ledger.cash[0] = initial_wealth - p.values[0] * L.values[0];

    const double dt = L.grid.dt();
    double pos = 0.0, cst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double lv = detail::coef_at(l, k);
        pos += L.values[k] * (p.values[k + 1] - p.values[k]);
        cst += (0.5 - lambda) * lv * lv / m * dt;
        ledger.position_term[k + 1] = pos;
        ledger.cost_term[k + 1] = cst;
        ledger.wealth[k + 1] = initial_wealth + pos + cst;
        ledger.cash[k + 1] = ledger.wealth[k + 1] - p.values[k + 1] * L.values[k + 1];
    }
    return ledger;
}

struct ManipulationConfig {
    std::size_t paths = 0;  // 0 disables the Monte Carlo cross-check
    std::size_t steps = 2000;
    std::uint64_t seed = 1;
};

struct ManipulationResult {
    double closed_form = 0.0;  // (1 - lambda)/2 * integral of l^2/m
    bool has_mc = false;
    double mc_mean = 0.0;
    double mc_standard_error = 0.0;
    std::vector<std::string> warnings;
};

// Expected round-trip profit on a constant flat book. Positive values mean
// the book admits price manipulation; exactly zero at lambda = 1.
inline ManipulationResult manipulation_profit(double density, double lambda, double inventory_vol,
                                              double horizon, ManipulationConfig config = {}) {
    if (!(density > 0.0)) throw ValidationError("manipulation_profit: density must be > 0");
    if (!(lambda > 0.0)) throw ValidationError("manipulation_profit: lambda must be > 0");
    if (!(inventory_vol >= 0.0))
        throw ValidationError("manipulation_profit: inventory vol must be >= 0");
    const ImpactBookModel book(ShapeSpec::flat(density), lambda);

    ManipulationResult result;
    result.warnings = book.warnings();
    result.closed_form =
        0.5 * (1.0 - lambda) * inventory_vol * inventory_vol * horizon / density;

    if (config.paths > 0) {
        const TimeGrid grid(horizon, config.steps);
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < config.paths; ++i) {
            const SamplePath L = brownian_bridge(grid, 0.0, inventory_vol, config.seed, i);
            const WealthLedger w = flat_book_wealth(L, {inventory_vol}, book, /*p0=*/100.0);
            const double profit = w.terminal_wealth() - w.initial_wealth();
            sum += profit;
            sum_sq += profit * profit;
        }
        const double m = static_cast<double>(config.paths);
        result.has_mc = true;
        result.mc_mean = sum / m;
        const double var = std::max(0.0, (sum_sq - sum * sum / m) / (m - 1.0));
        result.mc_standard_error = std::sqrt(var / m);
    }
    return result;
}

}  // namespace lobkit
