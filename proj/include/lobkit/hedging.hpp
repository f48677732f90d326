#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lobkit/csv.hpp"
#include "lobkit/errors.hpp"
#include "lobkit/ledger.hpp"
#include "lobkit/orderbook.hpp"
#include "lobkit/parallel.hpp"
#include "lobkit/process.hpp"

namespace lobkit {

enum class PdeBoundary { Linearity, PayoffExtrapolation };

// Gamma-penalized pricing problem
//   dv/dt + g(p, sigma(p) v_pp) - sigma(p)^2/2 v_pp = 0,  v(T, .) = payoff,
// where g(p, l) = sign(l) E[c(p, |l| Z)] is the signed expected cost rate of
// the level-dependent book c(p, .).
struct PdeProblem {
    std::function<double(double)> payoff;
    std::vector<double> payoff_kinks;  // locations where the payoff has kinks
    double maturity = 1.0;
    std::function<double(double)> sigma;                 // local vol, >= 0
    std::function<double(double)> drift;                 // used only by Monte Carlo
    std::function<CostFunction(double)> cost_at;         // book by price level
    std::optional<ItoProcessSpec> mc_process;            // exact sampler for MC, optional
    double spot = 100.0;                                 // p0
    double p_min = 0.0;
    double p_max = 0.0;
    std::size_t n_space = 400;
    std::size_t n_time = 400;
    PdeBoundary boundary = PdeBoundary::Linearity;
    bool auto_substep = true;     // refine dtau internally to meet the CFL bound
    bool allow_ill_posed = false; // research flag: keep marching on negative margins
    bool smooth_kinks = true;     // cell-average the marching data at payoff kinks

    void validate() const {
        if (!payoff) throw ValidationError("pde problem: payoff is required");
        if (!sigma) throw ValidationError("pde problem: sigma is required");
        if (!cost_at) throw ValidationError("pde problem: the book family is required");
        if (!(maturity > 0.0)) throw ValidationError("pde problem: maturity must be > 0");
        if (!(p_min < p_max)) throw ValidationError("pde problem: need p_min < p_max");
        if (n_space < 3 || n_time < 3)
            throw ValidationError("pde problem: need at least 3 space and time nodes");
        if (!(spot > p_min && spot < p_max))
            throw ValidationError("pde problem: spot must lie inside the space domain");
    }
};

// 5-sigma default space domain around the spot.
inline std::pair<double, double> default_domain_multiplicative(double spot, double rel_vol,
                                                               double maturity) {
    const double w = 5.0 * rel_vol * std::sqrt(maturity);
    return {spot * std::exp(-w), spot * std::exp(w)};
}

inline std::pair<double, double> default_domain_additive(double spot, double vol,
                                                         double maturity) {
    const double w = 5.0 * vol * std::sqrt(maturity);
    return {spot - w, spot + w};
}

// Value/delta/gamma surfaces on the (t, p) grid, plus the well-posedness log.
struct PdeSolution {
    double maturity = 1.0;
    std::vector<double> pgrid;
    // slab i <-> t_i = i * maturity / n_time; last slab is the exact payoff
    std::vector<std::vector<double>> value;
    std::vector<std::vector<double>> delta;
    std::vector<std::vector<double>> gamma;
    std::vector<double> slab_min_margin;                 // per marched slab
    std::vector<std::pair<double, double>> slab_l_range; // visited l = sigma v_pp
    double price = 0.0;  // v(0, spot)
    double spot = 0.0;

    std::size_t n_time() const { return value.size() - 1; }
    double dt() const { return maturity / static_cast<double>(n_time()); }
    double dp() const { return pgrid[1] - pgrid[0]; }
    double min_margin() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : slab_min_margin) m = std::min(m, v);
        return m;
    }

    bool contains(double t, double p) const {
        return t >= 0.0 && t <= maturity && p >= pgrid.front() && p <= pgrid.back();
    }

    double surface_at(const std::vector<std::vector<double>>& surf, double t, double p) const {
        const double ti = std::clamp(t, 0.0, maturity) / dt();
        std::size_t i = std::min(static_cast<std::size_t>(ti), n_time() - 1);
        const double wt = ti - static_cast<double>(i);
        const double pc = std::clamp(p, pgrid.front(), pgrid.back());
        const double pj = (pc - pgrid.front()) / dp();
        std::size_t j = std::min(static_cast<std::size_t>(pj), pgrid.size() - 2);
        const double wp = pj - static_cast<double>(j);
        const double lo = surf[i][j] * (1.0 - wp) + surf[i][j + 1] * wp;
        const double hi = surf[i + 1][j] * (1.0 - wp) + surf[i + 1][j + 1] * wp;
        return lo * (1.0 - wt) + hi * wt;
    }

    double value_at(double t, double p) const { return surface_at(value, t, p); }
    double delta_at(double t, double p) const { return surface_at(delta, t, p); }
    double gamma_at(double t, double p) const { return surface_at(gamma, t, p); }

    void write_csv(std::ostream& out) const {
        CsvWriter csv(out, {"t", "p", "v", "v_p", "v_pp"});
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double t = static_cast<double>(i) * dt();
            for (std::size_t j = 0; j < pgrid.size(); ++j)
                csv.row({t, pgrid[j], value[i][j], delta[i][j], gamma[i][j]});
        }
    }
};

namespace detail {

inline void differentiate_slice(const std::vector<double>& v, double dp,
                                std::vector<double>& delta, std::vector<double>& gamma) {
    const std::size_t n = v.size();
    delta.resize(n);
    gamma.resize(n);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        delta[j] = (v[j + 1] - v[j - 1]) / (2.0 * dp);
        gamma[j] = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (dp * dp);
    }
    delta[0] = (v[1] - v[0]) / dp;
    delta[n - 1] = (v[n - 1] - v[n - 2]) / dp;
    gamma[0] = 0.0;
    gamma[n - 1] = 0.0;
}

// Exact cell average of a piecewise-linear payoff over [a, b] with one kink.
inline double kink_cell_average(const std::function<double(double)>& f, double a, double b,
                                double kink) {
    const double left = (kink - a) * 0.5 * (f(a) + f(kink));
    const double right = (b - kink) * 0.5 * (f(kink) + f(b));
    return (left + right) / (b - a);
}

}  // namespace detail

// Explicit backward marcher for the gamma-penalized PDE. In time-to-maturity
// the equation reads v_tau = g(p, sigma v_pp) - sigma^2/2 v_pp; its forward
// diffusion coefficient is D(p, l) = sigma dg/dl - sigma^2/2, which must stay
// nonnegative for the march (and the replication argument) to make sense.
inline PdeSolution solve_pde(const PdeProblem& prob) {
    prob.validate();
    const std::size_t np = prob.n_space;
    const std::size_t nt = prob.n_time;
    const double T = prob.maturity;

    PdeSolution sol;
    sol.maturity = T;
    sol.spot = prob.spot;
    sol.pgrid.resize(np + 1);
    {
        // place nodes so the spot sits exactly on the grid
        const double dp = (prob.p_max - prob.p_min) / static_cast<double>(np);
        const double lo = static_cast<double>(std::lround((prob.spot - prob.p_min) / dp));
        for (std::size_t j = 0; j <= np; ++j)
            sol.pgrid[j] = prob.spot + (static_cast<double>(j) - lo) * dp;
    }
    const double dp = sol.pgrid[1] - sol.pgrid[0];

    std::vector<double> sigma(np + 1), sigma_sq_half(np + 1);
    std::vector<CostFunction> books;
    books.reserve(np + 1);
    for (std::size_t j = 0; j <= np; ++j) {
        sigma[j] = prob.sigma(sol.pgrid[j]);
        if (!(sigma[j] >= 0.0) || !std::isfinite(sigma[j]))
            throw ValidationError("pde problem: sigma(p) must be finite and >= 0 on the grid");
        sigma_sq_half[j] = 0.5 * sigma[j] * sigma[j];
        books.push_back(prob.cost_at(sol.pgrid[j]));
    }

    auto g_at = [&](std::size_t j, double l) { return g_function(books[j], l); };
    auto dgdl_at = [&](std::size_t j, double l) {
        const double h = 1e-4 * (1.0 + std::abs(l));
        return (g_at(j, l + h) - g_at(j, l - h)) / (2.0 * h);
    };

    sol.value.assign(nt + 1, {});
    sol.delta.assign(nt + 1, {});
    sol.gamma.assign(nt + 1, {});
    sol.slab_min_margin.assign(nt, 0.0);
    sol.slab_l_range.assign(nt, {0.0, 0.0});

    // exact payoff on the terminal slab
    sol.value[nt].resize(np + 1);
    for (std::size_t j = 0; j <= np; ++j) sol.value[nt][j] = prob.payoff(sol.pgrid[j]);
    detail::differentiate_slice(sol.value[nt], dp, sol.delta[nt], sol.gamma[nt]);

    // marching data: kink cells get their exact cell average
    std::vector<double> w = sol.value[nt];
    if (prob.smooth_kinks) {
        for (double kink : prob.payoff_kinks) {
            for (std::size_t j = 1; j + 1 <= np; ++j) {
                const double a = sol.pgrid[j] - 0.5 * dp, b = sol.pgrid[j] + 0.5 * dp;
                if (kink > a && kink < b)
                    w[j] = detail::kink_cell_average(prob.payoff, a, b, kink);
            }
        }
    }

    const double slab_dtau = T / static_cast<double>(nt);
    std::vector<double> w_next(np + 1), u(np + 1);

    // initial diffusion estimate from the marching data
    auto max_forward_diffusion = [&](const std::vector<double>& slice) {
        double dmax = 0.0;
        for (std::size_t j = 1; j + 1 <= np; ++j) {
            const double curv = (slice[j + 1] - 2.0 * slice[j] + slice[j - 1]) / (dp * dp);
            const double l = sigma[j] * curv;
            dmax = std::max(dmax, sigma[j] * dgdl_at(j, l) - sigma_sq_half[j]);
        }
        return dmax;
    };

    double d_estimate = std::max(max_forward_diffusion(w), 1e-300);
    if (!prob.auto_substep) {
        const double admissible = dp * dp / (2.0 * d_estimate);
        if (slab_dtau > admissible)
            throw ConfigError("pde time step violates the CFL bound; admissible dtau <= " +
                              format_short(admissible) + " (got " + format_short(slab_dtau) +
                              "), raise n_time or enable auto_substep");
    }

    const double margin_tol = -1e-10;

    for (std::size_t slab = nt; slab-- > 0;) {
        const std::vector<double> slab_entry = w;
        std::size_t substeps = prob.auto_substep
            ? std::max<std::size_t>(
                  1, static_cast<std::size_t>(
                         std::ceil(slab_dtau * 2.0 * d_estimate / (0.8 * dp * dp))))
            : 1;

        for (int attempt = 0;; ++attempt) {
            if (attempt > 60)
                throw NumericError("pde solver: could not satisfy the CFL bound");
            w = slab_entry;
            const double dtau = slab_dtau / static_cast<double>(substeps);
            double min_margin = std::numeric_limits<double>::infinity();
            double l_lo = std::numeric_limits<double>::infinity();
            double l_hi = -std::numeric_limits<double>::infinity();
            double d_seen = 0.0;
            bool redo = false;

            for (std::size_t s = 0; s < substeps && !redo; ++s) {
                for (std::size_t j = 1; j + 1 <= np; ++j)
                    u[j] = (w[j + 1] - 2.0 * w[j] + w[j - 1]) / (dp * dp);
                for (std::size_t j = 1; j + 1 <= np; ++j) {
                    const double l = sigma[j] * u[j];
                    const double margin = sigma[j] * dgdl_at(j, l) - sigma_sq_half[j];
                    min_margin = std::min(min_margin, margin);
                    l_lo = std::min(l_lo, l);
                    l_hi = std::max(l_hi, l);
                    d_seen = std::max(d_seen, margin);
                    if (margin < margin_tol && !prob.allow_ill_posed)
                        throw IllPosedError(
                            "pde is ill-posed: parabolicity margin " + format_short(margin) +
                            " at p=" + format_short(sol.pgrid[j]) + ", t=" +
                            format_short(static_cast<double>(slab + 1) * slab_dtau -
                                         static_cast<double>(s) * dtau));
                    w_next[j] = w[j] + dtau * (g_at(j, l) - sigma_sq_half[j] * u[j]);
                }
                if (dtau * std::max(d_seen, 0.0) > 0.5 * dp * dp) {
                    substeps *= 2;  // CFL assumption broke mid-slab, redo finer
                    redo = true;
                    break;
                }
                if (prob.boundary == PdeBoundary::Linearity) {
                    w_next[0] = 2.0 * w_next[1] - w_next[2];
                    w_next[np] = 2.0 * w_next[np - 1] - w_next[np - 2];
                } else {
                    w_next[0] = w[0];
                    w_next[np] = w[np];
                }
                std::swap(w, w_next);
            }
            if (!redo) {
                sol.slab_min_margin[slab] = min_margin;
                sol.slab_l_range[slab] = {l_lo, l_hi};
                d_estimate = std::max(d_seen, 1e-300);
                break;
            }
        }

        sol.value[slab] = w;
        detail::differentiate_slice(w, dp, sol.delta[slab], sol.gamma[slab]);
    }

    sol.price = sol.value_at(0.0, prob.spot);
    return sol;
}

// Admissible explicit time step estimated from the terminal data, the same
// bound solve_pde enforces: dtau <= dp^2 / (2 max D).
inline double estimate_admissible_dtau(const PdeProblem& prob) {
    prob.validate();
    const std::size_t np = prob.n_space;
    const double dp = (prob.p_max - prob.p_min) / static_cast<double>(np);
    std::vector<double> p(np + 1), w(np + 1);
    for (std::size_t j = 0; j <= np; ++j) {
        p[j] = prob.p_min + dp * static_cast<double>(j);
        w[j] = prob.payoff(p[j]);
    }
    double dmax = 0.0;
    for (std::size_t j = 1; j + 1 <= np; ++j) {
        const double sv = prob.sigma(p[j]);
        const double curv = (w[j + 1] - 2.0 * w[j] + w[j - 1]) / (dp * dp);
        const double l = sv * curv;
        const CostFunction cost = prob.cost_at(p[j]);
        const double h = 1e-4 * (1.0 + std::abs(l));
        const double dgdl = (g_function(cost, l + h) - g_function(cost, l - h)) / (2.0 * h);
        dmax = std::max(dmax, sv * dgdl - 0.5 * sv * sv);
    }
    return dp * dp / (2.0 * std::max(dmax, 1e-300));
}

// Arithmetic of the proportional-cost (bid-ask) variant: the pricing equation
// reduces to dv/dt + (sigma s / sqrt(2 pi) - sigma^2/2) v_pp = 0. The
// `coefficient` below is its negation sigma^2/2 - sigma s / sqrt(2 pi); the
// equation marches from terminal data exactly when `forward_diffusion`
// = -coefficient is nonnegative, i.e. for spreads above sqrt(pi/2) sigma.
struct LinearDiffusionReport {
    double coefficient = 0.0;        // sigma^2/2 - sigma s / sqrt(2 pi)
    bool negative = false;           // coefficient < 0
    double forward_diffusion = 0.0;  // sigma s / sqrt(2 pi) - sigma^2/2
    bool well_posed = false;         // forward_diffusion >= 0
};

inline LinearDiffusionReport linear_effective_diffusion(double sigma, double spread) {
    if (!(sigma > 0.0)) throw ValidationError("linear diffusion: sigma must be > 0");
    if (!(spread >= 0.0)) throw ValidationError("linear diffusion: spread must be >= 0");
    LinearDiffusionReport r;
    r.coefficient = 0.5 * sigma * sigma - sigma * spread * kInvSqrt2Pi;
    r.negative = r.coefficient < 0.0;
    r.forward_diffusion = -r.coefficient;
    r.well_posed = r.forward_diffusion >= 0.0;
    return r;
}

// The replicating position is the delta surface, its volatility the scaled
// gamma surface; this packages the t=0 readouts.
struct ReplicationStrategy {
    double price = 0.0;          // v(0, p0), the replication price
    double initial_delta = 0.0;  // L_0
    double initial_cash = 0.0;   // K_0 = v(0,p0) - v_p(0,p0) p0
};

inline ReplicationStrategy replication_strategy(const PdeSolution& sol) {
    ReplicationStrategy s;
    s.price = sol.value_at(0.0, sol.spot);
    s.initial_delta = sol.delta_at(0.0, sol.spot);
    s.initial_cash = s.price - s.initial_delta * sol.spot;
    return s;
}

enum class HedgeOrderClass { Market, Limit, Mixed };

inline const char* hedge_order_class_name(HedgeOrderClass c) {
    switch (c) {
        case HedgeOrderClass::Market: return "market";
        case HedgeOrderClass::Limit: return "limit";
        case HedgeOrderClass::Mixed: return "mixed";
    }
    return "mixed";
}

// Positive gamma everywhere -> market orders, negative -> limit orders.
// The tolerance absorbs far-field rounding noise in the gamma surface.
inline HedgeOrderClass classify_order_type(const PdeSolution& sol) {
    double max_abs = 0.0;
    for (const auto& slice : sol.gamma)
        for (std::size_t j = 1; j + 1 < slice.size(); ++j)
            max_abs = std::max(max_abs, std::abs(slice[j]));
    const double tol = 1e-9 * max_abs + 1e-12;
    bool has_pos = false, has_neg = false;
    for (const auto& slice : sol.gamma) {
        for (std::size_t j = 1; j + 1 < slice.size(); ++j) {
            if (slice[j] > tol) has_pos = true;
            if (slice[j] < -tol) has_neg = true;
        }
    }
    if (has_pos && !has_neg) return HedgeOrderClass::Market;
    if (has_neg && !has_pos) return HedgeOrderClass::Limit;
    return HedgeOrderClass::Mixed;
}

struct ReplicationConfig {
    std::size_t paths = 10000;
    std::size_t steps = 10000;
    std::uint64_t seed = 1;
    bool censor_exits = false;  // drop paths that leave the grid (default: clamp)
    std::size_t threads = 1;
};

struct ReplicationReport {
    double rms = 0.0;
    double mean = 0.0;
    double mean_standard_error = 0.0;
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
    std::size_t paths_used = 0;
    std::size_t grid_exits = 0;
};

// Hedge along simulated price paths using the PDE surfaces and the
// self-financing integrand sigma*l - g; report the terminal mismatch
// X_T - payoff(p_T).
inline ReplicationReport replication_error(const PdeSolution& sol, const PdeProblem& prob,
                                           ReplicationConfig config = {}) {
    if (!prob.drift && !prob.mc_process)
        throw ValidationError("replication_error: a drift (or exact process) is required");
    const TimeGrid grid(prob.maturity, config.steps);
    const double dt = grid.dt();

    const ItoProcessSpec process = prob.mc_process
        ? *prob.mc_process
        : ItoProcessSpec::custom(
              prob.spot, [&prob](double, double p) { return prob.drift(p); },
              [&prob](double, double p) { return prob.sigma(p); });

    std::vector<double> raw_errors(config.paths);
    std::vector<char> exited_flags(config.paths, 0);
    parallel_for(config.paths, config.threads, [&](std::size_t i) {
        const SamplePath path = simulate_path(process, grid, config.seed, i);
        bool exited = false;
        double x = sol.price;
        for (std::size_t k = 0; k < config.steps; ++k) {
            const double t = grid.node(k);
            const double p = path.values[k];
            if (!sol.contains(t, p)) exited = true;
            const double delta = sol.delta_at(t, p);
            const double pc = std::clamp(p, sol.pgrid.front(), sol.pgrid.back());
            const double svol = prob.sigma(pc);
            const double l = svol * sol.gamma_at(t, p);
            const double g = g_function(prob.cost_at(pc), l);
            x += delta * (path.values[k + 1] - path.values[k]) + (svol * l - g) * dt;
        }
        exited_flags[i] = exited ? 1 : 0;
        raw_errors[i] = x - prob.payoff(path.values.back());
    });

    std::vector<double> errors;
    errors.reserve(config.paths);
    std::size_t exits = 0;
    for (std::size_t i = 0; i < config.paths; ++i) {
        if (exited_flags[i]) {
            ++exits;
            if (config.censor_exits) continue;
        }
        errors.push_back(raw_errors[i]);
    }

    if (errors.empty()) throw NumericError("replication_error: every path was censored");

    ReplicationReport report;
    report.paths_used = errors.size();
    report.grid_exits = exits;
    double sum = 0.0, sum_sq = 0.0;
    for (double e : errors) {
        sum += e;
        sum_sq += e * e;
    }
    const double n = static_cast<double>(errors.size());
    report.mean = sum / n;
    report.rms = std::sqrt(sum_sq / n);
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    report.mean_standard_error = std::sqrt(var / n);

    std::sort(errors.begin(), errors.end());
    auto quantile = [&](double q) {
        const double pos = q * (n - 1.0);
        const std::size_t j = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(j);
        return j + 1 < errors.size() ? errors[j] * (1.0 - w) + errors[j + 1] * w : errors[j];
    };
    report.q05 = quantile(0.05);
    report.q25 = quantile(0.25);
    report.q50 = quantile(0.50);
    report.q75 = quantile(0.75);
    report.q95 = quantile(0.95);
    return report;
}

// Convenience payoff builders and book families used by scenarios and tests.
namespace payoffs {

inline std::function<double(double)> call(double strike) {
    return [strike](double p) { return std::max(p - strike, 0.0); };
}

inline std::function<double(double)> put(double strike) {
    return [strike](double p) { return std::max(strike - p, 0.0); };
}

inline std::function<double(double)> linear(double slope, double intercept) {
    return [slope, intercept](double p) { return slope * p + intercept; };
}

inline std::function<double(double)> constant(double value) {
    return [value](double) { return value; };
}

inline std::function<double(double)> call_spread(double k_low, double k_high) {
    return [k_low, k_high](double p) {
        return std::max(p - k_low, 0.0) - std::max(p - k_high, 0.0);
    };
}

}  // namespace payoffs

// Book family with spread s(p): proportional costs by price level.
inline std::function<CostFunction(double)> spread_book(std::function<double(double)> spread) {
    return [spread = std::move(spread)](double p) {
        return legendre_transform(ShapeSpec::half_spread_wall(spread(p)));
    };
}

// The exact-cancellation family s(p) = sqrt(2 pi) sigma(p): frictions and
// adverse selection offset and the frictionless dynamics reappear.
inline std::function<CostFunction(double)> cancellation_book(
    std::function<double(double)> sigma) {
    return [sigma = std::move(sigma)](double p) {
        return legendre_transform(ShapeSpec::half_spread_wall(kSqrt2Pi * sigma(p)));
    };
}

// Frictionless oracles used to cross-check the solver.
namespace closed_form {

// Zero-rate Black-Scholes call on a lognormal underlying.
inline double black_scholes_call(double spot, double strike, double vol, double maturity) {
    const double sd = vol * std::sqrt(maturity);
    const double d1 = (std::log(spot / strike) + 0.5 * sd * sd) / sd;
    return spot * normal_cdf(d1) - strike * normal_cdf(d1 - sd);
}

inline double black_scholes_delta(double spot, double strike, double vol, double maturity) {
    const double sd = vol * std::sqrt(maturity);
    return normal_cdf((std::log(spot / strike) + 0.5 * sd * sd) / sd);
}

// Gaussian-smoothing call value with total variance `variance`.
inline double bachelier_call(double spot, double strike, double variance) {
    if (variance <= 0.0) return std::max(spot - strike, 0.0);
    const double sd = std::sqrt(variance);
    const double d = (spot - strike) / sd;
    return sd * normal_pdf(d) + (spot - strike) * normal_cdf(d);
}

}  // namespace closed_form

}  // namespace lobkit
