#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lobkit/csv.hpp"
#include "lobkit/errors.hpp"
#include "lobkit/gaussian.hpp"
#include "lobkit/process.hpp"
#include "lobkit/rng.hpp"

namespace lobkit {

// Fill model of the market maker: probability-of-execution intensity f and
// fill correlation rho, both functions of the spread measured in vols,
// x = s/sigma. The Gaussian scaling keeps the spread-income term of the
// wealth equation (factor 1/sqrt(2 pi)); the Unit variant drops that factor
// from both the objective and the income accounting, which recovers the
// sqrt(1+3a) closed-form maximizer for the explicit model.
struct MMModel {
    enum class SpreadScaling { Gaussian, Unit };

    std::function<double(double)> fill_rate;         // f > 0, decreasing
    std::function<double(double)> fill_correlation;  // rho in [0,1]
    SpreadScaling scaling = SpreadScaling::Gaussian;

    static MMModel explicit_model(SpreadScaling scaling = SpreadScaling::Gaussian) {
        MMModel m;
        m.fill_rate = [](double x) { return 1.0 / ((1.0 + x) * (1.0 + x)); };
        m.fill_correlation = [](double x) { return 1.0 / (1.0 + x); };
        m.scaling = scaling;
        m.validate();
        return m;
    }

    static MMModel custom(std::function<double(double)> fill_rate,
                          std::function<double(double)> fill_correlation,
                          SpreadScaling scaling = SpreadScaling::Gaussian) {
        MMModel m;
        m.fill_rate = std::move(fill_rate);
        m.fill_correlation = std::move(fill_correlation);
        m.scaling = scaling;
        m.validate();
        return m;
    }

    double income_scale() const {
        return scaling == SpreadScaling::Gaussian ? kInvSqrt2Pi : 1.0;
    }

    // Probe-grid validation: f positive, rho in [0,1], and x f(x) eventually
    // decreasing to zero so the spread search can be bracketed.
    void validate() const {
        if (!fill_rate || !fill_correlation)
            throw ValidationError("mm model: fill rate and correlation are required");
        std::vector<double> grid{0.0};
        for (double x = 1e-3; x <= 1e4; x *= 1.6) grid.push_back(x);
        double peak = 0.0;
        for (double x : grid) {
            const double f = fill_rate(x);
            const double rho = fill_correlation(x);
            if (!(f > 0.0) || !std::isfinite(f))
                throw ValidationError("mm model: fill rate must be positive, violated at x=" +
                                      format_short(x));
            if (!(rho >= 0.0 && rho <= 1.0))
                throw ValidationError("mm model: correlation outside [0,1] at x=" +
                                      format_short(x));
            peak = std::max(peak, x * f);
        }
        double prev = grid.back() * fill_rate(grid.back());
        for (double x = grid.back(); x <= 1e6; x *= 2.0) {
            const double g = x * fill_rate(x);
            if (g > prev * (1.0 + 1e-9))
                throw ValidationError("mm model: x*f(x) must decrease for large x, violated at x=" +
                                      format_short(x));
            prev = g;
        }
        if (!(prev <= 0.01 * peak))
            throw ValidationError("mm model: x*f(x) must vanish at infinity");
    }
};

// The spread trade-off: expected income against adverse selection,
//   F_a(x) = k x f(x) - a rho(x) f(x),  k = 1/sqrt(2 pi) or 1.
inline double spread_objective(const MMModel& model, double a, double x) {
    if (!(x >= 0.0)) throw DomainError("spread objective: x must be >= 0");
    const double f = model.fill_rate(x);
    return model.income_scale() * x * f - a * model.fill_correlation(x) * f;
}

struct SpreadOptimum {
    double value = 0.0;      // max of F_a
    double maximizer = 0.0;  // smallest argmax, > 0 for a > 0
    bool a_in_theory = true; // a > 0 is the modelled regime
};

// Maximize F_a over [0, inf): coarse log-spaced scan on a doubling bracket
// (stop once the income envelope k x f(x) at the right edge falls below the
// best value so far), then golden-section refinement. Ties resolve to the
// smallest maximizer.
inline SpreadOptimum optimize_spread(const MMModel& model, double a,
                                     std::size_t scan_points = 1200) {
    const double k = model.income_scale();
    double x_hi = std::max(a + 1.0, 10.0);

    double best_x = 0.0;
    double best_v = spread_objective(model, a, 0.0);
    double best_lo = 0.0, best_hi = 0.0;
    int doublings = 0;
    for (;; ++doublings) {
        if (doublings > 60)
            throw BracketError("spread search: envelope never fell below the maximum (x_hi=" +
                               format_short(x_hi) + ", best=" + format_short(best_v) + ")");
        std::vector<double> xs{0.0};
        const double lo_exp = -6.0, hi_exp = std::log10(x_hi);
        for (std::size_t i = 0; i < scan_points; ++i)
            xs.push_back(std::pow(
                10.0, lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) /
                                   static_cast<double>(scan_points - 1)));
        best_x = 0.0;
        best_v = spread_objective(model, a, 0.0);
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double v = spread_objective(model, a, xs[i]);
            if (v > best_v) {
                best_v = v;
                best_x = xs[i];
                best_i = i;
            }
        }
        best_lo = best_i > 0 ? xs[best_i - 1] : 0.0;
        best_hi = best_i + 1 < xs.size() ? xs[best_i + 1] : x_hi;
        if (k * x_hi * model.fill_rate(x_hi) < best_v) break;
        x_hi *= 2.0;
    }

    // golden-section refinement inside [best_lo, best_hi]
    const double phi = 0.6180339887498949;
    double lo = best_lo, hi = best_hi;
    double c = hi - phi * (hi - lo);
    double d = lo + phi * (hi - lo);
    double fc = spread_objective(model, a, c);
    double fd = spread_objective(model, a, d);
    while (hi - lo > 1e-13 * (1.0 + hi)) {
        if (fc >= fd) {  // ties collapse toward the smaller maximizer
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = spread_objective(model, a, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = spread_objective(model, a, d);
        }
    }
    const double x_star = 0.5 * (lo + hi);
    const double v_star = spread_objective(model, a, x_star);

    SpreadOptimum out;
    out.a_in_theory = a > 0.0;
    if (v_star >= best_v) {
        out.value = v_star;
        out.maximizer = x_star;
    } else {
        out.value = best_v;
        out.maximizer = best_x;
    }
    return out;
}

// Price model for which the adjoint state has a closed form.
struct AlphaModel {
    enum class Kind { Martingale, BlackScholes, OrnsteinUhlenbeck };

    Kind kind = Kind::Martingale;
    double maturity = 1.0;
    double spot = 100.0;
    double sigma = 0.2;      // relative for BlackScholes, absolute otherwise
    double mu = 0.0;         // BlackScholes
    double reversion = 0.0;  // OrnsteinUhlenbeck, anchored at the spot

    static AlphaModel martingale(double sigma, double spot, double maturity) {
        AlphaModel m;
        m.kind = Kind::Martingale;
        m.sigma = sigma;
        m.spot = spot;
        m.maturity = maturity;
        m.check();
        return m;
    }

    static AlphaModel black_scholes(double mu, double sigma, double spot, double maturity) {
        AlphaModel m;
        m.kind = Kind::BlackScholes;
        m.mu = mu;
        m.sigma = sigma;
        m.spot = spot;
        m.maturity = maturity;
        m.check();
        return m;
    }

    static AlphaModel ornstein_uhlenbeck(double reversion, double sigma, double spot,
                                         double maturity) {
        AlphaModel m;
        m.kind = Kind::OrnsteinUhlenbeck;
        m.reversion = reversion;
        m.sigma = sigma;
        m.spot = spot;
        m.maturity = maturity;
        m.check();
        return m;
    }

    void check() const {
        if (!(sigma >= 0.0)) throw ValidationError("alpha model: sigma must be >= 0");
        if (!(maturity > 0.0)) throw ValidationError("alpha model: maturity must be > 0");
        if (kind == Kind::OrnsteinUhlenbeck && !(reversion > 0.0))
            throw ValidationError("alpha model: reversion must be > 0");
    }

    ItoProcessSpec process() const {
        switch (kind) {
            case Kind::Martingale: return ItoProcessSpec::martingale(sigma, spot);
            case Kind::BlackScholes: return ItoProcessSpec::gbm(mu, sigma, spot);
            case Kind::OrnsteinUhlenbeck:
                return ItoProcessSpec::ornstein_uhlenbeck(reversion, spot, sigma, spot);
        }
        throw UnsupportedError("alpha model: unknown kind");
    }

    // Instantaneous price vol at (t, p).
    double vol_at(double p) const {
        return kind == Kind::BlackScholes ? sigma * p : sigma;
    }

    // Adjoint state combining the expected price move, the drift-to-variance
    // ratio and the martingale-representation vol of p_T.
    double alpha_at(double t, double p) const {
        const double tau = maturity - t;
        switch (kind) {
            case Kind::Martingale: return 1.0;
            case Kind::BlackScholes: {
                if (sigma == 0.0) throw NumericError("alpha: vanishing vol in drift model");
                const double grow = std::exp(mu * tau);
                return mu / (sigma * sigma) * (grow - 1.0) + grow;
            }
            case Kind::OrnsteinUhlenbeck: {
                if (sigma == 0.0) throw NumericError("alpha: vanishing vol in reverting model");
                const double decay = std::exp(-reversion * tau);
                const double dev = p - spot;
                return -reversion / (sigma * sigma) * dev * dev * (decay - 1.0) + decay;
            }
        }
        return 1.0;
    }
};

inline std::vector<double> alpha_path(const AlphaModel& model, const SamplePath& p) {
    std::vector<double> alphas(p.values.size());
    for (std::size_t k = 0; k < p.values.size(); ++k)
        alphas[k] = model.alpha_at(p.grid.node(k), p.values[k]);
    return alphas;
}

// Cached optimum (m(a), M(a)) on a uniform a-grid with linear interpolation
// between computed points; queries outside the cached range extend it and
// recompute.
class SpreadOptimizer {
  public:
    explicit SpreadOptimizer(MMModel model, std::size_t nodes = 513)
        : model_(std::move(model)), nodes_(nodes) {}

    const MMModel& model() const { return model_; }

    double maximizer(double a) { return lookup(maximizers_, a); }
    double value(double a) { return lookup(values_, a); }

  private:
    double lookup(const std::vector<double>& table, double a) {
        if (maximizers_.empty() || a < lo_ || a > hi_) extend(a);
        if (hi_ == lo_) return table.front();
        const double pos = (a - lo_) / (hi_ - lo_) * static_cast<double>(table.size() - 1);
        const std::size_t i = std::min(static_cast<std::size_t>(pos), table.size() - 2);
        const double w = pos - static_cast<double>(i);
        return table[i] * (1.0 - w) + table[i + 1] * w;
    }

    void extend(double a) {
        double lo = maximizers_.empty() ? a - 0.5 : std::min(lo_, a - 0.5);
        double hi = maximizers_.empty() ? a + 0.5 : std::max(hi_, a + 0.5);
        maximizers_.resize(nodes_);
        values_.resize(nodes_);
        for (std::size_t i = 0; i < nodes_; ++i) {
            const double ai = lo + (hi - lo) * static_cast<double>(i) /
                                       static_cast<double>(nodes_ - 1);
            const auto opt = optimize_spread(model_, ai);
            maximizers_[i] = opt.maximizer;
            values_[i] = opt.value;
        }
        lo_ = lo;
        hi_ = hi;
    }

    MMModel model_;
    std::size_t nodes_;
    double lo_ = 0.0, hi_ = 0.0;
    std::vector<double> maximizers_;
    std::vector<double> values_;
};

// Per-node optimal policy: s_t = sigma_t m(alpha_t).
struct SpreadPolicy {
    std::vector<double> alpha;
    std::vector<double> spread;
    std::vector<double> sigma;
    std::vector<double> inventory_vol;  // sigma_t f(s_t/sigma_t)

    void write_csv(std::ostream& out, const TimeGrid& grid) const {
        CsvWriter csv(out, {"t", "alpha", "s", "sigma", "inv_vol"});
        for (std::size_t k = 0; k < alpha.size(); ++k)
            csv.row({grid.node(k), alpha[k], spread[k], sigma[k], inventory_vol[k]});
    }
};

inline SpreadPolicy optimal_spread(SpreadOptimizer& optimizer, const std::vector<double>& alphas,
                                   const std::vector<double>& sigmas) {
    if (alphas.size() != sigmas.size())
        throw ShapeError("optimal_spread: alpha and sigma paths differ in length");
    SpreadPolicy policy;
    policy.alpha = alphas;
    policy.sigma = sigmas;
    policy.spread.resize(alphas.size());
    policy.inventory_vol.resize(alphas.size());
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        if (!std::isfinite(alphas[k])) throw NumericError("optimal_spread: alpha is not finite");
        if (!(sigmas[k] > 0.0)) throw ValidationError("optimal_spread: sigma must be > 0");
        const double x = optimizer.maximizer(alphas[k]);
        policy.spread[k] = sigmas[k] * x;
        policy.inventory_vol[k] = sigmas[k] * optimizer.model().fill_rate(x);
    }
    return policy;
}

inline SpreadPolicy optimal_spread(const MMModel& model, const std::vector<double>& alphas,
                                   const std::vector<double>& sigmas) {
    SpreadOptimizer optimizer(model);
    return optimal_spread(optimizer, alphas, sigmas);
}

struct MMReport {
    double mean_pnl = 0.0;
    double pnl_standard_error = 0.0;
    double mean_inventory_change = 0.0;
    double inventory_standard_error = 0.0;
    double mean_realized_covariation = 0.0;
    double theory_profit = 0.0;  // E[ integral M(alpha_t) sigma_t^2 dt ]
    std::size_t paths = 0;
    SpreadPolicy sample_policy;  // path 0, for the CSV export
    TimeGrid grid;
};

struct MMSimConfig {
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
};

// Expected profit E[ integral M(alpha_t) sigma_t^2 dt ]. Closed forms for the
// martingale and drift models (alpha is deterministic and E[p_t^2] is known),
// Monte Carlo for the reverting one.
inline double expected_profit(const MMModel& model, const AlphaModel& alpha_model,
                              const TimeGrid& grid, MMSimConfig config = {}) {
    const double dt = grid.dt();
    switch (alpha_model.kind) {
        case AlphaModel::Kind::Martingale: {
            const double m1 = optimize_spread(model, 1.0).value;
            return m1 * alpha_model.sigma * alpha_model.sigma * grid.horizon;
        }
        case AlphaModel::Kind::BlackScholes: {
            // E[p_t^2] = p0^2 exp((2 mu + sigma^2) t), alpha deterministic
            double acc = 0.0;
            const double s2 = alpha_model.sigma * alpha_model.sigma;
            for (std::size_t k = 0; k < grid.steps; ++k) {
                const double t = grid.node(k);
                const double m = optimize_spread(model, alpha_model.alpha_at(t, 0.0)).value;
                const double ep2 = alpha_model.spot * alpha_model.spot *
                                   std::exp((2.0 * alpha_model.mu + s2) * t);
                acc += m * s2 * ep2 * dt;
            }
            return acc;
        }
        case AlphaModel::Kind::OrnsteinUhlenbeck: {
            const auto spec = alpha_model.process();
            const double s2 = alpha_model.sigma * alpha_model.sigma;
            SpreadOptimizer optimizer(model);
            double acc = 0.0;
            for (std::size_t i = 0; i < config.paths; ++i) {
                const auto p = simulate_path(spec, grid, config.seed, i);
                double path_acc = 0.0;
                for (std::size_t k = 0; k < grid.steps; ++k)
                    path_acc +=
                        optimizer.value(alpha_model.alpha_at(grid.node(k), p.values[k])) * s2 * dt;
                acc += path_acc;
            }
            return acc / static_cast<double>(config.paths);
        }
    }
    throw UnsupportedError("expected_profit: unknown alpha model");
}

// Simulate the optimally-quoting market maker:
//   dp from the price model, spread s = sigma m(alpha),
//   dL = -rho f dp + f sqrt(1-rho^2) sigma dWperp,
//   dX = L dp + dp dL + k sigma s f dt.
inline MMReport simulate_mm(const MMModel& model, const AlphaModel& alpha_model,
                            const TimeGrid& grid, MMSimConfig config = {}) {
    if (config.paths == 0) throw ValidationError("simulate_mm: need at least one path");
    SpreadOptimizer optimizer(model);
    const auto spec = alpha_model.process();
    const double dt = grid.dt();
    const double root_dt = std::sqrt(dt);
    const double k_income = model.income_scale();

    MMReport report;
    report.grid = grid;
    report.paths = config.paths;

    std::vector<double> pnls(config.paths), invs(config.paths), covs(config.paths);
    for (std::size_t i = 0; i < config.paths; ++i) {
        double p = alpha_model.spot;
        double inventory = 0.0;
        double x = 0.0;
        double cov = 0.0;
        const bool record = (i == 0);
        if (record) {
            auto& sp = report.sample_policy;
            sp.alpha.resize(grid.nodes());
            sp.spread.resize(grid.nodes());
            sp.sigma.resize(grid.nodes());
            sp.inventory_vol.resize(grid.nodes());
        }
        for (std::size_t k = 0; k <= grid.steps; ++k) {
            const double t = grid.node(k);
            const double alpha = alpha_model.alpha_at(t, p);
            const double sigma_t = alpha_model.vol_at(p);
            const double xr = optimizer.maximizer(alpha);
            const double f = model.fill_rate(xr);
            const double rho = model.fill_correlation(xr);
            const double spread = sigma_t * xr;
            if (record) {
                report.sample_policy.alpha[k] = alpha;
                report.sample_policy.spread[k] = spread;
                report.sample_policy.sigma[k] = sigma_t;
                report.sample_policy.inventory_vol[k] = sigma_t * f;
            }
            if (k == grid.steps) break;
            const double p_next =
                detail::step_process(spec, t, p, dt, rng::gaussian(config.seed, i, k, 0));
            const double dp = p_next - p;
            const double dl = -rho * f * dp + f * std::sqrt(std::max(0.0, 1.0 - rho * rho)) *
                                                  sigma_t * root_dt *
                                                  rng::gaussian(config.seed, i, k, 1);
            x += inventory * dp + dp * dl + k_income * sigma_t * spread * f * dt;
            cov += dp * dl;
            inventory += dl;
            p = p_next;
        }
        pnls[i] = x;
        invs[i] = inventory;
        covs[i] = cov;
    }

    double pnl_sum = 0.0, inv_sum = 0.0, cov_sum = 0.0;
    for (std::size_t i = 0; i < config.paths; ++i) {
        pnl_sum += pnls[i];
        inv_sum += invs[i];
        cov_sum += covs[i];
    }
    const double n = static_cast<double>(config.paths);
    report.mean_pnl = pnl_sum / n;
    report.mean_inventory_change = inv_sum / n;
    report.mean_realized_covariation = cov_sum / n;
    double pnl_var = 0.0, inv_var = 0.0;
    for (std::size_t i = 0; i < config.paths; ++i) {
        pnl_var += (pnls[i] - report.mean_pnl) * (pnls[i] - report.mean_pnl);
        inv_var += (invs[i] - report.mean_inventory_change) *
                   (invs[i] - report.mean_inventory_change);
    }
    if (config.paths > 1) {
        pnl_var /= (n - 1.0);
        inv_var /= (n - 1.0);
    }
    report.pnl_standard_error = std::sqrt(pnl_var / n);
    report.inventory_standard_error = std::sqrt(inv_var / n);
    report.theory_profit = expected_profit(model, alpha_model, grid, config);
    return report;
}

}  // namespace lobkit
