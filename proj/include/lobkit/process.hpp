#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lobkit/errors.hpp"
#include "lobkit/rng.hpp"
#include "lobkit/time_grid.hpp"

namespace lobkit {

// A discretized realization of one Ito process.
struct SamplePath {
    TimeGrid grid;
    std::vector<double> values;  // length grid.nodes()
    std::uint64_t seed = 0;

    double front() const { return values.front(); }
    double back() const { return values.back(); }
    std::size_t nodes() const { return values.size(); }
};

// Coefficient description of dX = drift(t,X) dt + vol(t,X) dW. The named
// kinds carry their parameters so paths can be sampled from the exact
// transition law instead of an Euler scheme.
struct ItoProcessSpec {
    enum class Kind { Custom, Gbm, OrnsteinUhlenbeck, MartingaleConstVol };

    Kind kind = Kind::Custom;
    double x0 = 0.0;
    double mu = 0.0;         // Gbm
    double sigma = 0.0;      // Gbm (relative), OU / MartingaleConstVol (absolute)
    double reversion = 0.0;  // OU mean-reversion speed
    double level = 0.0;      // OU long-term level
    std::function<double(double, double)> drift_fn;  // Custom
    std::function<double(double, double)> vol_fn;    // Custom

    static ItoProcessSpec gbm(double mu, double sigma, double x0) {
        if (!(sigma >= 0.0)) throw ValidationError("gbm: sigma must be >= 0");
        ItoProcessSpec s;
        s.kind = Kind::Gbm;
        s.mu = mu;
        s.sigma = sigma;
        s.x0 = x0;
        return s;
    }

    static ItoProcessSpec ornstein_uhlenbeck(double reversion, double level, double sigma,
                                             double x0) {
        if (!(sigma >= 0.0)) throw ValidationError("ou: sigma must be >= 0");
        if (!(reversion > 0.0)) throw ValidationError("ou: reversion speed must be > 0");
        ItoProcessSpec s;
        s.kind = Kind::OrnsteinUhlenbeck;
        s.reversion = reversion;
        s.level = level;
        s.sigma = sigma;
        s.x0 = x0;
        return s;
    }

    static ItoProcessSpec martingale(double sigma, double x0) {
        if (!(sigma >= 0.0)) throw ValidationError("martingale: sigma must be >= 0");
        ItoProcessSpec s;
        s.kind = Kind::MartingaleConstVol;
        s.sigma = sigma;
        s.x0 = x0;
        return s;
    }

    static ItoProcessSpec custom(double x0, std::function<double(double, double)> drift,
                                 std::function<double(double, double)> vol) {
        if (!drift || !vol) throw ValidationError("custom process: drift and vol are required");
        ItoProcessSpec s;
        s.kind = Kind::Custom;
        s.x0 = x0;
        s.drift_fn = std::move(drift);
        s.vol_fn = std::move(vol);
        return s;
    }

    // Instantaneous vol at (t, x); used for coefficient-form covariation terms.
    double vol_at(double t, double x) const {
        switch (kind) {
            case Kind::Gbm: return sigma * x;
            case Kind::OrnsteinUhlenbeck: return sigma;
            case Kind::MartingaleConstVol: return sigma;
            case Kind::Custom: return vol_fn(t, x);
        }
        return 0.0;
    }

    double drift_at(double t, double x) const {
        switch (kind) {
            case Kind::Gbm: return mu * x;
            case Kind::OrnsteinUhlenbeck: return reversion * (level - x);
            case Kind::MartingaleConstVol: return 0.0;
            case Kind::Custom: return drift_fn(t, x);
        }
        return 0.0;
    }
};

namespace detail {

inline void check_finite_coeff(double v, const char* what, double t) {
    if (!std::isfinite(v))
        throw NumericError(std::string(what) + " is not finite at t=" + std::to_string(t));
}

// Advance one step given the standard normal draw z. Exact transition for the
// named kinds, Euler-Maruyama for Custom.
inline double step_process(const ItoProcessSpec& spec, double t, double x, double dt, double z) {
    switch (spec.kind) {
        case ItoProcessSpec::Kind::Gbm:
            return x * std::exp((spec.mu - 0.5 * spec.sigma * spec.sigma) * dt +
                                spec.sigma * std::sqrt(dt) * z);
        case ItoProcessSpec::Kind::OrnsteinUhlenbeck: {
            const double decay = std::exp(-spec.reversion * dt);
            const double sd =
                spec.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * spec.reversion));
            return spec.level + (x - spec.level) * decay + sd * z;
        }
        case ItoProcessSpec::Kind::MartingaleConstVol:
            return x + spec.sigma * std::sqrt(dt) * z;
        case ItoProcessSpec::Kind::Custom: {
            const double b = spec.drift_fn(t, x);
            const double s = spec.vol_fn(t, x);
            check_finite_coeff(b, "drift", t);
            check_finite_coeff(s, "vol", t);
            if (s < 0.0)
                throw NumericError("vol is negative at t=" + std::to_string(t));
            return x + b * dt + s * std::sqrt(dt) * z;
        }
    }
    return x;
}

}  // namespace detail

// Simulate one path. `stream` is the Monte Carlo path index; identical
// (spec, grid, seed, stream) reproduce the path bitwise.
inline SamplePath simulate_path(const ItoProcessSpec& spec, const TimeGrid& grid,
                                std::uint64_t seed, std::uint64_t stream = 0) {
    SamplePath path;
    path.grid = grid;
    path.seed = seed;
    path.values.resize(grid.nodes());
    path.values[0] = spec.x0;
    const double dt = grid.dt();
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double z = rng::gaussian(seed, stream, k, 0);
        const double next = detail::step_process(spec, grid.node(k), path.values[k], dt, z);
        if (!std::isfinite(next))
            throw NumericError("path value is not finite at t=" + std::to_string(grid.node(k + 1)));
        path.values[k + 1] = next;
    }
    return path;
}

// Simulate two paths whose driving increments have per-step correlation
// corr(t_k). The first path is bitwise identical to simulate_path(spec1,...)
// on the same stream.
inline std::pair<SamplePath, SamplePath> correlated_pair(
    const ItoProcessSpec& spec1, const ItoProcessSpec& spec2,
    const std::function<double(double)>& corr, const TimeGrid& grid, std::uint64_t seed,
    std::uint64_t stream = 0) {
    SamplePath a, b;
    a.grid = b.grid = grid;
    a.seed = b.seed = seed;
    a.values.resize(grid.nodes());
    b.values.resize(grid.nodes());
    a.values[0] = spec1.x0;
    b.values[0] = spec2.x0;
    const double dt = grid.dt();
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double t = grid.node(k);
        const double rho = corr(t);
        if (!(rho >= -1.0 && rho <= 1.0))
            throw DomainError("correlated_pair: corr(t) outside [-1,1] at t=" + std::to_string(t));
        const double z1 = rng::gaussian(seed, stream, k, 0);
        const double zp = rng::gaussian(seed, stream, k, 1);
        const double z2 = rho * z1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * zp;
        a.values[k + 1] = detail::step_process(spec1, t, a.values[k], dt, z1);
        b.values[k + 1] = detail::step_process(spec2, t, b.values[k], dt, z2);
    }
    return {std::move(a), std::move(b)};
}

// Exact Brownian bridge from `anchor` back to `anchor` over the grid horizon;
// used for round-trip inventories.
inline SamplePath brownian_bridge(const TimeGrid& grid, double anchor, double vol,
                                  std::uint64_t seed, std::uint64_t stream = 0) {
    if (!(vol >= 0.0)) throw ValidationError("brownian_bridge: vol must be >= 0");
    SamplePath path;
    path.grid = grid;
    path.seed = seed;
    path.values.resize(grid.nodes());
    path.values[0] = anchor;
    const double T = grid.horizon;
    const double dt = grid.dt();
    for (std::size_t k = 0; k + 1 < grid.steps; ++k) {
        const double remain = T - grid.node(k);
        const double x = path.values[k];
        const double mean = x + (anchor - x) * dt / remain;
        const double sd = vol * std::sqrt(dt * (remain - dt) / remain);
        path.values[k + 1] = mean + sd * rng::gaussian(seed, stream, k, 0);
    }
    path.values[grid.steps] = anchor;
    return path;
}

// Realized quadratic covariation: partial sums of da*db, one value per node.
// With a == b this is the realized quadratic variation.
inline SamplePath quadratic_covariation(const SamplePath& a, const SamplePath& b) {
    if (!(a.grid == b.grid) || a.values.size() != b.values.size())
        throw ShapeError("quadratic_covariation: paths live on different grids");
    SamplePath out;
    out.grid = a.grid;
    out.seed = a.seed;
    out.values.resize(a.values.size());
    out.values[0] = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < a.values.size(); ++k) {
        acc += (a.values[k + 1] - a.values[k]) * (b.values[k + 1] - b.values[k]);
        out.values[k + 1] = acc;
    }
    return out;
}

}  // namespace lobkit
