#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lobkit/errors.hpp"
#include "lobkit/gaussian.hpp"

namespace lobkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Order book shape: a convex, nonnegative function gamma with gamma(0) = 0
// whose second derivative is the resting-liquidity density around the
// mid-price. Finite support means no liquidity beyond the bound.
class ShapeSpec {
  public:
    enum class Variant { Flat, HalfSpreadWall, Tabulated };

    // gamma(x) = density * x^2 / 2 (uniform liquidity at every level).
    static ShapeSpec flat(double density) {
        if (!(density > 0.0)) throw ValidationError("flat shape: density must be > 0");
        ShapeSpec s;
        s.variant_ = Variant::Flat;
        s.density_ = density;
        return s;
    }

    // gamma = 0 on [-spread/2, spread/2], infinite outside: unlimited depth
    // sitting exactly at the half-spread.
    static ShapeSpec half_spread_wall(double spread) {
        if (!(spread > 0.0)) throw ValidationError("half-spread wall: spread must be > 0");
        ShapeSpec s;
        s.variant_ = Variant::HalfSpreadWall;
        s.spread_ = spread;
        return s;
    }

    // Piecewise-linear gamma through the given knots, infinite outside them.
    static ShapeSpec tabulated(std::vector<std::pair<double, double>> knots) {
        ShapeSpec s;
        s.variant_ = Variant::Tabulated;
        s.knots_ = std::move(knots);
        s.validate_knots();
        return s;
    }

    // Two-column text: x gamma(x) per line, strictly increasing x, '#' comments.
    static ShapeSpec load_tabulated(std::istream& in) {
        std::vector<std::pair<double, double>> knots;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ls(line);
            double x, g;
            if (!(ls >> x)) continue;  // blank / comment-only line
            if (!(ls >> g))
                throw ValidationError("book file line " + std::to_string(lineno) +
                                      ": expected two columns (x, gamma)");
            std::string extra;
            if (ls >> extra)
                throw ValidationError("book file line " + std::to_string(lineno) +
                                      ": trailing token '" + extra + "'");
            if (!std::isfinite(x) || !std::isfinite(g))
                throw ValidationError("book file line " + std::to_string(lineno) +
                                      ": non-finite value");
            knots.emplace_back(x, g);
        }
        return tabulated(std::move(knots));
    }

    static ShapeSpec load_tabulated(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open book file: " + path);
        return load_tabulated(in);
    }

    Variant variant() const { return variant_; }

    double density() const {
        if (variant_ != Variant::Flat) throw UnsupportedError("shape has no density parameter");
        return density_;
    }

    double spread() const {
        if (variant_ != Variant::HalfSpreadWall)
            throw UnsupportedError("shape has no spread parameter");
        return spread_;
    }

    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

    // sup{|x| : gamma(x) < inf}
    double support_bound() const {
        switch (variant_) {
            case Variant::Flat: return kInf;
            case Variant::HalfSpreadWall: return 0.5 * spread_;
            case Variant::Tabulated:
                return std::max(std::abs(knots_.front().first), std::abs(knots_.back().first));
        }
        return kInf;
    }

    bool contains(double x) const {
        if (variant_ == Variant::Tabulated)
            return x >= knots_.front().first && x <= knots_.back().first;
        return std::abs(x) <= support_bound();
    }

    double value(double x) const {
        switch (variant_) {
            case Variant::Flat: return 0.5 * density_ * x * x;
            case Variant::HalfSpreadWall:
                if (std::abs(x) > 0.5 * spread_) return kInf;
                return 0.0;
            case Variant::Tabulated: {
                if (!contains(x)) return kInf;
                const auto it = std::upper_bound(
                    knots_.begin(), knots_.end(), x,
                    [](double v, const std::pair<double, double>& k) { return v < k.first; });
                if (it == knots_.begin()) return knots_.front().second;
                const auto hi = (it == knots_.end()) ? knots_.end() - 1 : it;
                const auto lo = hi - 1;
                const double w = (x - lo->first) / (hi->first - lo->first);
                return lo->second + w * (hi->second - lo->second);
            }
        }
        return kInf;
    }

    // gamma'(x); midpoint of the subdifferential at tabulated knots.
    double slope(double x) const {
        switch (variant_) {
            case Variant::Flat: return density_ * x;
            case Variant::HalfSpreadWall:
                if (std::abs(x) > 0.5 * spread_)
                    throw DomainError("shape slope requested outside the book support");
                return 0.0;
            case Variant::Tabulated: {
                if (!contains(x)) throw DomainError("shape slope requested outside the book support");
                double left = -kInf, right = kInf;
                for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
                    const double a = knots_[i].first, b = knots_[i + 1].first;
                    const double s = (knots_[i + 1].second - knots_[i].second) / (b - a);
                    if (x > a && x < b) return s;
                    if (x == a) right = s;
                    if (x == b) left = s;
                }
                if (left == -kInf) return right;  // left endpoint
                if (right == kInf) return left;   // right endpoint
                return 0.5 * (left + right);
            }
        }
        return 0.0;
    }

    double curvature(double x) const {
        switch (variant_) {
            case Variant::Flat: return density_;
            case Variant::HalfSpreadWall:
            case Variant::Tabulated:
                if (!contains(x))
                    throw DomainError("shape curvature requested outside the book support");
                return 0.0;  // a.e. value; kinks carry the mass
        }
        return 0.0;
    }

    bool is_even() const {
        if (variant_ != Variant::Tabulated) return true;
        for (const auto& [x, g] : knots_) {
            bool matched = false;
            for (const auto& [x2, g2] : knots_) {
                if (std::abs(x2 + x) <= 1e-12 * (1.0 + std::abs(x)) &&
                    std::abs(g2 - g) <= 1e-12 * (1.0 + std::abs(g))) {
                    matched = true;
                    break;
                }
            }
            if (!matched) return false;
        }
        return true;
    }

  private:
    void validate_knots() {
        if (knots_.size() < 2) throw ValidationError("tabulated shape: need at least two knots");
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            if (!(knots_[i].first > knots_[i - 1].first))
                throw ValidationError("tabulated shape: x must be strictly increasing at knot " +
                                      std::to_string(i));
        }
        double prev_slope = -kInf;
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            const double s = (knots_[i].second - knots_[i - 1].second) /
                             (knots_[i].first - knots_[i - 1].first);
            if (s < prev_slope - 1e-12)
                throw ValidationError("tabulated shape: not convex, slope decreases at knot " +
                                      std::to_string(i));
            prev_slope = s;
        }
        if (!(knots_.front().first <= 0.0 && knots_.back().first >= 0.0))
            throw ValidationError("tabulated shape: support must contain 0");
        const double g0 = value(0.0);
        if (std::abs(g0) > 1e-12)
            throw ValidationError("tabulated shape: gamma(0) must be 0, got " + std::to_string(g0));
        for (std::size_t i = 0; i < knots_.size(); ++i)
            if (knots_[i].second < -1e-12)
                throw ValidationError("tabulated shape: gamma must be >= 0 at knot " +
                                      std::to_string(i));
    }

    Variant variant_ = Variant::Flat;
    double density_ = 1.0;
    double spread_ = 1.0;
    std::vector<std::pair<double, double>> knots_;
};

namespace detail {

// Conjugate of a flat book: quadratic costs.
struct FlatCost {
    double density;  // m
    double eval(double l) const { return 0.5 * l * l / density; }
    double d1(double l) const { return l / density; }
    double d2(double) const { return 1.0 / density; }
    double mean(double a) const { return 0.5 * a * a / density; }
    double mean_d2(double) const { return 1.0 / density; }
    double mean_d1_sq(double a) const { return a * a / (density * density); }
    double mean_id_d1(double a) const { return a * a / density; }
};

// Conjugate of the half-spread wall: proportional costs s|l|/2.
struct WallCost {
    double spread;  // s
    double eval(double l) const { return 0.5 * spread * std::abs(l); }
    double d1(double l) const { return l > 0.0 ? 0.5 * spread : (l < 0.0 ? -0.5 * spread : 0.0); }
    double d2(double) const { return 0.0; }  // a.e.; the kink at 0 carries mass s
    double mean(double a) const { return spread * a * kInvSqrt2Pi; }
    double mean_d2(double a) const {
        if (a == 0.0)
            throw NumericError("wall cost curvature: point mass at 0 cannot be evaluated at a=0");
        return spread * normal_pdf(0.0) / a;
    }
    double mean_d1_sq(double) const { return 0.25 * spread * spread; }
    double mean_id_d1(double a) const { return spread * a * kInvSqrt2Pi; }
};

// Conjugate of a piecewise-linear gamma: again piecewise linear, with
// breakpoints at the gamma slopes and the knot positions as slopes.
struct TabulatedCost {
    std::vector<double> knot_x;   // maximizer when l falls in region i
    std::vector<double> knot_g;   // gamma at that knot
    std::vector<double> breaks;   // sorted slope values, size knot_x.size()-1
    bool even = false;

    std::size_t region(double l) const {
        return static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), l) -
                                        breaks.begin());
    }

    double eval(double l) const {
        const std::size_t i = region(l);
        return l * knot_x[i] - knot_g[i];
    }

    double d1(double l) const {
        for (std::size_t i = 0; i < breaks.size(); ++i)
            if (l == breaks[i]) return 0.5 * (knot_x[i] + knot_x[i + 1]);
        return knot_x[region(l)];
    }

    double d2(double) const { return 0.0; }

    double mean(double a) const {
        if (a == 0.0) return eval(0.0);
        double acc = 0.0;
        const std::size_t n = knot_x.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = (i == 0) ? -kInf : breaks[i - 1] / a;
            const double hi = (i == n - 1) ? kInf : breaks[i] / a;
            const double pdf_lo = (i == 0) ? 0.0 : normal_pdf(lo);
            const double pdf_hi = (i == n - 1) ? 0.0 : normal_pdf(hi);
            const double cdf_lo = (i == 0) ? 0.0 : normal_cdf(lo);
            const double cdf_hi = (i == n - 1) ? 1.0 : normal_cdf(hi);
            acc += knot_x[i] * a * (pdf_lo - pdf_hi) - knot_g[i] * (cdf_hi - cdf_lo);
        }
        return acc;
    }

    double mean_d2(double a) const {
        if (a == 0.0) {
            for (double b : breaks)
                if (b == 0.0)
                    throw NumericError("tabulated cost curvature: point mass at 0, a=0 undefined");
            return 0.0;
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < breaks.size(); ++i)
            acc += (knot_x[i + 1] - knot_x[i]) * normal_pdf(breaks[i] / a) / a;
        return acc;
    }

    double mean_d1_sq(double a) const {
        if (a == 0.0) {
            const double s = d1(0.0);
            return s * s;
        }
        double acc = 0.0;
        const std::size_t n = knot_x.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double cdf_lo = (i == 0) ? 0.0 : normal_cdf(breaks[i - 1] / a);
            const double cdf_hi = (i == n - 1) ? 1.0 : normal_cdf(breaks[i] / a);
            acc += knot_x[i] * knot_x[i] * (cdf_hi - cdf_lo);
        }
        return acc;
    }

    double mean_id_d1(double a) const {
        if (a == 0.0) return 0.0;
        double acc = 0.0;
        const std::size_t n = knot_x.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double pdf_lo = (i == 0) ? 0.0 : normal_pdf(breaks[i - 1] / a);
            const double pdf_hi = (i == n - 1) ? 0.0 : normal_pdf(breaks[i] / a);
            acc += knot_x[i] * a * (pdf_lo - pdf_hi);
        }
        return acc;
    }
};

}  // namespace detail

// Transaction cost function c, the convex conjugate of a book shape.
// Exposes pointwise values/derivatives and exact Gaussian moments
// E[c(aZ)], E[c''(aZ)], E[c'(aZ)^2], E[aZ c'(aZ)] used by the wealth and
// impact formulas.
class CostFunction {
  public:
    double operator()(double l) const { return eval(l); }

    double eval(double l) const {
        return std::visit([l](const auto& c) { return c.eval(l); }, impl_);
    }
    double d1(double l) const {
        return std::visit([l](const auto& c) { return c.d1(l); }, impl_);
    }
    double d2(double l) const {
        return std::visit([l](const auto& c) { return c.d2(l); }, impl_);
    }

    // All shipped shapes have compact support, so their conjugates are finite
    // on the whole line.
    double domain_bound() const { return kInf; }

    bool is_even() const { return even_; }

    // E[c(aZ)]
    double gaussian_mean(double a) const {
        check_sd(a);
        return std::visit([a](const auto& c) { return c.mean(a); }, impl_);
    }
    // E[c''(aZ)], weak derivative: kinks of c' contribute jump * density.
    double gaussian_mean_curvature(double a) const {
        check_sd(a);
        return std::visit([a](const auto& c) { return c.mean_d2(a); }, impl_);
    }
    // E[c'(aZ)^2]
    double gaussian_mean_slope_sq(double a) const {
        check_sd(a);
        return std::visit([a](const auto& c) { return c.mean_d1_sq(a); }, impl_);
    }
    // E[aZ c'(aZ)]
    double gaussian_mean_id_slope(double a) const {
        check_sd(a);
        return std::visit([a](const auto& c) { return c.mean_id_d1(a); }, impl_);
    }

    // Trade-clock rescaling: the conjugate of x -> gamma(sqrt(N) x)/N.
    double scaled_eval(double l, double scale) const {
        return eval(std::sqrt(scale) * l) / scale;
    }
    double scaled_d1(double l, double scale) const {
        const double r = std::sqrt(scale);
        return d1(r * l) / r;
    }

  private:
    friend CostFunction legendre_transform(const ShapeSpec& shape);

    static void check_sd(double a) {
        if (!(a >= 0.0)) throw DomainError("cost Gaussian moment: standard deviation must be >= 0");
    }

    std::variant<detail::FlatCost, detail::WallCost, detail::TabulatedCost> impl_;
    bool even_ = true;
};

// c(l) = sup_x (l x - gamma(x)). Closed form for flat and wall books,
// one-pass slope conjugation for tabulated ones.
inline CostFunction legendre_transform(const ShapeSpec& shape) {
    CostFunction cost;
    switch (shape.variant()) {
        case ShapeSpec::Variant::Flat:
            cost.impl_ = detail::FlatCost{shape.density()};
            cost.even_ = true;
            break;
        case ShapeSpec::Variant::HalfSpreadWall:
            cost.impl_ = detail::WallCost{shape.spread()};
            cost.even_ = true;
            break;
        case ShapeSpec::Variant::Tabulated: {
            detail::TabulatedCost tc;
            const auto& knots = shape.knots();
            // Merge collinear runs so that region slopes are strictly increasing.
            std::vector<double> xs{knots.front().first};
            std::vector<double> gs{knots.front().second};
            std::vector<double> slopes;
            for (std::size_t i = 1; i < knots.size(); ++i) {
                const double s = (knots[i].second - gs.back()) / (knots[i].first - xs.back());
                if (!slopes.empty() && std::abs(s - slopes.back()) <= 1e-14 * (1.0 + std::abs(s))) {
                    xs.back() = knots[i].first;  // extend the collinear segment
                    gs.back() = knots[i].second;
                    // recompute the merged slope against the previous knot
                    slopes.back() = (gs.back() - gs[gs.size() - 2]) / (xs.back() - xs[xs.size() - 2]);
                    continue;
                }
                slopes.push_back(s);
                xs.push_back(knots[i].first);
                gs.push_back(knots[i].second);
            }
            tc.knot_x = std::move(xs);
            tc.knot_g = std::move(gs);
            tc.breaks = std::move(slopes);
            tc.even = shape.is_even();
            cost.even_ = tc.even;
            cost.impl_ = std::move(tc);
            break;
        }
    }
    return cost;
}

// Numeric conjugate of a cost function: sup_l (x l - c(l)), located by
// bisection on the nondecreasing marginal cost. Returns +inf when the
// marginal cost saturates below x (x outside the book support).
inline double conjugate_of_cost(const CostFunction& cost, double x) {
    double lo = -1.0, hi = 1.0;
    int guard = 0;
    while (cost.d1(lo) > x && guard++ < 120) lo *= 2.0;
    if (cost.d1(lo) > x) return kInf;
    guard = 0;
    while (cost.d1(hi) < x && guard++ < 120) hi *= 2.0;
    if (cost.d1(hi) < x) return kInf;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi) + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cost.d1(mid) < x)
            lo = mid;
        else
            hi = mid;
    }
    const double l = 0.5 * (lo + hi);
    return x * l - cost.eval(l);
}

// Fenchel-Moreau self test: sup over a test grid of |gamma - (c)^*|.
// Zero (to numerics) for every valid convex shape.
inline double biconjugate_check(const ShapeSpec& shape, std::size_t n_points = 81) {
    const CostFunction cost = legendre_transform(shape);
    std::vector<double> grid;
    switch (shape.variant()) {
        case ShapeSpec::Variant::Flat: {
            for (std::size_t i = 0; i < n_points; ++i)
                grid.push_back(-10.0 + 20.0 * static_cast<double>(i) /
                                           static_cast<double>(n_points - 1));
            break;
        }
        case ShapeSpec::Variant::HalfSpreadWall: {
            const double b = 0.98 * shape.support_bound();
            for (std::size_t i = 0; i < n_points; ++i)
                grid.push_back(-b + 2.0 * b * static_cast<double>(i) /
                                        static_cast<double>(n_points - 1));
            break;
        }
        case ShapeSpec::Variant::Tabulated:
            for (const auto& [x, g] : shape.knots()) grid.push_back(x);
            break;
    }
    double worst = 0.0;
    for (double x : grid) {
        const double back = conjugate_of_cost(cost, x);
        const double direct = shape.value(x);
        if (std::isinf(back) && std::isinf(direct)) continue;
        worst = std::max(worst, std::abs(back - direct));
    }
    return worst;
}

// g(l) = sign(l) E[c(|l| Z)]: signed expected transaction-cost rate of an
// inventory with (signed) volatility l. g(0) = 0 by the sign(0) = 0 convention.
inline double g_function(const CostFunction& cost, double l) {
    if (l == 0.0) return 0.0;
    const double phi = cost.gaussian_mean(std::abs(l));
    return l > 0.0 ? phi : -phi;
}

// Structural price-impact book: shape plus price-recovery parameter.
// recovery in (0,1] is the modelled range; larger values are admitted for
// the manipulation analysis and flagged by warnings().
struct ImpactBookModel {
    ShapeSpec shape;
    double recovery = 1.0;  // lambda

    ImpactBookModel(ShapeSpec shape_, double recovery_)
        : shape(std::move(shape_)), recovery(recovery_) {
        if (!(recovery > 0.0)) throw ValidationError("impact book: recovery must be > 0");
    }

    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (recovery > 1.0)
            w.push_back("recovery parameter above 1: outside the modelled range (0,1], "
                        "admitted for round-trip analysis only");
        return w;
    }
};

}  // namespace lobkit
