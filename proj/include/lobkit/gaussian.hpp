#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "lobkit/errors.hpp"

namespace lobkit {

inline constexpr double kSqrt2Pi = 2.5066282746310005024;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Gauss-Hermite rule in standard-normal units: E[g(Z)] ~= sum w_i g(x_i),
// with the weights summing to 1. Exact for polynomials of degree <= 2Q-1.
class GaussHermite {
  public:
    explicit GaussHermite(std::size_t order) : order_(order) {
        if (order < 1) throw ValidationError("GaussHermite: order must be >= 1");
        build();
    }

    std::size_t order() const { return order_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    template <typename G>
    double expect(G&& g) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < order_; ++i) {
            const double v = g(nodes_[i]);
            if (!std::isfinite(v))
                throw NumericError("gaussian expectation: integrand is not finite at node " +
                                   std::to_string(nodes_[i]));
            acc += weights_[i] * v;
        }
        return acc;
    }

  private:
    // Orthonormal Hermite value at x (degree n) and the previous degree,
    // computed with the normalized three-term recurrence.
    static void hermite_pair(std::size_t n, double x, double& hn, double& hn1) {
        double prev = 0.0, cur = 1.0;  // degrees -1 and 0
        for (std::size_t k = 0; k < n; ++k) {
            const double next =
                (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(static_cast<double>(k + 1));
            prev = cur;
            cur = next;
        }
        hn = cur;
        hn1 = prev;
    }

    // Sturm count: number of eigenvalues of the Jacobi matrix below x.
    std::size_t sturm_count(double x) const {
        const std::size_t n = order_;
        std::size_t count = 0;
        double d = -x;
        if (d < 0.0) ++count;
        for (std::size_t k = 1; k < n; ++k) {
            const double beta2 = static_cast<double>(k);  // off-diagonal^2
            double denom = d;
            if (std::abs(denom) < 1e-300) denom = (denom < 0.0 ? -1e-300 : 1e-300);
            d = -x - beta2 / denom;
            if (d < 0.0) ++count;
        }
        return count;
    }

    void build() {
        const std::size_t n = order_;
        nodes_.resize(n);
        weights_.resize(n);

        // Gershgorin bound on the spectrum of the (0, sqrt(k)) Jacobi matrix.
        const double bound = 2.0 * std::sqrt(static_cast<double>(n)) + 1.0;

        for (std::size_t i = 0; i < n; ++i) {
            double lo = -bound, hi = bound;
            // Bisection on the Sturm count isolates the i-th eigenvalue.
            for (int it = 0; it < 200 && hi - lo > 1e-15 * bound; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (sturm_count(mid) > i)
                    hi = mid;
                else
                    lo = mid;
            }
            double x = 0.5 * (lo + hi);
            // Two Newton polish steps: h_n'(x) = sqrt(n) h_{n-1}(x).
            for (int it = 0; it < 2; ++it) {
                double hn, hn1;
                hermite_pair(n, x, hn, hn1);
                const double deriv = std::sqrt(static_cast<double>(n)) * hn1;
                if (deriv != 0.0) x -= hn / deriv;
            }
            nodes_[i] = x;
        }

        // Christoffel weights: w_i = 1 / sum_{k<n} h_k(x_i)^2.
        for (std::size_t i = 0; i < n; ++i) {
            const double x = nodes_[i];
            double prev = 0.0, cur = 1.0, sum = 1.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const double next =
                    (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(static_cast<double>(k + 1));
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            weights_[i] = 1.0 / sum;
        }

        // Enforce exact symmetry of the rule (the matrix is symmetric around 0).
        for (std::size_t i = 0; i < n / 2; ++i) {
            const std::size_t j = n - 1 - i;
            const double x = 0.5 * (nodes_[j] - nodes_[i]);
            nodes_[i] = -x;
            nodes_[j] = x;
            const double w = 0.5 * (weights_[i] + weights_[j]);
            weights_[i] = weights_[j] = w;
        }
        if (n % 2 == 1) nodes_[n / 2] = 0.0;
    }

    std::size_t order_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

inline constexpr std::size_t kDefaultQuadratureOrder = 64;

inline const GaussHermite& gauss_hermite(std::size_t order = kDefaultQuadratureOrder) {
    static std::mutex mu;
    static std::map<std::size_t, GaussHermite> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, GaussHermite(order)).first;
    return it->second;
}

// The Gaussian expectation functional: E[g(a Z)] for a >= 0, Z standard normal.
// a == 0 short-circuits to g(0) exactly. Accuracy is quadrature-grade for
// smooth g; piecewise-linear transaction costs have closed forms in
// orderbook.hpp and should use those instead.
template <typename G>
double gaussian_expect(G&& g, double a, std::size_t order = kDefaultQuadratureOrder) {
    if (!(a >= 0.0)) throw DomainError("gaussian_expect: standard deviation must be >= 0");
    if (a == 0.0) {
        const double v = g(0.0);
        if (!std::isfinite(v)) throw NumericError("gaussian_expect: g(0) is not finite");
        return v;
    }
    const GaussHermite& rule = gauss_hermite(order);
    return rule.expect([&](double z) { return g(a * z); });
}

}  // namespace lobkit
