#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Shared statistics helpers for the test suites.
namespace testutil {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe out;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) out.mean += x;
    out.mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - out.mean) * (x - out.mean);
    var /= (n - 1.0);
    out.sd = std::sqrt(var);
    out.se = out.sd / std::sqrt(n);
    return out;
}

inline double rms(const std::vector<double>& xs) {
    double acc = 0.0;
    for (double x : xs) acc += x * x;
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace testutil
