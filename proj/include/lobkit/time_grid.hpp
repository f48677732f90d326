#pragma once

#include <cstddef>

#include "lobkit/errors.hpp"

namespace lobkit {

// Uniform grid t_k = k*T/N, k = 0..N.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 1;

    TimeGrid() = default;
    TimeGrid(double horizon_, std::size_t steps_) : horizon(horizon_), steps(steps_) {
        if (!(horizon > 0.0)) throw ValidationError("TimeGrid: horizon must be positive");
        if (steps < 1) throw ValidationError("TimeGrid: need at least one step");
    }

    double dt() const { return horizon / static_cast<double>(steps); }
    std::size_t nodes() const { return steps + 1; }
    // k*T/N rather than k*dt so that node(N) == horizon exactly.
    double node(std::size_t k) const {
        return static_cast<double>(k) * horizon / static_cast<double>(steps);
    }

    bool operator==(const TimeGrid& other) const {
        return horizon == other.horizon && steps == other.steps;
    }
};

}  // namespace lobkit
