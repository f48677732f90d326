#pragma once

#include <stdexcept>
#include <string>

namespace lobkit {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid model/config inputs detected before any computation runs.
struct ValidationError : Error {
    using Error::Error;
};

// An evaluation was requested outside a function's domain
// (e.g. book shape queried beyond its finite support).
struct DomainError : Error {
    using Error::Error;
};

// A coefficient or integrand produced a non-finite value.
struct NumericError : Error {
    using Error::Error;
};

// Inputs whose shapes/grids do not line up.
struct ShapeError : Error {
    using Error::Error;
};

// The price/inventory pair violates the sign constraint on d[p,L].
struct ConsistencyError : Error {
    using Error::Error;
};

// A run-time configuration problem (CFL step too large, bad experiment name, ...).
struct ConfigError : Error {
    using Error::Error;
};

// The pricing PDE lost its parabolicity margin.
struct IllPosedError : Error {
    using Error::Error;
};

// Requested feature exists in the model family but is not computable here.
struct UnsupportedError : Error {
    using Error::Error;
};

// A bracketed 1-d search failed to enclose its optimum.
struct BracketError : Error {
    using Error::Error;
};

}  // namespace lobkit
