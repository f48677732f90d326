#pragma once

#include <cmath>
#include <cstdint>

namespace lobkit {

// Counter-based random numbers: every variate is a pure function of
// (seed, stream, step, slot). Streams index Monte Carlo paths, steps index
// time, slots separate independent draws needed within one step (e.g. the
// orthogonal driver of a correlated pair). Nothing is stateful, so path
// batches can run on any number of threads and still reproduce bitwise.
namespace rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t step, std::uint64_t slot) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ (stream + kGamma));
    h = mix64(h ^ (step + kGamma));
    h = mix64(h ^ (slot + kGamma));
    return h;
}

// Uniform on (0,1]: never returns 0, so log() below is safe.
inline double uniform_pos(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t step, std::uint64_t slot) {
    return static_cast<double>((hash(seed, stream, step, slot) >> 11) + 1) * 0x1.0p-53;
}

// Uniform on [0,1).
inline double uniform(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t step, std::uint64_t slot) {
    return static_cast<double>(hash(seed, stream, step, slot) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller. Each (stream, step, slot) triple consumes
// two hash slots internally, kept disjoint by doubling the slot index.
inline double gaussian(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t step, std::uint64_t slot = 0) {
    const double u1 = uniform_pos(seed, stream, step, 2 * slot);
    const double u2 = uniform(seed, stream, step, 2 * slot + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace rng
}  // namespace lobkit
