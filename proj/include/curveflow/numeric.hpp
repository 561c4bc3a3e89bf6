#pragma once

#include <cmath>
#include <cstdint>

namespace curveflow {

// pow with fast paths for the exponents that dominate flow runs.
// x must be > 0 for non-integer p.
inline double powr(double x, double p) {
    if (p == 0.0) return 1.0;
    if (p == 1.0) return x;
    if (p == 2.0) return x * x;
    if (p == -1.0) return 1.0 / x;
    if (p == 0.5) return std::sqrt(x);
    if (p == -0.5) return 1.0 / std::sqrt(x);
    if (p == -2.0) return 1.0 / (x * x);
    if (p == 1.5) return x * std::sqrt(x);
    return std::pow(x, p);
}

// Deterministic 64-bit generator (splitmix64). Used everywhere randomness is
// needed so that a seed reproduces bit-identical streams on any platform.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

}  // namespace curveflow
