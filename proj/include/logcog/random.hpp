#pragma once

#include <cstdint>
#include <random>

namespace logcog {

// The standard distributions are implementation-defined, so sampling that
// must be reproducible across toolchains goes through these helpers instead.

/// Uniform double in [0, 1) with 53 bits of randomness.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound). `bound` must be non-zero.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = rng();
    while (x >= limit) {
        x = rng();
    }
    return x % bound;
}

} // namespace logcog
