#pragma once

#include <cstdint>
#include <string_view>

namespace logcog {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a. A non-zero seed is folded into the offset basis.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0) noexcept {
    std::uint64_t h = kFnvOffsetBasis ^ seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

/// SplitMix64 finalizer, used to derive well-mixed values from small integers.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace logcog
