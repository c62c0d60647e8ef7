#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ssre {

using Rng = std::mt19937_64;

// Child seed derivation used by every replicate-parallel job:
//
//   h0   = fnv1a64(tag)
//   seed = splitmix64(splitmix64(master ^ h0) + index * 0x9E3779B97F4A7C15)
//
// The rule is stable across platforms so that any single replicate can be
// re-run in isolation from (master, tag, index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

// Uniform double in [0, 1) with 53 random bits; independent of the
// standard library's distribution implementation.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Exp(1) variate by inversion; never returns +inf.
double standard_exponential(Rng& rng);

}  // namespace ssre
