#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace skillmem {

using Rng = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for a named purpose: splitmix64(master ^ fnv1a64(purpose)).
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose);

/// Indexed sub-seed, used to give agent `index` its own stream:
/// splitmix64(derive_seed(master, purpose) + index * 0x9E3779B97F4A7C15).
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index);

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling keeps it unbiased and
/// identical across standard libraries.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

inline bool bernoulli(Rng& rng, double p) {
    return uniform01(rng) < p;
}

}  // namespace skillmem
