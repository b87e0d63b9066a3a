#pragma once

#include <cstdint>
#include <random>

namespace lensr {

/// Uniform integer in [0, n) from a 64-bit engine, stable across platforms.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);
/// Uniform in [0, 1) with 53 random bits.
double uniform_real(std::mt19937_64& rng);
/// Standard normal by Box-Muller (one draw per call).
double standard_normal(std::mt19937_64& rng);

/// Seed for stream `index` derived from `base` (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace lensr
