#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stmlp::detail {

// Distribution helpers on top of mt19937_64. The standard <random>
// distributions have implementation-defined output sequences; these keep
// seeded runs reproducible across standard libraries.

/// Uniform double in [0, 1), 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, bound). Lemire multiply-shift, slight bias is
/// irrelevant at 64 bits for the bounds used here.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  return static_cast<std::uint64_t>(
      (static_cast<__uint128_t>(rng()) * bound) >> 64);
}

/// Standard normal via Box-Muller; one value per call, the pair's second
/// member is discarded so the stream position stays predictable.
inline double gaussian(std::mt19937_64& rng) {
  double u1 = 1.0 - uniform01(rng);  // (0, 1]
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace stmlp::detail
