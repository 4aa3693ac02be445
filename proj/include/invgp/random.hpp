#pragma once

// Seeded random streams. Each (seed, stream) pair owns an independent engine,
// so parallel work split by stream index is independent of thread count.

#include <cstdint>
#include <numbers>
#include <random>

#include "numeric.hpp"

namespace invgp {

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(sq);
}

/// Unit-power circular complex Gaussian.
inline cplx circular_gaussian(std::mt19937_64& rng, std::normal_distribution<double>& nd) {
  const double a = nd(rng), b = nd(rng);
  return {a * std::numbers::sqrt2 * 0.5, b * std::numbers::sqrt2 * 0.5};
}

}  // namespace invgp
