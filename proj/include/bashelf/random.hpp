#pragma once

// Seeded random streams for shot-level Monte Carlo.
//
// Every shot owns an independent engine whose seed is a pure function of
// (master_seed, point_index, shot_index). Results therefore do not depend on
// how shots are scheduled across workers.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace bashelf {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed splitting rule:
//   s0 = splitmix64(master)
//   s1 = splitmix64(s0 ^ splitmix64(point + 1))
//   s  = splitmix64(s1 ^ splitmix64(~shot))
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point,
                                    std::uint64_t shot) noexcept {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ splitmix64(point + 1));
  return splitmix64(s ^ splitmix64(~shot));
}

inline Rng shot_rng(std::uint64_t master, std::uint64_t point, std::uint64_t shot) {
  return Rng{derive_seed(master, point, shot)};
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

// Inverse-CDF Poisson sampling: one uniform per draw, so the sample is a
// non-decreasing function of the mean for a fixed stream.
inline std::int64_t poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  if (mean > 500.0) {
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
  }
  const double u = uniform01(rng);
  double term = std::exp(-mean);
  double cdf = term;
  std::int64_t k = 0;
  while (u >= cdf) {
    ++k;
    term *= mean / static_cast<double>(k);
    cdf += term;
    if (term < std::numeric_limits<double>::min() && static_cast<double>(k) > mean) break;
  }
  return k;
}

// Exponential waiting time with the given lifetime, conditioned on falling
// inside [0, window].
inline double truncated_exponential(double lifetime, double window, Rng& rng) {
  const double u = uniform01(rng);
  const double p = -std::expm1(-window / lifetime);
  return -lifetime * std::log1p(-u * p);
}

}  // namespace bashelf
