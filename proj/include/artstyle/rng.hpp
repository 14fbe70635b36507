#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace artstyle::rng {

// mt19937_64 has a standardized output sequence, but the standard
// distributions layered on top of it do not. Everything here derives its
// values from raw engine output only, so a seed gives the same stream on
// every platform and standard library.

using Engine = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& g, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(g);
}

// Standard normal via Box-Muller. Draws two uniforms per value; the first
// is shifted away from zero so the log stays finite.
inline double normal(Engine& g) {
  const double u1 = (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform_unit(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t below(Engine& g, std::uint64_t bound) {
  const std::uint64_t rem = std::numeric_limits<std::uint64_t>::max() % bound;
  const std::uint64_t cutoff = std::numeric_limits<std::uint64_t>::max() - rem;
  for (;;) {
    const std::uint64_t r = g();
    if (r < cutoff) return r % bound;
  }
}

// Fisher-Yates with the portable draw above (std::shuffle is
// implementation-defined and would break cross-platform determinism).
template <typename T>
void shuffle(std::vector<T>& v, Engine& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[below(g, i)]);
  }
}

}  // namespace artstyle::rng
