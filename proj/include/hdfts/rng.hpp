#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hdfts {

// All randomness in the library flows through mt19937_64 plus the portable
// helpers below. std::normal_distribution and std::shuffle are
// implementation-defined, which would break bit-reproducibility of seeded
// runs across standard libraries, so we avoid them.

/// splitmix64 mix step; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic seed for stream (a, b, ...) derived from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) {
  return mix_seed(base ^ mix_seed(a));
}
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(base, a), b);
}

inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

/// Standard normal via Box-Muller (pairless form; one uniform pair per draw).
inline double standard_normal(std::mt19937_64& gen) {
  double u1 = uniform01(gen);
  while (u1 <= 0.0) u1 = uniform01(gen);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(gen, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace hdfts
