#pragma once

#include <cstdint>
#include <random>

namespace bftevo {

/// mt19937_64's output sequence is fixed by the standard; the distributions
/// in <random> are not, so uniform draws are converted here by hand.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by rejection, bound > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-stream seed from (master seed, cell index, replicate).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replicate = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ cell) ^ replicate);
}

}  // namespace bftevo
