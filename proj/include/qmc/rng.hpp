#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace qmc {

// One splitmix64 step. Small, well mixed, and stable across platforms;
// used for seed derivation only, never as the main generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derived seed for stream `index` of a base seed. Documented policy:
// replicate r of run seed s uses derive_seed(s, r), nested streams chain
// the calls. Keeps every replicate exactly reproducible.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t state = base ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
  return splitmix64(state);
}

// Uniform double in (0,1) from one engine draw: ((x >> 11) + 0.5) * 2^-53.
// The half-offset keeps both endpoints out of the range.
inline double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by rejection, no modulo bias.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// Fisher-Yates with an explicit draw procedure. std::shuffle is
// implementation-defined, which would break cross-platform determinism.
template <typename T>
void fisher_yates(std::span<T> values, std::mt19937_64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

inline std::vector<std::uint32_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  std::mt19937_64 rng(seed);
  fisher_yates(std::span<std::uint32_t>(perm), rng);
  return perm;
}

}  // namespace qmc
