#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace infernet {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; mixes a base seed with stream identifiers so that
// every (seed, trial, ...) tuple gets an independent generator.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> streams) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (std::uint64_t s : streams) h = mix(h ^ s);
  return h;
}

// Uniform integer in [0, n). Rejection sampling keeps the result identical
// across standard library implementations.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

}  // namespace infernet
