#pragma once

#include <cstdint>
#include <random>

namespace aeaug {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; spreads nearby seeds across the state space.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent generator for a (seed, stream) pair. Each consumer of
/// randomness uses its own stream so adding draws in one place never shifts
/// another.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed ^ mix_seed(stream)));
}

namespace streams {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t subsample = 2;
inline constexpr std::uint64_t init = 3;
inline constexpr std::uint64_t shuffle = 4;
inline constexpr std::uint64_t smote = 5;
inline constexpr std::uint64_t adasyn = 6;
inline constexpr std::uint64_t noise = 7;
inline constexpr std::uint64_t isf = 8;
inline constexpr std::uint64_t synth = 9;
}  // namespace streams

}  // namespace aeaug
