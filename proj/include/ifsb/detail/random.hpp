#pragma once

#include <cstdint>
#include <random>

namespace ifsb::detail {

/// SplitMix64 finalizer; derives independent per-task seeds from a base seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform on [0,1) from the top 53 bits; identical across standard libraries,
/// unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0,1].
inline double uniform_open0(std::mt19937_64& rng) { return 1.0 - uniform01(rng); }

}  // namespace ifsb::detail
