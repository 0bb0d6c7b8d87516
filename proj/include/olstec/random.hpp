#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace olstec {

using Rng = std::mt19937_64;

/// Identifies which component of a run a derived seed feeds.
enum class SeedStream : std::uint64_t { generator = 1, mask = 2, tracker = 3 };

/// splitmix64 finalizer; decorrelates consecutive base seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, SeedStream stream) noexcept {
  return mix_seed(mix_seed(base) ^ static_cast<std::uint64_t>(stream));
}

inline void fill_standard_normal(std::span<double> out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(rng);
}

} // namespace olstec
