#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace sgp {

using Rng = std::mt19937_64;

// SplitMix64 finaliser (Steele, Lea, Flood 2014). Full avalanche on 64 bits.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of replicate `replicate` under `master`:
///   mix(m, r) = splitmix64(m ^ splitmix64(r))
/// Depends only on (m, r), so replicates can be regenerated in isolation.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t replicate) noexcept {
  return splitmix64(master ^ splitmix64(replicate));
}

/// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
/// Bit-for-bit identical across standard libraries, unlike
/// std::uniform_real_distribution.
inline double uniform_open01(Rng& rng) noexcept {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

/// Uniform index in {0, ..., n-1}.
inline std::size_t uniform_index(Rng& rng, std::size_t n) noexcept {
  auto k = static_cast<std::size_t>(uniform_open01(rng) * static_cast<double>(n));
  return k < n ? k : n - 1;
}

} // namespace sgp
