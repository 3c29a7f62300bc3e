#pragma once

#include <cmath>
#include <cstdint>

#include "roughwall/common.hpp"

namespace roughwall::rng {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash_combine(hash_combine(a, b), c);
}

/// Uniform in (0,1) from the top 53 bits; never returns 0.
constexpr double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal value attached to a (stream, index) pair. Counter-based, so a
/// field value depends only on its absolute lattice index and never on evaluation order.
inline double normal_at(std::uint64_t stream, std::int64_t index) {
  const std::uint64_t h = hash_combine(stream, static_cast<std::uint64_t>(index));
  const double u1 = to_unit(mix64(h));
  const double u2 = to_unit(mix64(h ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace roughwall::rng
