#pragma once

#include <bit>
#include <cstdint>
#include <random>

#include "satcs/types.hpp"

namespace satcs {

/// The one generator used everywhere. Seeded runs are reproducible on a given
/// standard library.
using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive an independent stream seed from a parent seed and a tag.
constexpr Seed derive_seed(Seed parent, std::uint64_t tag) {
  return mix64(mix64(parent) ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

inline Seed derive_seed(Seed parent, double value, std::uint64_t tag) {
  return derive_seed(derive_seed(parent, std::bit_cast<std::uint64_t>(value)), tag);
}

}  // namespace satcs
