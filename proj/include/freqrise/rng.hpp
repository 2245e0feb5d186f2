#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace freqrise {

// Counter-based randomness. Every random quantity in the library is a pure
// function of (seed, purpose tag, counters), so any element can be
// regenerated alone and parallel workers reproduce the sequential result.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t value) noexcept {
  return splitmix64(key ^ splitmix64(value));
}

constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept {
  return hash_combine(hash_combine(key, a), b);
}

// FNV-1a over the tag so purpose keys are stable across builds.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Subkey of a global seed for one purpose ("gen-data", "train", ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) noexcept {
  return hash_combine(splitmix64(seed), tag_hash(purpose));
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Stream engine for sequential draws keyed by (seed, counter).
inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t counter) {
  return std::mt19937_64(hash_combine(seed, counter));
}

}  // namespace freqrise
