#pragma once

#include <cstdint>
#include <string_view>

namespace influxrank {

// Stable across platforms and runs, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named sub-seed: every stage draws from its own stream derived from the run seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  return splitmix64(seed ^ fnv1a64(label));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b);
}

}  // namespace influxrank
