#pragma once

#include <cstdint>
#include <random>

namespace fkflow {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

// Reproducible per-replicate stream: same (master, index) gives the same
// sequence within one build; distinct indices give statistically
// independent streams.
inline Rng seed_stream(std::uint64_t master_seed, std::uint64_t replicate_index) {
  std::uint64_t s = master_seed;
  std::uint64_t a = splitmix64(s);
  s ^= 0x94d049bb133111ebull * (replicate_index + 1);
  std::uint64_t b = splitmix64(s);
  std::uint64_t c = splitmix64(s);
  std::uint64_t d = splitmix64(s);
  std::seed_seq seq{
      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
      static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double exponential1(Rng& rng) {
  return std::exponential_distribution<double>(1.0)(rng);
}

}  // namespace fkflow
