#pragma once

// Seeded RNG plumbing for the Monte Carlo parts (bootstrap, permutations,
// stake schedules, synthetic fixtures). The protocol's credentials never come
// from here; they come from prf_uniform.

#include <cmath>
#include <cstdint>
#include <random>

namespace cssp {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Sub-seed for replicate `index` of a stream seeded by `seed`.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL));
}

/// Uniform on the open interval (0, 1).
inline double open_unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exp_draw(std::mt19937_64& rng, double rate) { return -std::log(open_unit(rng)) / rate; }

}  // namespace cssp
