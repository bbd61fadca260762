#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace netbench {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream derivation: a stream is named by the root seed and a
// path of counters (purpose, replicate, time index, cell, ...), so the draws
// a task sees never depend on which thread ran it or in what order.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t step : path) h = splitmix64(h ^ splitmix64(step + 0x632be59bd9b4e019ULL));
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(root, path));
}

// Stream purposes.
enum StreamTag : std::uint64_t {
  stream_cell = 1,
  stream_bootstrap = 2,
  stream_measurement = 3,
  stream_longitudinal_cell = 4,
  stream_longitudinal_measurement = 5,
  stream_replicate = 6,
  stream_regime_bootstrap = 7,
};

}  // namespace netbench
