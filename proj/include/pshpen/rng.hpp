#pragma once

#include <cstdint>
#include <random>

namespace pshpen {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent stream seed for replication/split workers. Deterministic in
/// (master, stream), so results do not depend on scheduling.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

inline double uniform01(Rng& rng) {
  // strictly inside (0, 1)
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u <= 0.0) u = std::numeric_limits<double>::min();
  return u;
}

}  // namespace pshpen
