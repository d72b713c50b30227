#pragma once

// Portable pseudo-random streams. The standard library's distributions are
// implementation-defined, so everything that feeds a reproducible output is
// drawn through this header instead.

#include "reds/types.hpp"

#include <array>
#include <cstdint>

namespace reds {

/// SplitMix64 finalizer; also used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Combines a master seed with stream coordinates (e.g. seed index, path index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// xoshiro256** generator with Box-Muller normals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  double normal();
  Vector normal_vector(Index n);
  /// rows x cols matrix of i.i.d. N(0,1) * scale, filled row-major.
  Matrix normal_matrix(Index rows, Index cols, double scale = 1.0);

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace reds
