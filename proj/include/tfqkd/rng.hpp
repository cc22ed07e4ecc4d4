#pragma once

#include <cstdint>

namespace tfqkd {

/// splitmix64 step; used for seeding and for deriving independent streams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derive a child seed from (seed, index). Streams for distinct indices are
/// statistically independent, which is what block-parallel simulation needs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// xoshiro256++ with Box-Muller normals. Hand-rolled so that results are
/// bit-identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform();

  /// Standard normal deviate.
  double normal();

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace tfqkd
