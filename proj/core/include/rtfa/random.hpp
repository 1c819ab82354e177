#pragma once

#include <cstdint>

namespace rtfa {

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of replication `rep` under master seed `seed`. This mapping is part
/// of the reproducibility contract and must not change between releases.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t rep) noexcept;

/// xoshiro256** engine with portable variate transforms, so simulated data
/// are bit-identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept;
  /// Uniform on the open interval (lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Standard normal (Marsaglia polar method).
  double normal() noexcept;
  /// Gamma(shape, 1) via Marsaglia–Tsang.
  double gamma(double shape) noexcept;
  /// Chi-square with `dof` degrees of freedom.
  double chi_square(double dof) noexcept;

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rtfa
