#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace lagrelax {

/// Seeded generator with a fully specified algorithm: mt19937_64 bits,
/// 53-bit uniforms and Box-Muller normals, so streams match across platforms
/// (std::normal_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open();
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// +1 or -1 with equal probability.
  int sign();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace lagrelax
