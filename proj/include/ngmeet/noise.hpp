#pragma once

#include "ngmeet/tensor.hpp"

#include <cstdint>
#include <random>

namespace ngmeet {

/// Standard normal deviates from a seeded std::mt19937_64 through the polar
/// form of the Box-Muller transform. Both deviates of each accepted pair are
/// used, the second one cached. The sequence is fully determined by the seed
/// on every platform (std::normal_distribution is not).
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double operator()();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// cube + i.i.d. N(0, sigma^2), voxels visited in buffer order.
HsiCube add_gaussian_noise(const HsiCube& cube, double sigma, std::uint64_t seed);

/// B x K matrix with orthonormal columns (QR of a Gaussian matrix).
Mat random_orthonormal(std::size_t rows, std::size_t cols, GaussianSource& rng);

}  // namespace ngmeet
