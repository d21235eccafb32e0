#pragma once

#include "ngmeet/noise.hpp"
#include "ngmeet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace ngmeet::test {

inline HsiCube random_cube(CubeDims dims, std::uint64_t seed, double scale = 1.0) {
  GaussianSource rng(seed);
  HsiCube cube(dims);
  for (double& v : cube.data()) v = scale * rng();
  return cube;
}

inline Mat random_mat(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  GaussianSource rng(seed);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng();
  return m;
}

/// Exactly rank-`rank` cube: random spatial maps times random spectra.
inline HsiCube random_low_rank(CubeDims dims, std::size_t rank, std::uint64_t seed) {
  const Mat maps = random_mat(static_cast<Eigen::Index>(dims.pixels()),
                              static_cast<Eigen::Index>(rank), seed);
  const Mat spectra = random_mat(static_cast<Eigen::Index>(dims.bands),
                                 static_cast<Eigen::Index>(rank), seed + 1000);
  HsiCube cube(dims);
  cube.pixels_by_bands() = 50.0 * maps * spectra.transpose();
  return cube;
}

inline double rel_diff(const HsiCube& a, const HsiCube& b) {
  return std::sqrt(frob_norm_sq(difference(a, b)) / std::max(frob_norm_sq(b), 1e-300));
}

}  // namespace ngmeet::test

namespace ngmeet::test {

/// 1/2 ||Y - (Y x_3 A^T) x_3 A||_F^2, the objective attained by basis A with
/// its optimal reduced image.
inline double projection_objective(const HsiCube& y, const Mat& a) {
  const HsiCube fit = mode3_product(mode3_product(y, a.transpose()), a);
  return 0.5 * frob_norm_sq(difference(y, fit));
}

}  // namespace ngmeet::test
