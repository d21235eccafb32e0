#pragma once

// Global spectral low-rank step: the rank-K spectral basis of a cube, the
// HySime-style initial estimates of K and per-band noise, and the
// per-iteration noise re-estimation.

#include "ngmeet/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ngmeet {

struct SubspaceModel {
  /// B x K, orthonormal columns, ordered by decreasing singular value.
  Mat basis;
  /// Input projected on the basis, M x N x K (Y x_3 A^T).
  HsiCube reduced;
  /// The K leading singular values of unfold3(Y).
  Vec singular_values;

  std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
  /// reduced x_3 A, the best rank-K approximation of the fitted cube.
  HsiCube reconstruct() const { return mode3_product(reduced, basis); }
};

/// Top-K left singular subspace of unfold3(y). Uses the B x B Gram matrix
/// when the cube has at least as many pixels as bands, a thin SVD otherwise.
/// Each basis column is sign-normalized so its largest-magnitude entry is
/// positive.
SubspaceModel spectral_decompose(const HsiCube& y, std::size_t k);

/// Per-band noise standard deviation by multiple regression of each band on
/// all the others. Residuals below the numerical floor are reported as 0.
std::vector<double> estimate_band_noise(const HsiCube& y);

struct SubspaceDimEstimate {
  std::size_t k = 1;
  /// Set when the correlation matrix carried no usable signal (k forced to 1).
  bool degenerate = false;
};

/// Signal subspace dimension: number of eigen-directions of the signal
/// correlation estimate whose projected data power exceeds twice the
/// projected noise power.
SubspaceDimEstimate estimate_subspace_dim(const HsiCube& y, std::span<const double> band_sigma);

struct NoiseModel {
  double sigma0_sq = 0.0;
  std::vector<double> per_band_sigma;
  double sigma_i = 0.0;
  double gamma = 0.5;

  double sigma0() const;
};

/// gamma * sqrt(|sigma0^2 - mean((yi - y)^2)|), mean over every voxel.
double reestimate_noise(const HsiCube& yi, const HsiCube& y, const NoiseModel& noise);

/// Median of the per-band estimates; used as sigma0 when none is supplied.
double median_sigma(std::span<const double> band_sigma);

}  // namespace ngmeet
