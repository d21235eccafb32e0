#pragma once

// Outer denoising loop: spectral decomposition, non-local denoising of the
// reduced image, back-projection, then iterative regularization of the input
// and growth of the subspace rank.

#include "ngmeet/nonlocal.hpp"
#include "ngmeet/subspace.hpp"
#include "ngmeet/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace ngmeet {

enum class RankUpdate {
  Cumulative,  ///< K <- K + delta * i after iteration i
  Affine,      ///< K_i = K0 + delta * i
};

struct DenoiseConfig {
  /// Initial subspace rank; estimated from the data when unset.
  std::optional<std::size_t> k0;
  std::size_t delta = 2;
  double lambda = 0.9;
  double gamma = 0.5;
  std::size_t iters = 5;
  PatchGeometry geom;
  WnnmParams wnnm;
  bool center_groups = false;
  RankUpdate rank_update = RankUpdate::Cumulative;
  /// Stop once ||X_i - X_{i-1}||_F / ||X_{i-1}||_F drops below this; 0 disables.
  double early_stop_tol = 0.0;
  /// Stage-B worker threads; 0 picks hardware concurrency.
  unsigned threads = 1;
  /// Seed for noise injection in experiments. The denoiser itself is deterministic.
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t k = 0;
  double sigma = 0.0;
  /// ||Y_i - X_i||_F
  double residual_norm = 0.0;
  std::optional<double> psnr;
  double stage_a_sec = 0.0;
  double stage_b_sec = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;

  double stage_a_sec() const;
  double stage_b_sec() const;
};

struct DenoiseResult {
  HsiCube denoised;
  IterationTrace trace;
  std::size_t initial_k = 0;
  /// True when the rank estimator fell back to K = 1.
  bool k_estimate_degenerate = false;
  NoiseModel noise;
};

/// lambda * xi + (1 - lambda) * y.
HsiCube iterate_regularize(const HsiCube& xi, const HsiCube& y, double lambda);

/// min(k + delta * i, bands): the rank after iteration i, given the rank used in it.
std::size_t update_K(std::size_t k, std::size_t delta, std::size_t i, std::size_t bands);

/// min(k0 + delta * i, bands).
std::size_t affine_K(std::size_t k0, std::size_t delta, std::size_t i, std::size_t bands);

/// Initial rank from the data: regression noise estimates, then the
/// eigen-comparison rank estimate.
SubspaceDimEstimate initial_rank(const HsiCube& y, std::vector<double>* band_sigma = nullptr);

/// Denoise `y` whose noise standard deviation is `sigma0`. When `clean` is
/// given, every trace record carries the PSNR against it.
DenoiseResult ngmeet_denoise(const HsiCube& y, double sigma0, const DenoiseConfig& cfg,
                             const HsiCube* clean = nullptr);

}  // namespace ngmeet
