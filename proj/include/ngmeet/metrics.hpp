#pragma once

#include "ngmeet/tensor.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace ngmeet {

/// PSNR of identical inputs.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) in dB; kInfinitePsnr when MSE is zero.
double psnr(const Eigen::Ref<const Mat>& ref, const Eigen::Ref<const Mat>& test,
            double peak = 255.0);

/// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5),
/// C1 = (0.01 peak)^2, C2 = (0.03 peak)^2. Both sides must be at least 11.
/// Negative means (anti-correlated structure) are reported as 0.
double ssim(const Eigen::Ref<const Mat>& ref, const Eigen::Ref<const Mat>& test,
            double peak = 255.0);

struct SamResult {
  double degrees = 0.0;
  /// Pixels skipped because one of the two spectra is zero.
  std::size_t skipped = 0;
};

/// Mean spectral angle in degrees over pixels with non-zero spectra.
SamResult sam(const HsiCube& ref, const HsiCube& test);

struct QualityReport {
  double mpsnr = 0.0;
  double mssim = 0.0;
  double sam_deg = 0.0;
  std::vector<double> per_band_psnr;
  std::vector<double> per_band_ssim;
  /// PSNR of the whole-cube MSE.
  double cube_psnr = 0.0;
  std::size_t sam_skipped = 0;
};

/// Mean over bands of per-band PSNR; infinite if any band is identical.
double mean_psnr(const HsiCube& ref, const HsiCube& test, double peak = 255.0);

QualityReport assess(const HsiCube& ref, const HsiCube& test, double peak = 255.0);

}  // namespace ngmeet
