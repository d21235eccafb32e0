#pragma once

// Dense third-order cube container and the mode-3 algebra used by the
// denoiser.
//
// Layout: band-sequential (BSQ), column-major within each band. The value at
// (row r, col c, band b) of an M x N x B cube lives at
//
//     data[b * M * N + c * M + r]
//
// so the mode-3 unfolding (B x MN, row b = band b scanned column-major over
// (row, col)) is exactly the transpose of the buffer viewed as a column-major
// MN x B matrix. No copies are needed to unfold.

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace ngmeet {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct CubeDims {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t bands = 0;

  std::size_t pixels() const { return rows * cols; }
  std::size_t size() const { return rows * cols * bands; }
  friend bool operator==(const CubeDims&, const CubeDims&) = default;
};

class HsiCube {
 public:
  static constexpr double kDefaultScale = 255.0;

  HsiCube() = default;
  /// Zero-filled cube. Throws on any zero dimension.
  explicit HsiCube(CubeDims dims, double value_scale = kDefaultScale);
  /// Takes ownership of `data`, which must hold dims.size() values in BSQ order.
  HsiCube(CubeDims dims, std::vector<double> data, double value_scale = kDefaultScale);

  const CubeDims& dims() const { return dims_; }
  std::size_t rows() const { return dims_.rows; }
  std::size_t cols() const { return dims_.cols; }
  std::size_t bands() const { return dims_.bands; }
  std::size_t size() const { return data_.size(); }

  /// Nominal intensity range upper bound (peak for PSNR/SSIM).
  double value_scale() const { return value_scale_; }
  void set_value_scale(double s) { value_scale_ = s; }

  std::size_t index(std::size_t r, std::size_t c, std::size_t b) const {
    return (b * dims_.cols + c) * dims_.rows + r;
  }
  double& operator()(std::size_t r, std::size_t c, std::size_t b) { return data_[index(r, c, b)]; }
  const double& operator()(std::size_t r, std::size_t c, std::size_t b) const { return data_[index(r, c, b)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  /// Band b as an M x N column-major view.
  Eigen::Map<const Mat> band(std::size_t b) const;
  Eigen::Map<Mat> band(std::size_t b);

  /// The buffer as a column-major MN x B matrix (the transpose of unfold3).
  Eigen::Map<const Mat> pixels_by_bands() const;
  Eigen::Map<Mat> pixels_by_bands();

  bool all_finite() const;

 private:
  CubeDims dims_{};
  std::vector<double> data_;
  double value_scale_ = kDefaultScale;
};

/// Mode-3 unfolding: B x (M*N), row b is band b in column-major pixel order.
Mat unfold3(const HsiCube& cube);

/// Inverse of unfold3. `mat` must be dims.bands x dims.pixels().
HsiCube fold3(const Mat& mat, CubeDims dims);

/// cube x_3 P = fold3(P * unfold3(cube)); the result has P.rows() bands.
HsiCube mode3_product(const HsiCube& cube, const Mat& p);

double frob_norm_sq(const HsiCube& cube);

/// Elementwise a - b; dims must match.
HsiCube difference(const HsiCube& a, const HsiCube& b);

/// First `bands` bands of a cube.
HsiCube truncate_bands(const HsiCube& cube, std::size_t bands);

/// Keep only the listed bands, in the given order.
HsiCube select_bands(const HsiCube& cube, std::span<const std::size_t> keep);

}  // namespace ngmeet
