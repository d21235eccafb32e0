#include "ngmeet/tensor.hpp"

#include "ngmeet/error.hpp"

#include <cmath>
#include <string>

namespace ngmeet {

namespace {

void check_dims(const CubeDims& dims) {
  if (dims.rows == 0 || dims.cols == 0 || dims.bands == 0) {
    throw usage_error("cube dimensions must be positive, got " + std::to_string(dims.rows) + "x" +
                      std::to_string(dims.cols) + "x" + std::to_string(dims.bands));
  }
}

}  // namespace

HsiCube::HsiCube(CubeDims dims, double value_scale)
    : dims_(dims), value_scale_(value_scale) {
  check_dims(dims_);
  data_.assign(dims_.size(), 0.0);
}

HsiCube::HsiCube(CubeDims dims, std::vector<double> data, double value_scale)
    : dims_(dims), data_(std::move(data)), value_scale_(value_scale) {
  check_dims(dims_);
  if (data_.size() != dims_.size()) {
    throw usage_error("cube buffer holds " + std::to_string(data_.size()) + " values, expected " +
                      std::to_string(dims_.size()));
  }
}

Eigen::Map<const Mat> HsiCube::band(std::size_t b) const {
  return {data_.data() + b * dims_.pixels(), static_cast<Eigen::Index>(dims_.rows),
          static_cast<Eigen::Index>(dims_.cols)};
}

Eigen::Map<Mat> HsiCube::band(std::size_t b) {
  return {data_.data() + b * dims_.pixels(), static_cast<Eigen::Index>(dims_.rows),
          static_cast<Eigen::Index>(dims_.cols)};
}

Eigen::Map<const Mat> HsiCube::pixels_by_bands() const {
  return {data_.data(), static_cast<Eigen::Index>(dims_.pixels()),
          static_cast<Eigen::Index>(dims_.bands)};
}

Eigen::Map<Mat> HsiCube::pixels_by_bands() {
  return {data_.data(), static_cast<Eigen::Index>(dims_.pixels()),
          static_cast<Eigen::Index>(dims_.bands)};
}

bool HsiCube::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Mat unfold3(const HsiCube& cube) { return cube.pixels_by_bands().transpose(); }

HsiCube fold3(const Mat& mat, CubeDims dims) {
  if (static_cast<std::size_t>(mat.rows()) != dims.bands ||
      static_cast<std::size_t>(mat.cols()) != dims.pixels()) {
    throw usage_error("fold3: matrix is " + std::to_string(mat.rows()) + "x" +
                      std::to_string(mat.cols()) + ", expected " + std::to_string(dims.bands) +
                      "x" + std::to_string(dims.pixels()));
  }
  HsiCube out(dims);
  out.pixels_by_bands() = mat.transpose();
  return out;
}

HsiCube mode3_product(const HsiCube& cube, const Mat& p) {
  if (static_cast<std::size_t>(p.cols()) != cube.bands()) {
    throw usage_error("mode3_product: factor has " + std::to_string(p.cols()) +
                      " columns, cube has " + std::to_string(cube.bands()) + " bands");
  }
  HsiCube out({cube.rows(), cube.cols(), static_cast<std::size_t>(p.rows())}, cube.value_scale());
  // (P X3)^T = X3^T P^T, and X3^T is the buffer itself.
  out.pixels_by_bands().noalias() = cube.pixels_by_bands() * p.transpose();
  return out;
}

double frob_norm_sq(const HsiCube& cube) {
  return Eigen::Map<const Vec>(cube.data().data(), static_cast<Eigen::Index>(cube.size()))
      .squaredNorm();
}

HsiCube difference(const HsiCube& a, const HsiCube& b) {
  if (a.dims() != b.dims()) throw usage_error("difference: cube dimensions differ");
  HsiCube out(a.dims(), a.value_scale());
  auto da = a.data();
  auto db = b.data();
  auto dout = out.data();
  for (std::size_t i = 0; i < dout.size(); ++i) dout[i] = da[i] - db[i];
  return out;
}

HsiCube truncate_bands(const HsiCube& cube, std::size_t bands) {
  if (bands == 0 || bands > cube.bands()) {
    throw usage_error("cannot keep " + std::to_string(bands) + " of " +
                      std::to_string(cube.bands()) + " bands");
  }
  const auto n = bands * cube.dims().pixels();
  std::vector<double> data(cube.data().begin(), cube.data().begin() + static_cast<std::ptrdiff_t>(n));
  return HsiCube({cube.rows(), cube.cols(), bands}, std::move(data), cube.value_scale());
}

HsiCube select_bands(const HsiCube& cube, std::span<const std::size_t> keep) {
  if (keep.empty()) throw usage_error("band selection is empty");
  HsiCube out({cube.rows(), cube.cols(), keep.size()}, cube.value_scale());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] >= cube.bands()) {
      throw usage_error("band index " + std::to_string(keep[i]) + " out of range");
    }
    out.band(i) = cube.band(keep[i]);
  }
  return out;
}

}  // namespace ngmeet
