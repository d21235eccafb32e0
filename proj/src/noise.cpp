#include "ngmeet/noise.hpp"

#include "ngmeet/error.hpp"

#include <Eigen/QR>

#include <cmath>

namespace ngmeet {

double GaussianSource::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianSource::operator()() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_ = v * f;
  has_cached_ = true;
  return u * f;
}

HsiCube add_gaussian_noise(const HsiCube& cube, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw usage_error("noise sigma must be non-negative");
  HsiCube out = cube;
  if (sigma == 0.0) return out;
  GaussianSource rng(seed);
  for (double& v : out.data()) v += sigma * rng();
  return out;
}

Mat random_orthonormal(std::size_t rows, std::size_t cols, GaussianSource& rng) {
  if (cols > rows) throw usage_error("cannot build more orthonormal columns than rows");
  Mat g(rows, cols);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng();
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace ngmeet
