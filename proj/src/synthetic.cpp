#include "ngmeet/synthetic.hpp"

#include "ngmeet/error.hpp"
#include "ngmeet/noise.hpp"

#include <cmath>

namespace ngmeet {

HsiCube make_low_rank_cube(CubeDims dims, std::size_t rank, std::uint64_t seed) {
  if (rank < 1 || rank > dims.bands || rank > dims.pixels()) {
    throw usage_error("synthetic rank must lie in [1, min(bands, pixels)]");
  }
  GaussianSource rng(seed);
  const auto m = static_cast<Eigen::Index>(dims.rows);
  const auto n = static_cast<Eigen::Index>(dims.cols);
  const auto b = static_cast<Eigen::Index>(dims.bands);
  const auto r = static_cast<Eigen::Index>(rank);

  Mat signatures(b, r);
  // Bumps spread across the spectrum keep the signatures well separated.
  for (Eigen::Index k = 0; k < r; ++k) {
    const double slot = 1.0 / static_cast<double>(r);
    const double center = (static_cast<double>(k) + 0.5 + 0.3 * (rng.uniform() - 0.5)) * slot;
    const double width = (0.35 + 0.2 * rng.uniform()) * slot;
    const double center2 = rng.uniform();
    const double width2 = 0.05 + 0.1 * rng.uniform();
    const double base = 0.05 * rng.uniform();
    for (Eigen::Index i = 0; i < b; ++i) {
      const double t = b > 1 ? static_cast<double>(i) / static_cast<double>(b - 1) : 0.5;
      const double d1 = (t - center) / width;
      const double d2 = (t - center2) / width2;
      signatures(i, k) = base + std::exp(-0.5 * d1 * d1) + 0.3 * std::exp(-0.5 * d2 * d2);
    }
  }

  Mat abundances = Mat::Zero(m * n, r);
  for (Eigen::Index k = 0; k < r; ++k) {
    Eigen::Map<Mat> map(abundances.col(k).data(), m, n);
    for (int blob = 0; blob < 4; ++blob) {
      const double cr = rng.uniform() * static_cast<double>(m);
      const double cc = rng.uniform() * static_cast<double>(n);
      const double rad = (0.08 + 0.2 * rng.uniform()) * static_cast<double>(std::max(m, n));
      const double amp = 0.3 + 0.7 * rng.uniform();
      for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index i = 0; i < m; ++i) {
          const double d2 = ((i - cr) * (i - cr) + (c - cc) * (c - cc)) / (rad * rad);
          map(i, c) += amp * std::exp(-0.5 * d2);
        }
    }
    for (int rect = 0; rect < 3; ++rect) {
      const auto r0 = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(m));
      const auto c0 = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
      const auto h = 1 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(m) / 2.0);
      const auto w = 1 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n) / 2.0);
      const double amp = 0.2 + 0.6 * rng.uniform();
      map.block(r0, c0, std::min(h, m - r0), std::min(w, n - c0)).array() += amp;
    }
  }

  Mat pixels = abundances * signatures.transpose();
  const double peak = pixels.maxCoeff();
  if (peak > 0.0) pixels *= 255.0 / peak;
  std::vector<double> data(pixels.data(), pixels.data() + pixels.size());
  return HsiCube(dims, std::move(data));
}

}  // namespace ngmeet
