#include "ngmeet/subspace.hpp"

#include "ngmeet/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace ngmeet {

namespace {

// Ridge on the regression normal equations, relative to the mean diagonal.
constexpr double kRegressionRidge = 1e-10;
// Residual deviations below this fraction of the band RMS are roundoff.
constexpr double kNoiseFloor = 1e-9;
// Eigen-directions carrying less than this fraction of total power are null.
constexpr double kPowerFloor = 1e-10;

void normalize_signs(Mat& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index imax = 0;
    basis.col(j).cwiseAbs().maxCoeff(&imax);
    if (basis(imax, j) < 0.0) basis.col(j) *= -1.0;
  }
}

Mat gram(const HsiCube& y) {
  const auto buf = y.pixels_by_bands();
  Mat g = Mat::Zero(buf.cols(), buf.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(buf.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

}  // namespace

SubspaceModel spectral_decompose(const HsiCube& y, std::size_t k) {
  if (k < 1 || k > y.bands()) {
    throw usage_error("subspace rank " + std::to_string(k) + " outside [1, " +
                      std::to_string(y.bands()) + "]");
  }
  if (!y.all_finite()) throw numerical_error("spectral_decompose: input contains NaN/Inf");

  const auto kk = static_cast<Eigen::Index>(k);
  SubspaceModel model;
  if (y.dims().pixels() >= y.bands()) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram(y));
    if (eig.info() != Eigen::Success) {
      throw numerical_error("spectral_decompose: eigendecomposition of the " +
                            std::to_string(y.bands()) + "x" + std::to_string(y.bands()) +
                            " band Gram matrix did not converge");
    }
    // Eigenvalues come out ascending.
    model.basis = eig.eigenvectors().rightCols(kk).rowwise().reverse();
    model.singular_values =
        eig.eigenvalues().tail(kk).reverse().cwiseMax(0.0).cwiseSqrt();
  } else {
    Eigen::BDCSVD<Mat> svd(unfold3(y), Eigen::ComputeThinU);
    if (svd.info() != Eigen::Success) {
      throw numerical_error("spectral_decompose: SVD of the " + std::to_string(y.bands()) + "x" +
                            std::to_string(y.dims().pixels()) + " unfolding failed");
    }
    model.basis = svd.matrixU().leftCols(kk);
    model.singular_values = svd.singularValues().head(kk);
  }
  normalize_signs(model.basis);
  model.reduced = mode3_product(y, model.basis.transpose());
  return model;
}

std::vector<double> estimate_band_noise(const HsiCube& y) {
  const std::size_t b = y.bands();
  const std::size_t n = y.dims().pixels();
  if (b < 2) throw usage_error("noise regression needs at least 2 bands");
  if (n <= b) throw data_error("insufficient pixels for regression");

  const auto buf = y.pixels_by_bands();
  const Mat r = gram(y);
  const double ridge = kRegressionRidge * r.trace() / static_cast<double>(b);
  const auto bb = static_cast<Eigen::Index>(b);

  // resid_var(i) = sigma_i^2 + sum_j beta_ij^2 sigma_j^2: the regressors carry
  // noise too. Solving (I + beta o beta) sigma^2 = resid_var removes that term.
  Vec resid_var = Vec::Zero(bb);
  Mat coupling = Mat::Identity(bb, bb);
  std::vector<bool> exact(b, false);
  Mat others(bb - 1, bb - 1);
  Vec rhs(bb - 1);
  for (Eigen::Index i = 0; i < bb; ++i) {
    // Gram submatrix of every band except i, and its cross term with band i.
    for (Eigen::Index jj = 0, j = 0; j < bb; ++j) {
      if (j == i) continue;
      rhs(jj) = r(j, i);
      for (Eigen::Index ll = 0, l = 0; l < bb; ++l) {
        if (l == i) continue;
        others(jj, ll++) = r(j, l);
      }
      ++jj;
    }
    others.diagonal().array() += ridge;
    const Vec beta = others.ldlt().solve(rhs);

    Vec full = Vec::Zero(bb);
    for (Eigen::Index jj = 0, j = 0; j < bb; ++j) {
      if (j != i) full(j) = beta(jj++);
    }
    const Vec resid = buf.col(i) - buf * full;
    const double var = resid.squaredNorm() / static_cast<double>(n);
    const double rms = std::sqrt(buf.col(i).squaredNorm() / static_cast<double>(n));
    exact[static_cast<std::size_t>(i)] = std::sqrt(var) <= kNoiseFloor * rms;
    resid_var(i) = var;
    coupling.row(i) += full.cwiseAbs2().transpose();
  }
  const Vec var = coupling.partialPivLu().solve(resid_var);

  std::vector<double> sigma(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const double v = var(static_cast<Eigen::Index>(i));
    sigma[i] = exact[i] || !(v > 0.0) ? 0.0 : std::sqrt(v);
  }
  return sigma;
}

SubspaceDimEstimate estimate_subspace_dim(const HsiCube& y, std::span<const double> band_sigma) {
  if (band_sigma.size() != y.bands()) {
    throw usage_error("expected " + std::to_string(y.bands()) + " band noise estimates, got " +
                      std::to_string(band_sigma.size()));
  }
  const auto bb = static_cast<Eigen::Index>(y.bands());
  const Mat ry = gram(y) / static_cast<double>(y.dims().pixels());
  Vec noise_var(bb);
  for (Eigen::Index i = 0; i < bb; ++i) {
    noise_var(i) = band_sigma[static_cast<std::size_t>(i)] * band_sigma[static_cast<std::size_t>(i)];
  }

  const double total = ry.trace();
  if (!std::isfinite(total) || total <= 0.0 || !noise_var.allFinite()) return {1, true};

  Mat rx = ry;
  rx.diagonal() -= noise_var;
  Eigen::SelfAdjointEigenSolver<Mat> eig(rx);
  if (eig.info() != Eigen::Success) return {1, true};

  std::size_t k = 0;
  for (Eigen::Index j = 0; j < bb; ++j) {
    const auto e = eig.eigenvectors().col(j);
    const double power = e.dot(ry * e);
    const double noise = e.dot(noise_var.cwiseProduct(e));
    if (power > 2.0 * noise && power > kPowerFloor * total) ++k;
  }
  if (k == 0) return {1, false};
  return {k, false};
}

double NoiseModel::sigma0() const { return std::sqrt(sigma0_sq); }

double reestimate_noise(const HsiCube& yi, const HsiCube& y, const NoiseModel& noise) {
  if (yi.dims() != y.dims()) throw usage_error("reestimate_noise: cube dimensions differ");
  const auto a = yi.data();
  const auto b = y.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  const double mean = acc / static_cast<double>(a.size());
  return noise.gamma * std::sqrt(std::abs(noise.sigma0_sq - mean));
}

double median_sigma(std::span<const double> band_sigma) {
  if (band_sigma.empty()) throw usage_error("median of an empty noise estimate");
  std::vector<double> v(band_sigma.begin(), band_sigma.end());
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace ngmeet
