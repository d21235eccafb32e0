#include "ngmeet/metrics.hpp"

#include "ngmeet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ngmeet {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

void require_same_shape(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw usage_error(std::string(what) + ": image dimensions differ");
  }
}

Vec gaussian_taps() {
  Vec taps(kWindow);
  const double mid = (kWindow - 1) / 2.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - mid;
    taps(i) = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
  }
  return taps / taps.sum();
}

// Separable 'valid' correlation with the normalized Gaussian window.
Mat filter_valid(const Mat& img, const Vec& taps) {
  const Eigen::Index w = taps.size();
  const Eigen::Index out_r = img.rows() - w + 1;
  const Eigen::Index out_c = img.cols() - w + 1;
  Mat tmp(out_r, img.cols());
  for (Eigen::Index c = 0; c < img.cols(); ++c)
    for (Eigen::Index r = 0; r < out_r; ++r) tmp(r, c) = img.col(c).segment(r, w).dot(taps);
  Mat out = Mat::Zero(out_r, out_c);
  for (Eigen::Index k = 0; k < w; ++k) out += taps(k) * tmp.middleCols(k, out_c);
  return out;
}

}  // namespace

double psnr(const Eigen::Ref<const Mat>& ref, const Eigen::Ref<const Mat>& test, double peak) {
  require_same_shape(ref, test, "psnr");
  const double mse = (ref - test).squaredNorm() / static_cast<double>(ref.size());
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Eigen::Ref<const Mat>& ref, const Eigen::Ref<const Mat>& test, double peak) {
  require_same_shape(ref, test, "ssim");
  if (ref.rows() < kWindow || ref.cols() < kWindow) {
    throw usage_error("ssim: image smaller than the 11x11 window");
  }
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const Vec taps = gaussian_taps();

  const Mat x = ref;
  const Mat y = test;
  const Mat mu_x = filter_valid(x, taps);
  const Mat mu_y = filter_valid(y, taps);
  const Mat exx = filter_valid(x.cwiseProduct(x), taps);
  const Mat eyy = filter_valid(y.cwiseProduct(y), taps);
  const Mat exy = filter_valid(x.cwiseProduct(y), taps);

  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x(i);
    const double my = mu_y(i);
    const double vx = exx(i) - mx * mx;
    const double vy = eyy(i) - my * my;
    const double cxy = exy(i) - mx * my;
    const double num = (2.0 * (mx * my) + c1) * (2.0 * cxy + c2);
    const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
    acc += num / den;
  }
  const double mean = acc / static_cast<double>(mu_x.size());
  return std::clamp(mean, 0.0, 1.0);
}

SamResult sam(const HsiCube& ref, const HsiCube& test) {
  if (ref.dims() != test.dims()) throw usage_error("sam: cube dimensions differ");
  const auto a = ref.pixels_by_bands();
  const auto b = test.pixels_by_bands();
  SamResult res;
  double acc = 0.0;
  std::size_t used = 0;
  Vec u(a.cols());
  Vec v(a.cols());
  for (Eigen::Index p = 0; p < a.rows(); ++p) {
    u = a.row(p).transpose();
    v = b.row(p).transpose();
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) {
      ++res.skipped;
      continue;
    }
    u /= nu;
    v /= nv;
    // Stable near 0 and 180 degrees, unlike acos of the normalized dot.
    acc += 2.0 * std::atan2((u - v).norm(), (u + v).norm());
    ++used;
  }
  if (used == 0) throw data_error("sam: every spectrum is zero");
  res.degrees = acc / static_cast<double>(used) * 180.0 / std::numbers::pi;
  return res;
}

double mean_psnr(const HsiCube& ref, const HsiCube& test, double peak) {
  if (ref.dims() != test.dims()) throw usage_error("psnr: cube dimensions differ");
  double acc = 0.0;
  for (std::size_t b = 0; b < ref.bands(); ++b) acc += psnr(ref.band(b), test.band(b), peak);
  return acc / static_cast<double>(ref.bands());
}

QualityReport assess(const HsiCube& ref, const HsiCube& test, double peak) {
  if (ref.dims() != test.dims()) throw usage_error("assess: cube dimensions differ");
  QualityReport q;
  double psnr_acc = 0.0;
  double ssim_acc = 0.0;
  for (std::size_t b = 0; b < ref.bands(); ++b) {
    q.per_band_psnr.push_back(psnr(ref.band(b), test.band(b), peak));
    q.per_band_ssim.push_back(ssim(ref.band(b), test.band(b), peak));
    psnr_acc += q.per_band_psnr.back();
    ssim_acc += q.per_band_ssim.back();
  }
  q.mpsnr = psnr_acc / static_cast<double>(ref.bands());
  q.mssim = ssim_acc / static_cast<double>(ref.bands());
  const double mse = frob_norm_sq(difference(ref, test)) / static_cast<double>(ref.size());
  q.cube_psnr = mse == 0.0 ? kInfinitePsnr : 10.0 * std::log10(peak * peak / mse);
  const auto s = sam(ref, test);
  q.sam_deg = s.degrees;
  q.sam_skipped = s.skipped;
  return q;
}

}  // namespace ngmeet
