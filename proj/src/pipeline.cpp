#include "ngmeet/pipeline.hpp"

#include "ngmeet/error.hpp"
#include "ngmeet/metrics.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace ngmeet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_finite(const HsiCube& cube, const char* stage, std::size_t iteration) {
  if (!cube.all_finite()) {
    throw numerical_error(std::string("NaN/Inf after ") + stage + " in iteration " +
                          std::to_string(iteration));
  }
}

}  // namespace

void DenoiseConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw usage_error("lambda must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw usage_error("gamma must lie in (0, 1]");
  if (iters < 1) throw usage_error("iters must be at least 1");
  if (k0 && *k0 < 1) throw usage_error("k0 must be at least 1");
  if (!(early_stop_tol >= 0.0)) throw usage_error("early-stop tolerance must be non-negative");
  if (!(wnnm.c >= 0.0) || !(wnnm.eps > 0.0)) throw usage_error("invalid WNNM constants");
}

double IterationTrace::stage_a_sec() const {
  double t = 0.0;
  for (const auto& r : records) t += r.stage_a_sec;
  return t;
}

double IterationTrace::stage_b_sec() const {
  double t = 0.0;
  for (const auto& r : records) t += r.stage_b_sec;
  return t;
}

HsiCube iterate_regularize(const HsiCube& xi, const HsiCube& y, double lambda) {
  if (xi.dims() != y.dims()) throw usage_error("iterate_regularize: cube dimensions differ");
  HsiCube out(y.dims(), y.value_scale());
  const auto x = xi.data();
  const auto n = y.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = lambda * x[i] + (1.0 - lambda) * n[i];
  return out;
}

std::size_t update_K(std::size_t k, std::size_t delta, std::size_t i, std::size_t bands) {
  return std::min(k + delta * i, bands);
}

std::size_t affine_K(std::size_t k0, std::size_t delta, std::size_t i, std::size_t bands) {
  return std::min(k0 + delta * i, bands);
}

SubspaceDimEstimate initial_rank(const HsiCube& y, std::vector<double>* band_sigma) {
  auto sigma = estimate_band_noise(y);
  const auto est = estimate_subspace_dim(y, sigma);
  if (band_sigma) *band_sigma = std::move(sigma);
  return est;
}

DenoiseResult ngmeet_denoise(const HsiCube& y, double sigma0, const DenoiseConfig& cfg,
                             const HsiCube* clean) {
  cfg.validate();
  if (!(sigma0 >= 0.0) || !std::isfinite(sigma0)) throw usage_error("sigma0 must be finite and >= 0");
  if (!y.all_finite()) throw data_error("input cube contains NaN/Inf");
  if (clean && clean->dims() != y.dims()) throw usage_error("reference cube dimensions differ");
  cfg.geom.validate(y.rows(), y.cols());

  DenoiseResult res;
  res.noise.sigma0_sq = sigma0 * sigma0;
  res.noise.gamma = cfg.gamma;

  std::size_t k0 = 0;
  if (cfg.k0) {
    if (*cfg.k0 > y.bands()) {
      throw usage_error("k0 = " + std::to_string(*cfg.k0) + " exceeds the band count " +
                        std::to_string(y.bands()));
    }
    k0 = *cfg.k0;
  } else {
    const auto est = initial_rank(y, &res.noise.per_band_sigma);
    k0 = est.k;
    res.k_estimate_degenerate = est.degenerate;
  }
  res.initial_k = k0;

  SpatialOptions spatial;
  spatial.geom = cfg.geom;
  spatial.wnnm = cfg.wnnm;
  spatial.center_groups = cfg.center_groups;
  spatial.threads = cfg.threads;

  HsiCube yi = y;
  HsiCube x;
  std::size_t k = k0;
  for (std::size_t i = 1; i <= cfg.iters; ++i) {
    IterationRecord rec;
    rec.iteration = i;
    rec.k = k;

    auto t0 = Clock::now();
    const SubspaceModel model = spectral_decompose(yi, k);
    res.noise.sigma_i = reestimate_noise(yi, y, res.noise);
    rec.sigma = res.noise.sigma_i;
    require_finite(model.reduced, "stage A (spectral decomposition)", i);
    rec.stage_a_sec = seconds_since(t0);

    t0 = Clock::now();
    const HsiCube denoised_reduced = denoise_reduced(model.reduced, rec.sigma, spatial);
    require_finite(denoised_reduced, "stage B (non-local denoising)", i);
    rec.stage_b_sec = seconds_since(t0);

    t0 = Clock::now();
    HsiCube xi = mode3_product(denoised_reduced, model.basis);
    xi.set_value_scale(y.value_scale());
    require_finite(xi, "back-projection", i);
    rec.stage_a_sec += seconds_since(t0);

    rec.residual_norm = std::sqrt(frob_norm_sq(difference(yi, xi)));
    if (clean) rec.psnr = mean_psnr(*clean, xi, y.value_scale());

    bool converged = false;
    if (cfg.early_stop_tol > 0.0 && i > 1) {
      const double prev = std::sqrt(frob_norm_sq(x));
      const double change = std::sqrt(frob_norm_sq(difference(xi, x)));
      converged = prev > 0.0 && change / prev < cfg.early_stop_tol;
    }
    x = std::move(xi);
    res.trace.records.push_back(rec);
    if (converged || i == cfg.iters) break;

    yi = iterate_regularize(x, y, cfg.lambda);
    require_finite(yi, "stage C (iterative regularization)", i);
    k = cfg.rank_update == RankUpdate::Cumulative ? update_K(k, cfg.delta, i, y.bands())
                                                  : affine_K(k0, cfg.delta, i, y.bands());
  }
  res.denoised = std::move(x);
  return res;
}

}  // namespace ngmeet
