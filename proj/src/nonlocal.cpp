#include "ngmeet/nonlocal.hpp"

#include "ngmeet/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <string>
#include <thread>
#include <tuple>

namespace ngmeet {

void PatchGeometry::validate(std::size_t rows, std::size_t cols) const {
  if (patch == 0 || patch > std::min(rows, cols)) {
    throw usage_error("patch size " + std::to_string(patch) + " does not fit a " +
                      std::to_string(rows) + "x" + std::to_string(cols) + " image");
  }
  if (stride < 1 || stride > patch) {
    throw usage_error("stride must lie in [1, patch size], got " + std::to_string(stride));
  }
  if (group < 1) throw usage_error("group size must be at least 1");
  if (window < patch) {
    throw usage_error("search window " + std::to_string(window) + " smaller than patch " +
                      std::to_string(patch));
  }
}

namespace {

std::vector<std::size_t> grid_axis(std::size_t extent, std::size_t patch, std::size_t stride) {
  const std::size_t last = extent - patch;
  std::vector<std::size_t> axis;
  for (std::size_t v = 0; v <= last; v += stride) axis.push_back(v);
  if (axis.back() != last) axis.push_back(last);
  return axis;
}

}  // namespace

std::vector<Position> reference_grid(std::size_t rows, std::size_t cols, const PatchGeometry& geom) {
  geom.validate(rows, cols);
  const auto rs = grid_axis(rows, geom.patch, geom.stride);
  const auto cs = grid_axis(cols, geom.patch, geom.stride);
  std::vector<Position> grid;
  grid.reserve(rs.size() * cs.size());
  for (auto r : rs)
    for (auto c : cs) grid.push_back({r, c});
  return grid;
}

Vec extract_patch(const HsiCube& cube, Position pos, std::size_t patch) {
  const auto n = static_cast<Eigen::Index>(patch);
  Vec v(n * n * static_cast<Eigen::Index>(cube.bands()));
  Eigen::Index i = 0;
  for (std::size_t k = 0; k < cube.bands(); ++k) {
    for (std::size_t dc = 0; dc < patch; ++dc) {
      const double* src = &cube(pos.row, pos.col + dc, k);
      for (std::size_t dr = 0; dr < patch; ++dr) v(i++) = src[dr];
    }
  }
  return v;
}

PatchGroup match_group(const HsiCube& reduced, Position ref, const PatchGeometry& geom) {
  geom.validate(reduced.rows(), reduced.cols());
  const std::size_t n = geom.patch;
  const std::size_t last_row = reduced.rows() - n;
  const std::size_t last_col = reduced.cols() - n;
  if (ref.row > last_row || ref.col > last_col) {
    throw usage_error("reference patch at (" + std::to_string(ref.row) + ", " +
                      std::to_string(ref.col) + ") leaves the image");
  }

  const std::size_t half = geom.window / 2;
  const std::size_t r0 = ref.row > half ? ref.row - half : 0;
  const std::size_t c0 = ref.col > half ? ref.col - half : 0;
  const std::size_t r1 = std::min(ref.row + half, last_row);
  const std::size_t c1 = std::min(ref.col + half, last_col);

  const Vec ref_vec = extract_patch(reduced, ref, n);
  const std::size_t plane = reduced.dims().pixels();
  const std::size_t rows = reduced.rows();
  const double* base = reduced.data().data();

  using Candidate = std::tuple<double, std::size_t, std::size_t>;
  std::vector<Candidate> cands;
  cands.reserve((r1 - r0 + 1) * (c1 - c0 + 1));
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t c = c0; c <= c1; ++c) {
      if (r == ref.row && c == ref.col) continue;
      double dist = 0.0;
      const double* rv = ref_vec.data();
      for (std::size_t k = 0; k < reduced.bands(); ++k) {
        const double* col = base + k * plane + c * rows + r;
        for (std::size_t dc = 0; dc < n; ++dc, col += rows) {
          for (std::size_t dr = 0; dr < n; ++dr) {
            const double d = col[dr] - *rv++;
            dist += d * d;
          }
        }
      }
      cands.emplace_back(dist, r, c);
    }
  }

  const std::size_t take = std::min(geom.group - 1, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take), cands.end());

  PatchGroup g;
  g.ref = ref;
  g.members.reserve(take + 1);
  g.members.push_back(ref);
  for (std::size_t j = 0; j < take; ++j) {
    g.members.push_back({std::get<1>(cands[j]), std::get<2>(cands[j])});
  }
  g.matrix.resize(ref_vec.size(), static_cast<Eigen::Index>(g.members.size()));
  g.matrix.col(0) = ref_vec;
  for (std::size_t j = 1; j < g.members.size(); ++j) {
    g.matrix.col(static_cast<Eigen::Index>(j)) = extract_patch(reduced, g.members[j], n);
  }
  return g;
}

Mat wnnm_shrink(const Mat& g, double sigma, const WnnmParams& params, double value_scale) {
  if (g.size() == 0) throw usage_error("wnnm_shrink: empty group");
  if (!(sigma >= 0.0)) throw usage_error("wnnm_shrink: sigma must be non-negative");
  if (sigma < 1e-9 * value_scale) return g;

  Eigen::BDCSVD<Mat> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw numerical_error("wnnm_shrink: SVD of a " + std::to_string(g.rows()) + "x" +
                          std::to_string(g.cols()) + " group failed");
  }
  const Vec& s = svd.singularValues();
  const double p = static_cast<double>(g.cols());
  const double d = static_cast<double>(g.rows());
  const bool dominant = params.scaling == WnnmScaling::Dominant;
  const double noise_energy = (dominant ? std::max(d, p) : p) * sigma * sigma;
  const double numer = params.c * std::sqrt(dominant ? d * p : p) * sigma * sigma;

  Vec shrunk(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const double clean = std::sqrt(std::max(s(j) * s(j) - noise_energy, 0.0));
    const double weight = numer / (clean + params.eps);
    shrunk(j) = std::max(s(j) - weight, 0.0);
  }
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

PatchAggregator::PatchAggregator(CubeDims dims, std::size_t patch, double value_scale)
    : sum_(dims, value_scale), count_(dims.pixels(), 0.0), patch_(patch) {}

void PatchAggregator::add(const PatchGroup& group, const Mat& denoised) {
  const std::size_t n = patch_;
  const auto& dims = sum_.dims();
  if (static_cast<std::size_t>(denoised.rows()) != n * n * dims.bands ||
      static_cast<std::size_t>(denoised.cols()) != group.members.size()) {
    throw usage_error("aggregate: group matrix shape does not match its members");
  }
  for (std::size_t j = 0; j < group.members.size(); ++j) {
    const Position pos = group.members[j];
    if (pos.row + n > dims.rows || pos.col + n > dims.cols) {
      throw usage_error("aggregate: patch at (" + std::to_string(pos.row) + ", " +
                        std::to_string(pos.col) + ") leaves the image");
    }
    const double* src = denoised.col(static_cast<Eigen::Index>(j)).data();
    for (std::size_t k = 0; k < dims.bands; ++k) {
      for (std::size_t dc = 0; dc < n; ++dc) {
        double* dst = &sum_(pos.row, pos.col + dc, k);
        for (std::size_t dr = 0; dr < n; ++dr) dst[dr] += *src++;
      }
    }
    for (std::size_t dc = 0; dc < n; ++dc) {
      double* cnt = &count_[(pos.col + dc) * dims.rows + pos.row];
      for (std::size_t dr = 0; dr < n; ++dr) cnt[dr] += 1.0;
    }
  }
}

HsiCube PatchAggregator::finish() const {
  const auto& dims = sum_.dims();
  for (std::size_t i = 0; i < count_.size(); ++i) {
    if (count_[i] == 0.0) {
      throw usage_error("coverage gap at pixel (" + std::to_string(i % dims.rows) + ", " +
                        std::to_string(i / dims.rows) + ")");
    }
  }
  HsiCube out = sum_;
  for (std::size_t k = 0; k < dims.bands; ++k) {
    double* band = out.data().data() + k * dims.pixels();
    for (std::size_t i = 0; i < count_.size(); ++i) band[i] /= count_[i];
  }
  return out;
}

HsiCube aggregate(std::span<const GroupResult> groups, CubeDims dims, std::size_t patch,
                  double value_scale) {
  PatchAggregator acc(dims, patch, value_scale);
  for (const auto& gr : groups) acc.add(gr.group, gr.denoised);
  return acc.finish();
}

namespace {

Mat shrink_group(const Mat& g, double sigma, const SpatialOptions& opts, double value_scale) {
  if (!opts.center_groups || sigma < 1e-9 * value_scale) {
    return wnnm_shrink(g, sigma, opts.wnnm, value_scale);
  }
  const Vec mean = g.rowwise().mean();
  Mat centered = g.colwise() - mean;
  Mat out = wnnm_shrink(centered, sigma, opts.wnnm, value_scale);
  out.colwise() += mean;
  return out;
}

}  // namespace

HsiCube denoise_reduced(const HsiCube& reduced, double sigma, const SpatialOptions& opts) {
  const auto grid = reference_grid(reduced.rows(), reduced.cols(), opts.geom);
  const double scale = reduced.value_scale();

  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                       : opts.threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));

  PatchAggregator acc(reduced.dims(), opts.geom.patch, scale);
  // Groups are computed in parallel chunk by chunk and accumulated serially
  // in grid order, which keeps the result independent of the thread count.
  const std::size_t chunk = 64 * static_cast<std::size_t>(threads);
  std::vector<GroupResult> results(std::min(chunk, grid.size()));
  for (std::size_t begin = 0; begin < grid.size(); begin += chunk) {
    const std::size_t end = std::min(begin + chunk, grid.size());
    auto work = [&](std::size_t i) {
      auto& slot = results[i - begin];
      slot.group = match_group(reduced, grid[i], opts.geom);
      slot.denoised = shrink_group(slot.group.matrix, sigma, opts, scale);
    };
    if (threads <= 1) {
      for (std::size_t i = begin; i < end; ++i) work(i);
    } else {
      std::atomic<std::size_t> next{begin};
      std::exception_ptr failure;
      std::atomic<bool> failed{false};
      {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
          pool.emplace_back([&] {
            for (std::size_t i = next++; i < end && !failed; i = next++) {
              try {
                work(i);
              } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
              }
            }
          });
        }
      }
      if (failure) std::rethrow_exception(failure);
    }
    for (std::size_t i = begin; i < end; ++i) {
      acc.add(results[i - begin].group, results[i - begin].denoised);
    }
  }
  return acc.finish();
}

}  // namespace ngmeet
