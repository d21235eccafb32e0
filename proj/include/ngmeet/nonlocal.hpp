#pragma once

// Spatial step on the reduced image: reference grid, k-NN full-band patch
// grouping, weighted nuclear norm shrinkage of each group, and overlap
// averaging back into an image.

#include "ngmeet/tensor.hpp"

#include <compare>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace ngmeet {

/// Top-left corner of a patch.
struct Position {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const Position&, const Position&) = default;
};

struct PatchGeometry {
  std::size_t patch = 6;    ///< patch side n
  std::size_t stride = 4;   ///< spacing s between reference patches
  std::size_t window = 30;  ///< search window side w, centered on the reference
  std::size_t group = 70;   ///< patches per group p

  /// Throws unless n <= min(rows, cols), 1 <= s <= n, p >= 1 and w >= n.
  void validate(std::size_t rows, std::size_t cols) const;
};

struct PatchGroup {
  Position ref;
  /// members[0] == ref; the rest by increasing distance, ties row-major.
  std::vector<Position> members;
  /// (n*n*K) x p; column j is the patch at members[j], vectorized band by
  /// band and column-major inside the patch.
  Mat matrix;
};

/// How the noise level enters the shrinkage of a d x p group.
enum class WnnmScaling {
  /// Noise energy p sigma^2 per singular value, weight c sqrt(p) sigma^2 / s_hat.
  /// Calibrated for groups with d <= p.
  Columns,
  /// Noise energy max(d, p) sigma^2, weight c sqrt(d p) sigma^2 / s_hat.
  /// Keeps the threshold proportional to the group's noise norm when d > p.
  Dominant,
};

struct WnnmParams {
  double c = 2.0 * std::numbers::sqrt2;
  double eps = 1e-16;
  WnnmScaling scaling = WnnmScaling::Dominant;
};

/// Row-major stride grid of reference corners, with the last row and column
/// clamped to rows - n and cols - n so the references tile the whole image.
std::vector<Position> reference_grid(std::size_t rows, std::size_t cols, const PatchGeometry& geom);

/// The geom.group patches nearest to the one at `ref` (squared Euclidean
/// distance over all bands) among the corners inside the search window.
/// Fewer candidates than geom.group yields a smaller group.
PatchGroup match_group(const HsiCube& reduced, Position ref, const PatchGeometry& geom);

/// Vectorized patch at `pos`, in the PatchGroup::matrix column order.
Vec extract_patch(const HsiCube& cube, Position pos, std::size_t patch);

/// One-step weighted nuclear norm shrinkage of a d x p group.
///
/// With G = U diag(s) V^T and the Columns scaling:
/// s_hat = sqrt(max(s^2 - p sigma^2, 0)), w = c sqrt(p) sigma^2 / (s_hat + eps),
/// s' = max(s - w, 0), result U diag(s') V^T. Dominant replaces p by max(d, p)
/// in s_hat and sqrt(p) by sqrt(d p) in w. A sigma below 1e-9 * value_scale
/// returns G untouched.
Mat wnnm_shrink(const Mat& g, double sigma, const WnnmParams& params,
                double value_scale = HsiCube::kDefaultScale);

/// Accumulates denoised groups into sum and count buffers; finish() divides.
class PatchAggregator {
 public:
  PatchAggregator(CubeDims dims, std::size_t patch, double value_scale = HsiCube::kDefaultScale);

  void add(const PatchGroup& group, const Mat& denoised);
  /// Throws "coverage gap" if some pixel never received a patch.
  HsiCube finish() const;

 private:
  HsiCube sum_;
  std::vector<double> count_;
  std::size_t patch_;
};

struct GroupResult {
  PatchGroup group;
  Mat denoised;
};

/// Overlap averaging in the given order (group index, then member index).
HsiCube aggregate(std::span<const GroupResult> groups, CubeDims dims, std::size_t patch,
                  double value_scale = HsiCube::kDefaultScale);

struct SpatialOptions {
  PatchGeometry geom;
  WnnmParams wnnm;
  /// Subtract each group's mean patch before shrinkage and add it back after.
  bool center_groups = false;
  /// Worker threads for matching and shrinkage; 0 picks hardware concurrency.
  unsigned threads = 1;
};

/// Full match -> shrink -> aggregate pass over a reduced image. The result is
/// bitwise independent of the thread count.
HsiCube denoise_reduced(const HsiCube& reduced, double sigma, const SpatialOptions& opts);

}  // namespace ngmeet
