#pragma once

#include "ngmeet/tensor.hpp"

#include <cstdint>

namespace ngmeet {

/// Exactly rank-`rank` cube on [0, 255]: a sum of `rank` non-negative
/// abundance maps (Gaussian blobs plus flat rectangles, so the scene has both
/// smooth regions and edges) times smooth non-negative spectral signatures,
/// scaled so the maximum is 255.
HsiCube make_low_rank_cube(CubeDims dims, std::size_t rank, std::uint64_t seed);

}  // namespace ngmeet
