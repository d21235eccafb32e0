#pragma once

// Cube files: a plain-text key=value header next to a raw BSQ payload, and
// directories of per-band grayscale PGM images.
//
// Header keys (one "key = value" per line, '#' starts a comment):
//   rows, cols, bands   positive integers (required)
//   dtype               f32 | f64 | u8 | u16 (required)
//   interleave          bsq (optional, the only supported value)
//   byte_order          little (optional, the only supported value)
//   data_file           payload path relative to the header (default: header
//                       path with its extension replaced by ".raw")
//   scale_min, scale_max  value range mapped onto [0, 255] when normalizing
//
// The payload holds rows*cols*bands samples, band after band, each band
// column-major (row index fastest).

#include "ngmeet/error.hpp"
#include "ngmeet/tensor.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>

namespace ngmeet {

enum class IoErrc {
  Unreadable,        ///< file missing or unreadable
  BadHeader,         ///< malformed or missing header field
  UnknownDtype,      ///< dtype not one of f32, f64, u8, u16
  SizeMismatch,      ///< payload length differs from the header's declaration
  InconsistentDims,  ///< band images of different sizes
  Empty,             ///< no band images found
  Unwritable,
};

class IoError : public Error {
 public:
  IoError(IoErrc code, const std::string& what) : Error(ErrorKind::Data, what), code_(code) {}
  IoErrc code() const noexcept { return code_; }

 private:
  IoErrc code_;
};

enum class SampleType { F32, F64, U8, U16 };

struct CubeHeader {
  CubeDims dims;
  SampleType dtype = SampleType::F32;
  std::string data_file;
  std::optional<std::pair<double, double>> scale;
};

CubeHeader read_header(const std::filesystem::path& header_path);

struct ReadOptions {
  /// Map the header's scale range (or the data range if absent) onto [0, 255].
  bool normalize = true;
};

HsiCube read_cube(const std::filesystem::path& header_path, const ReadOptions& opts = {});

/// Writes the header and its payload (named after the header, ".raw").
/// Integer dtypes round and clamp to the representable range.
void write_cube(const std::filesystem::path& header_path, const HsiCube& cube,
                SampleType dtype = SampleType::F32);

/// Per-band P5/P2 PGM files, stacked in lexicographic file-name order.
HsiCube read_band_stack(const std::filesystem::path& dir);

/// One binary PGM per band (band_000.pgm, ...), values rounded and clamped
/// to [0, maxval]. 16-bit samples when maxval > 255.
void write_band_stack(const std::filesystem::path& dir, const HsiCube& cube, unsigned maxval = 255);

/// Affine map of [lo, hi] onto [0, 255]; a degenerate range leaves the cube as is.
HsiCube normalize_range(const HsiCube& cube, double lo, double hi);

/// Data-range normalization onto [0, 255].
HsiCube normalize_to_255(const HsiCube& cube);

SampleType parse_sample_type(const std::string& name);
std::string to_string(SampleType t);

}  // namespace ngmeet
