#include "ngmeet/io.hpp"

#include "ngmeet/config.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;

namespace ngmeet {

namespace {

static_assert(std::endian::native == std::endian::little,
              "payloads are little-endian; add byte swapping for this host");

std::size_t sample_bytes(SampleType t) {
  switch (t) {
    case SampleType::F32: return 4;
    case SampleType::F64: return 8;
    case SampleType::U8: return 1;
    case SampleType::U16: return 2;
  }
  return 0;
}

std::size_t header_size(const KeyValues& kv, const std::string& key, const fs::path& src) {
  auto it = kv.find(key);
  if (it == kv.end()) throw IoError(IoErrc::BadHeader, src.string() + ": missing '" + key + "'");
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size() || v <= 0) throw std::invalid_argument(it->second);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw IoError(IoErrc::BadHeader,
                  src.string() + ": '" + key + "' must be a positive integer, got '" + it->second + "'");
  }
}

double header_double(const std::string& v, const std::string& key, const fs::path& src) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw IoError(IoErrc::BadHeader, src.string() + ": '" + key + "' is not a number");
  }
}

template <typename T>
void decode(const std::vector<char>& raw, std::vector<double>& out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    T v;
    std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
    out[i] = static_cast<double>(v);
  }
}

template <typename T>
void encode(std::span<const double> in, std::vector<char>& raw) {
  raw.resize(in.size() * sizeof(T));
  for (std::size_t i = 0; i < in.size(); ++i) {
    T v;
    if constexpr (std::is_integral_v<T>) {
      const double hi = static_cast<double>(std::numeric_limits<T>::max());
      v = static_cast<T>(std::clamp(std::round(in[i]), 0.0, hi));
    } else {
      v = static_cast<T>(in[i]);
    }
    std::memcpy(raw.data() + i * sizeof(T), &v, sizeof(T));
  }
}

// Next whitespace-delimited PGM token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

struct PgmImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pixels;  // column-major
};

PgmImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrc::Unreadable, "cannot open " + path.string());
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") {
    throw IoError(IoErrc::BadHeader, path.string() + ": not a PGM file");
  }
  std::size_t width = 0, height = 0, maxval = 0;
  try {
    width = std::stoul(pgm_token(in));
    height = std::stoul(pgm_token(in));
    maxval = std::stoul(pgm_token(in));
  } catch (const std::exception&) {
    throw IoError(IoErrc::BadHeader, path.string() + ": malformed PGM header");
  }
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
    throw IoError(IoErrc::BadHeader, path.string() + ": invalid PGM dimensions or maxval");
  }
  PgmImage img{height, width, std::vector<double>(width * height)};
  auto put = [&](std::size_t i, double v) {
    // PGM rasters are row-major; store column-major.
    img.pixels[(i % width) * height + i / width] = v;
  };
  if (magic == "P5") {
    const std::size_t bps = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(width * height * bps);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw IoError(IoErrc::SizeMismatch, path.string() + ": payload size mismatch");
    }
    for (std::size_t i = 0; i < width * height; ++i) {
      put(i, bps == 2 ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i]);
    }
  } else {
    for (std::size_t i = 0; i < width * height; ++i) {
      const std::string tok = pgm_token(in);
      if (tok.empty()) throw IoError(IoErrc::SizeMismatch, path.string() + ": payload size mismatch");
      put(i, std::stod(tok));
    }
  }
  return img;
}

}  // namespace

SampleType parse_sample_type(const std::string& name) {
  if (name == "f32" || name == "float32") return SampleType::F32;
  if (name == "f64" || name == "float64") return SampleType::F64;
  if (name == "u8" || name == "uint8") return SampleType::U8;
  if (name == "u16" || name == "uint16") return SampleType::U16;
  throw IoError(IoErrc::UnknownDtype, "unknown dtype '" + name + "'");
}

std::string to_string(SampleType t) {
  switch (t) {
    case SampleType::F32: return "f32";
    case SampleType::F64: return "f64";
    case SampleType::U8: return "u8";
    case SampleType::U16: return "u16";
  }
  return "?";
}

CubeHeader read_header(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw IoError(IoErrc::Unreadable, "cannot open header " + header_path.string());
  KeyValues kv;
  try {
    kv = parse_key_values(in, header_path.string());
  } catch (const Error& e) {
    throw IoError(IoErrc::BadHeader, e.what());
  }

  CubeHeader h;
  h.dims = {header_size(kv, "rows", header_path), header_size(kv, "cols", header_path),
            header_size(kv, "bands", header_path)};
  auto dtype = kv.find("dtype");
  if (dtype == kv.end()) throw IoError(IoErrc::BadHeader, header_path.string() + ": missing 'dtype'");
  h.dtype = parse_sample_type(dtype->second);
  if (auto it = kv.find("interleave"); it != kv.end() && it->second != "bsq") {
    throw IoError(IoErrc::BadHeader, header_path.string() + ": only bsq interleave is supported");
  }
  if (auto it = kv.find("byte_order"); it != kv.end() && it->second != "little") {
    throw IoError(IoErrc::BadHeader, header_path.string() + ": only little byte order is supported");
  }
  if (auto it = kv.find("data_file"); it != kv.end()) {
    h.data_file = it->second;
  } else {
    h.data_file = fs::path(header_path).replace_extension(".raw").filename().string();
  }
  auto lo = kv.find("scale_min");
  auto hi = kv.find("scale_max");
  if ((lo == kv.end()) != (hi == kv.end())) {
    throw IoError(IoErrc::BadHeader, header_path.string() + ": scale_min and scale_max go together");
  }
  if (lo != kv.end()) {
    h.scale = std::pair{header_double(lo->second, "scale_min", header_path),
                        header_double(hi->second, "scale_max", header_path)};
  }
  return h;
}

HsiCube read_cube(const fs::path& header_path, const ReadOptions& opts) {
  const CubeHeader h = read_header(header_path);
  const fs::path payload = header_path.parent_path() / h.data_file;
  std::ifstream in(payload, std::ios::binary);
  if (!in) throw IoError(IoErrc::Unreadable, "cannot open payload " + payload.string());

  const std::size_t expected = h.dims.size() * sample_bytes(h.dtype);
  std::error_code ec;
  const auto actual = fs::file_size(payload, ec);
  if (ec) throw IoError(IoErrc::Unreadable, "cannot stat payload " + payload.string());
  if (actual != expected) {
    throw IoError(IoErrc::SizeMismatch, payload.string() + ": payload size mismatch (expected " +
                                            std::to_string(expected) + " bytes, found " +
                                            std::to_string(actual) + ")");
  }
  std::vector<char> raw(expected);
  in.read(raw.data(), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected) {
    throw IoError(IoErrc::Unreadable, "short read from " + payload.string());
  }

  std::vector<double> data(h.dims.size());
  switch (h.dtype) {
    case SampleType::F32: decode<float>(raw, data); break;
    case SampleType::F64: decode<double>(raw, data); break;
    case SampleType::U8: decode<std::uint8_t>(raw, data); break;
    case SampleType::U16: decode<std::uint16_t>(raw, data); break;
  }
  HsiCube cube(h.dims, std::move(data));
  if (!cube.all_finite()) throw IoError(IoErrc::BadHeader, payload.string() + ": non-finite samples");
  if (!opts.normalize) return cube;
  if (h.scale) return normalize_range(cube, h.scale->first, h.scale->second);
  return normalize_to_255(cube);
}

void write_cube(const fs::path& header_path, const HsiCube& cube, SampleType dtype) {
  const fs::path payload = fs::path(header_path).replace_extension(".raw");
  if (payload == header_path) {
    throw IoError(IoErrc::Unwritable, "header path must not end in .raw: " + header_path.string());
  }
  std::vector<char> raw;
  switch (dtype) {
    case SampleType::F32: encode<float>(cube.data(), raw); break;
    case SampleType::F64: encode<double>(cube.data(), raw); break;
    case SampleType::U8: encode<std::uint8_t>(cube.data(), raw); break;
    case SampleType::U16: encode<std::uint16_t>(cube.data(), raw); break;
  }
  std::ofstream out(payload, std::ios::binary);
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError(IoErrc::Unwritable, "cannot write " + payload.string());

  std::ofstream hdr(header_path);
  hdr << "# ngmeet cube header\n"
      << "rows = " << cube.rows() << "\n"
      << "cols = " << cube.cols() << "\n"
      << "bands = " << cube.bands() << "\n"
      << "dtype = " << to_string(dtype) << "\n"
      << "interleave = bsq\n"
      << "byte_order = little\n"
      << "data_file = " << payload.filename().string() << "\n";
  if (!hdr) throw IoError(IoErrc::Unwritable, "cannot write " + header_path.string());
}

HsiCube read_band_stack(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(IoErrc::Unreadable, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  if (files.empty()) throw IoError(IoErrc::Empty, dir.string() + ": no .pgm band images");
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  PgmImage first = read_pgm(files.front());
  const CubeDims dims{first.rows, first.cols, files.size()};
  std::vector<double> data;
  data.reserve(dims.size());
  data.insert(data.end(), first.pixels.begin(), first.pixels.end());
  for (std::size_t i = 1; i < files.size(); ++i) {
    PgmImage img = read_pgm(files[i]);
    if (img.rows != dims.rows || img.cols != dims.cols) {
      throw IoError(IoErrc::InconsistentDims,
                    files[i].string() + ": " + std::to_string(img.cols) + "x" +
                        std::to_string(img.rows) + " differs from " + std::to_string(dims.cols) +
                        "x" + std::to_string(dims.rows));
    }
    data.insert(data.end(), img.pixels.begin(), img.pixels.end());
  }
  return HsiCube(dims, std::move(data));
}

void write_band_stack(const fs::path& dir, const HsiCube& cube, unsigned maxval) {
  if (maxval == 0 || maxval > 65535) throw usage_error("PGM maxval must lie in [1, 65535]");
  fs::create_directories(dir);
  const std::size_t bps = maxval > 255 ? 2 : 1;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    std::ostringstream name;
    name << "band_" << std::string(b < 10 ? "00" : b < 100 ? "0" : "") << b << ".pgm";
    const fs::path path = dir / name.str();
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << cube.cols() << " " << cube.rows() << "\n" << maxval << "\n";
    std::vector<unsigned char> raw(cube.dims().pixels() * bps);
    std::size_t i = 0;
    for (std::size_t r = 0; r < cube.rows(); ++r) {
      for (std::size_t c = 0; c < cube.cols(); ++c, ++i) {
        const auto v = static_cast<unsigned>(
            std::clamp(std::round(cube(r, c, b)), 0.0, static_cast<double>(maxval)));
        if (bps == 2) {
          raw[2 * i] = static_cast<unsigned char>(v >> 8);
          raw[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
        } else {
          raw[i] = static_cast<unsigned char>(v);
        }
      }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError(IoErrc::Unwritable, "cannot write " + path.string());
  }
}

HsiCube normalize_range(const HsiCube& cube, double lo, double hi) {
  HsiCube out = cube;
  out.set_value_scale(HsiCube::kDefaultScale);
  if (!(hi > lo)) return out;
  const double f = HsiCube::kDefaultScale / (hi - lo);
  for (double& v : out.data()) v = (v - lo) * f;
  return out;
}

HsiCube normalize_to_255(const HsiCube& cube) {
  const auto [lo, hi] = std::minmax_element(cube.data().begin(), cube.data().end());
  return normalize_range(cube, *lo, *hi);
}

}  // namespace ngmeet
