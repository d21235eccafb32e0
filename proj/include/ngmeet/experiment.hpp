#pragma once

// Synthetic-noise experiment harness: inject Gaussian noise at several
// levels, denoise, score against the clean cube, and time each stage.

#include "ngmeet/metrics.hpp"
#include "ngmeet/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ngmeet {

struct ExperimentSpec {
  /// Cube header file or a directory of per-band PGM images.
  std::filesystem::path input;
  /// Label written in the "image" column; defaults to the input stem.
  std::string name;
  std::vector<double> sigmas;
  /// Case i is corrupted with seed + i.
  std::uint64_t seed = 0;
  DenoiseConfig config;
  bool normalize = true;
  /// Bands to keep (e.g. to drop water-absorption bands); all when empty.
  std::vector<std::size_t> keep_bands;
  /// Where CSVs and denoised cubes go; nothing is written when empty.
  std::filesystem::path output_dir;
  bool write_cubes = true;
  /// Run cases concurrently (each with its own outputs).
  bool parallel = false;
};

struct CaseResult {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  QualityReport noisy;
  QualityReport denoised;
  std::size_t initial_k = 0;
  double seconds = 0.0;
  IterationTrace trace;
  /// Set when the case failed; the metric fields are then meaningless.
  std::optional<std::string> error;
};

struct ExperimentReport {
  std::string image;
  std::vector<CaseResult> cases;
};

/// Loads the spec's input (honoring normalize and keep_bands).
HsiCube load_input(const ExperimentSpec& spec);

/// Runs every sigma against `clean`; failures are recorded per case.
ExperimentReport run_experiment(const HsiCube& clean, const ExperimentSpec& spec);
ExperimentReport run_experiment(const ExperimentSpec& spec);

/// image,sigma,mpsnr,mssim,sam_deg,seconds (successful cases only).
void write_report_csv(std::ostream& out, const ExperimentReport& report);
/// Per-case stage timings, initial K and the noisy-input scores.
void write_details_csv(std::ostream& out, const ExperimentReport& report);
/// image,sigma,error for failed cases.
void write_failures_csv(std::ostream& out, const ExperimentReport& report);
/// iteration,k,sigma,residual_norm,psnr,stage_a_sec,stage_b_sec
void write_trace_csv(std::ostream& out, const IterationTrace& trace);

struct BenchRow {
  std::size_t bands = 0;
  std::size_t initial_k = 0;
  double stage_a_sec = 0.0;
  double stage_b_sec = 0.0;
  double mssim = 0.0;
};

/// Corrupts `clean` once, then denoises its first-B-band truncations for
/// every B in `band_counts` (default {32, 64, 128, all}).
std::vector<BenchRow> bench_bands(const HsiCube& clean, double sigma, const DenoiseConfig& cfg,
                                  std::uint64_t seed, std::span<const std::size_t> band_counts = {});

/// bands,initial_k,stage_a_sec,stage_b_sec,mssim
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

}  // namespace ngmeet
