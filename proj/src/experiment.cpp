#include "ngmeet/experiment.hpp"

#include "ngmeet/error.hpp"
#include "ngmeet/io.hpp"
#include "ngmeet/noise.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;

namespace ngmeet {

namespace {

std::string sigma_tag(double sigma) {
  std::ostringstream s;
  s << sigma;
  return s.str();
}

CaseResult run_case(const HsiCube& clean, double sigma, std::uint64_t seed, const ExperimentSpec& spec,
                    const std::string& image) {
  CaseResult res;
  res.sigma = sigma;
  res.seed = seed;
  try {
    const HsiCube noisy = add_gaussian_noise(clean, sigma, seed);
    res.noisy = assess(clean, noisy, clean.value_scale());
    const auto t0 = std::chrono::steady_clock::now();
    DenoiseResult out = ngmeet_denoise(noisy, sigma, spec.config, &clean);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.denoised = assess(clean, out.denoised, clean.value_scale());
    res.initial_k = out.initial_k;
    res.trace = std::move(out.trace);

    if (!spec.output_dir.empty()) {
      const std::string stem = image + "_sigma" + sigma_tag(sigma);
      std::ofstream trace(spec.output_dir / ("trace_" + stem + ".csv"));
      write_trace_csv(trace, res.trace);
      if (spec.write_cubes) write_cube(spec.output_dir / ("denoised_" + stem + ".hdr"), out.denoised);
    }
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

}  // namespace

HsiCube load_input(const ExperimentSpec& spec) {
  HsiCube cube;
  if (fs::is_directory(spec.input)) {
    cube = read_band_stack(spec.input);
    if (spec.normalize) cube = normalize_to_255(cube);
  } else {
    cube = read_cube(spec.input, {spec.normalize});
  }
  if (!spec.keep_bands.empty()) cube = select_bands(cube, spec.keep_bands);
  return cube;
}

ExperimentReport run_experiment(const HsiCube& clean, const ExperimentSpec& spec) {
  for (double s : spec.sigmas) {
    if (!(s >= 0.0)) throw usage_error("noise levels must be non-negative");
  }
  ExperimentReport report;
  report.image = spec.name.empty() ? spec.input.stem().string() : spec.name;
  if (report.image.empty()) report.image = "cube";
  if (!spec.output_dir.empty()) fs::create_directories(spec.output_dir);

  if (spec.parallel) {
    std::vector<std::future<CaseResult>> pending;
    for (std::size_t i = 0; i < spec.sigmas.size(); ++i) {
      pending.push_back(std::async(std::launch::async, run_case, std::cref(clean), spec.sigmas[i],
                                   spec.seed + i, std::cref(spec), std::cref(report.image)));
    }
    for (auto& f : pending) report.cases.push_back(f.get());
  } else {
    for (std::size_t i = 0; i < spec.sigmas.size(); ++i) {
      report.cases.push_back(run_case(clean, spec.sigmas[i], spec.seed + i, spec, report.image));
    }
  }

  if (!spec.output_dir.empty()) {
    std::ofstream csv(spec.output_dir / "report.csv");
    write_report_csv(csv, report);
    std::ofstream details(spec.output_dir / "details.csv");
    write_details_csv(details, report);
    std::ofstream failures(spec.output_dir / "failures.csv");
    write_failures_csv(failures, report);
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  return run_experiment(load_input(spec), spec);
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "image,sigma,mpsnr,mssim,sam_deg,seconds\n" << std::setprecision(10);
  for (const auto& c : report.cases) {
    if (c.error) continue;
    out << report.image << ',' << c.sigma << ',' << c.denoised.mpsnr << ',' << c.denoised.mssim << ','
        << c.denoised.sam_deg << ',' << c.seconds << '\n';
  }
}

void write_details_csv(std::ostream& out, const ExperimentReport& report) {
  out << "image,sigma,seed,initial_k,stage_a_sec,stage_b_sec,total_sec,noisy_mpsnr,noisy_mssim,"
         "noisy_sam_deg,cube_psnr\n"
      << std::setprecision(10);
  for (const auto& c : report.cases) {
    if (c.error) continue;
    out << report.image << ',' << c.sigma << ',' << c.seed << ',' << c.initial_k << ','
        << c.trace.stage_a_sec() << ',' << c.trace.stage_b_sec() << ',' << c.seconds << ','
        << c.noisy.mpsnr << ',' << c.noisy.mssim << ',' << c.noisy.sam_deg << ','
        << c.denoised.cube_psnr << '\n';
  }
}

void write_failures_csv(std::ostream& out, const ExperimentReport& report) {
  out << "image,sigma,error\n";
  for (const auto& c : report.cases) {
    if (!c.error) continue;
    std::string msg = *c.error;
    for (char& ch : msg) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out << report.image << ',' << c.sigma << ',' << msg << '\n';
  }
}

void write_trace_csv(std::ostream& out, const IterationTrace& trace) {
  out << "iteration,k,sigma,residual_norm,psnr,stage_a_sec,stage_b_sec\n" << std::setprecision(10);
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << r.k << ',' << r.sigma << ',' << r.residual_norm << ',';
    if (r.psnr) out << *r.psnr;
    out << ',' << r.stage_a_sec << ',' << r.stage_b_sec << '\n';
  }
}

std::vector<BenchRow> bench_bands(const HsiCube& clean, double sigma, const DenoiseConfig& cfg,
                                  std::uint64_t seed, std::span<const std::size_t> band_counts) {
  if (clean.bands() < 32) throw usage_error("bench-bands needs at least 32 bands");
  std::vector<std::size_t> counts(band_counts.begin(), band_counts.end());
  if (counts.empty()) {
    for (std::size_t b : {32u, 64u, 128u}) {
      if (b < clean.bands()) counts.push_back(b);
    }
    counts.push_back(clean.bands());
  }
  const HsiCube noisy = add_gaussian_noise(clean, sigma, seed);
  std::vector<BenchRow> rows;
  for (std::size_t b : counts) {
    const HsiCube ref = truncate_bands(clean, b);
    const DenoiseResult out = ngmeet_denoise(truncate_bands(noisy, b), sigma, cfg, nullptr);
    BenchRow row;
    row.bands = b;
    row.initial_k = out.initial_k;
    row.stage_a_sec = out.trace.stage_a_sec();
    row.stage_b_sec = out.trace.stage_b_sec();
    double acc = 0.0;
    for (std::size_t i = 0; i < b; ++i) acc += ssim(ref.band(i), out.denoised.band(i), ref.value_scale());
    row.mssim = acc / static_cast<double>(b);
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "bands,initial_k,stage_a_sec,stage_b_sec,mssim\n" << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.bands << ',' << r.initial_k << ',' << r.stage_a_sec << ',' << r.stage_b_sec << ','
        << r.mssim << '\n';
  }
}

}  // namespace ngmeet
