// ngmeet command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include "ngmeet/config.hpp"
#include "ngmeet/error.hpp"
#include "ngmeet/experiment.hpp"
#include "ngmeet/io.hpp"
#include "ngmeet/metrics.hpp"
#include "ngmeet/noise.hpp"
#include "ngmeet/pipeline.hpp"
#include "ngmeet/subspace.hpp"
#include "ngmeet/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ngmeet;

namespace {

// Denoiser flags; each one overrides the config file only when given.
struct ConfigFlags {
  std::string config_file;
  std::string k0;
  std::optional<std::size_t> delta, iters, patch, stride, window, group, threads;
  std::optional<double> lambda, gamma, wnnm_c, early_stop;
  std::optional<std::uint64_t> seed;
  std::string rank_update, wnnm_scaling;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file (flags override it)")
        ->check(CLI::ExistingFile);
    app->add_option("--k0", k0, "initial subspace rank, or 'auto'");
    app->add_option("--delta", delta, "rank increment");
    app->add_option("--lambda", lambda, "regularization weight in [0, 1]");
    app->add_option("--gamma", gamma, "noise re-estimation factor in (0, 1]");
    app->add_option("--iters", iters, "outer iterations");
    app->add_option("--patch", patch, "patch side");
    app->add_option("--stride", stride, "reference patch stride");
    app->add_option("--window", window, "search window side");
    app->add_option("--group", group, "patches per group");
    app->add_option("--wnnm-c", wnnm_c, "WNNM weight constant");
    app->add_option("--wnnm-scaling", wnnm_scaling, "columns | dominant");
    app->add_option("--rank-update", rank_update, "cumulative | affine");
    app->add_option("--early-stop", early_stop, "relative change that ends the loop (0 = off)");
    app->add_option("--threads", threads, "stage-B worker threads (0 = all cores)");
    app->add_option("--seed", seed, "noise seed");
  }

  DenoiseConfig build() const {
    DenoiseConfig cfg;
    KeyValues kv;
    if (!config_file.empty()) kv = read_key_value_file(config_file);
    auto set = [&](const char* key, const auto& value) {
      if (value) kv[key] = std::to_string(*value);
    };
    if (!k0.empty()) kv["k0"] = k0;
    set("delta", delta);
    set("iters", iters);
    set("patch", patch);
    set("stride", stride);
    set("window", window);
    set("group", group);
    set("threads", threads);
    set("seed", seed);
    auto set_real = [&](const char* key, const std::optional<double>& value) {
      if (!value) return;
      std::ostringstream s;
      s.precision(17);
      s << *value;
      kv[key] = s.str();
    };
    set_real("lambda", lambda);
    set_real("gamma", gamma);
    set_real("wnnm_c", wnnm_c);
    set_real("early_stop", early_stop);
    if (!rank_update.empty()) kv["rank_update"] = rank_update;
    if (!wnnm_scaling.empty()) kv["wnnm_scaling"] = wnnm_scaling;
    apply_config(cfg, kv);
    cfg.validate();
    return cfg;
  }
};

struct InputFlags {
  std::string path;
  bool no_normalize = false;
  std::string keep;

  void attach(CLI::App* app, const char* name = "--input") {
    app->add_option(name, path, "cube header file or directory of band PGMs")->required();
    app->add_flag("--no-normalize", no_normalize, "keep raw values instead of mapping to [0, 255]");
    app->add_option("--keep-bands", keep, "bands to keep, e.g. 0-102,108-148");
  }

  ExperimentSpec spec() const {
    ExperimentSpec s;
    s.input = path;
    s.normalize = !no_normalize;
    if (!keep.empty()) s.keep_bands = parse_index_list(keep);
    return s;
  }

  HsiCube load() const { return load_input(spec()); }
};

HsiCube load_plain(const std::string& path) {
  ExperimentSpec s;
  s.input = path;
  s.normalize = false;
  return load_input(s);
}

void save(const std::string& path, const HsiCube& cube, const std::string& dtype) {
  // A path with an extension is a header; anything else is a band-image directory.
  if (fs::path(path).has_extension()) {
    write_cube(path, cube, parse_sample_type(dtype));
  } else {
    write_band_stack(path, cube);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(IoErrc::Unwritable, "cannot write " + path);
  return out;
}

double parse_sigma0(const std::string& text, const HsiCube& y, std::vector<double>* band_sigma) {
  if (text == "auto") {
    *band_sigma = estimate_band_noise(y);
    return median_sigma(*band_sigma);
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && v >= 0.0) return v;
  } catch (const std::exception&) {
  }
  throw usage_error("--sigma0 expects a non-negative number or 'auto', got '" + text + "'");
}

void print_report(const char* label, const QualityReport& q) {
  std::printf("%s: MPSNR %.4f dB  MSSIM %.4f  SAM %.4f deg\n", label, q.mpsnr, q.mssim, q.sam_deg);
}

int run(int argc, char** argv) {
  CLI::App app{"Hyperspectral image denoising with a global spectral subspace and non-local "
               "low-rank filtering of the reduced image"};
  app.require_subcommand(1);

  // denoise
  auto* den = app.add_subcommand("denoise", "denoise a cube");
  InputFlags den_in;
  ConfigFlags den_cfg;
  std::string den_out, den_sigma0, den_trace, den_ref, den_dtype = "f32";
  den_in.attach(den);
  den_cfg.attach(den);
  den->add_option("--output", den_out, "output header (.hdr) or band-image directory")->required();
  den->add_option("--sigma0", den_sigma0, "noise std on the [0, 255] scale, or 'auto'")->required();
  den->add_option("--trace", den_trace, "per-iteration trace CSV");
  den->add_option("--reference", den_ref, "clean cube; adds PSNR to the trace");
  den->add_option("--dtype", den_dtype, "output sample type: f32 | f64 | u8 | u16");

  // add-noise
  auto* noise = app.add_subcommand("add-noise", "add i.i.d. Gaussian noise");
  InputFlags noise_in;
  std::string noise_out, noise_dtype = "f32";
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  noise_in.attach(noise);
  noise->add_option("--output", noise_out, "output header (.hdr) or band-image directory")->required();
  noise->add_option("--sigma", noise_sigma, "noise std on the working scale")->required();
  noise->add_option("--seed", noise_seed, "PRNG seed");
  noise->add_option("--dtype", noise_dtype, "output sample type: f32 | f64 | u8 | u16");

  // metrics
  auto* met = app.add_subcommand("metrics", "compare a cube against a reference");
  std::string met_ref, met_test, met_csv;
  double met_peak = 255.0;
  met->add_option("--reference", met_ref, "reference cube")->required();
  met->add_option("--test", met_test, "cube to score")->required();
  met->add_option("--peak", met_peak, "peak value for PSNR and SSIM");
  met->add_option("--csv", met_csv, "also write per-band PSNR/SSIM to this CSV");

  // estimate-k
  auto* est = app.add_subcommand("estimate-k", "estimate the subspace rank and band noise");
  InputFlags est_in;
  bool est_bands = false;
  est_in.attach(est);
  est->add_flag("--per-band", est_bands, "print every band's noise estimate");

  // run-exp
  auto* exp = app.add_subcommand("run-exp", "noise-injection experiment over several levels");
  InputFlags exp_in;
  ConfigFlags exp_cfg;
  std::vector<double> exp_sigmas;
  std::string exp_out, exp_name;
  bool exp_no_cubes = false, exp_parallel = false;
  exp_in.attach(exp);
  exp_cfg.attach(exp);
  exp->add_option("--sigmas", exp_sigmas, "noise levels")->delimiter(',');
  exp->add_option("--output-dir", exp_out, "directory for CSVs and denoised cubes")->required();
  exp->add_option("--name", exp_name, "image label in the report");
  exp->add_flag("--no-cubes", exp_no_cubes, "skip writing denoised cubes");
  exp->add_flag("--parallel", exp_parallel, "run the noise levels concurrently");

  // bench-bands
  auto* bench = app.add_subcommand("bench-bands", "stage timings against the band count");
  std::string bench_input, bench_out;
  bool bench_no_normalize = false;
  double bench_sigma = 30.0;
  std::vector<std::size_t> bench_counts;
  std::size_t bench_rank = 5;
  std::vector<std::size_t> bench_synth;
  ConfigFlags bench_cfg;
  bench_cfg.attach(bench);
  auto* bench_src = bench->add_option("--input", bench_input, "cube header or band-image directory");
  bench->add_option("--synthetic", bench_synth, "rows,cols,bands of a synthetic low-rank cube")
      ->delimiter(',')
      ->expected(3)
      ->excludes(bench_src);
  bench->add_option("--rank", bench_rank, "rank of the synthetic cube");
  bench->add_flag("--no-normalize", bench_no_normalize, "keep raw input values");
  bench->add_option("--sigma", bench_sigma, "injected noise std");
  bench->add_option("--bands", bench_counts, "band counts (default 32,64,128,all)")->delimiter(',');
  bench->add_option("--output", bench_out, "CSV path (default: stdout)");

  // synth
  auto* syn = app.add_subcommand("synth", "write a synthetic exactly low-rank cube");
  std::vector<std::size_t> syn_dims{64, 64, 32};
  std::size_t syn_rank = 5;
  std::uint64_t syn_seed = 7;
  std::string syn_out, syn_dtype = "f32";
  syn->add_option("--dims", syn_dims, "rows,cols,bands")->delimiter(',')->expected(3);
  syn->add_option("--rank", syn_rank, "rank");
  syn->add_option("--seed", syn_seed, "seed");
  syn->add_option("--output", syn_out, "output header (.hdr) or band-image directory")->required();
  syn->add_option("--dtype", syn_dtype, "output sample type: f32 | f64 | u8 | u16");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
  }

  if (*den) {
    const DenoiseConfig cfg = den_cfg.build();
    const HsiCube y = den_in.load();
    std::vector<double> band_sigma;
    const double sigma0 = parse_sigma0(den_sigma0, y, &band_sigma);
    std::optional<HsiCube> ref;
    if (!den_ref.empty()) {
      // Same normalization and band selection as the noisy input.
      ExperimentSpec s = den_in.spec();
      s.input = den_ref;
      ref = load_input(s);
    }
    const auto res = ngmeet_denoise(y, sigma0, cfg, ref ? &*ref : nullptr);
    save(den_out, res.denoised, den_dtype);
    if (!den_trace.empty()) {
      auto out = open_out(den_trace);
      write_trace_csv(out, res.trace);
    }
    std::printf("sigma0 %.4f, initial K %zu%s, %zu iterations, stage A %.3f s, stage B %.3f s\n", sigma0,
                res.initial_k, res.k_estimate_degenerate ? " (degenerate estimate)" : "",
                res.trace.records.size(), res.trace.stage_a_sec(), res.trace.stage_b_sec());
    if (ref) print_report("denoised", assess(*ref, res.denoised));
    return 0;
  }

  if (*noise) {
    const HsiCube y = noise_in.load();
    save(noise_out, add_gaussian_noise(y, noise_sigma, noise_seed), noise_dtype);
    return 0;
  }

  if (*met) {
    const HsiCube ref = load_plain(met_ref);
    const HsiCube test = load_plain(met_test);
    const auto q = assess(ref, test, met_peak);
    print_report("metrics", q);
    std::printf("cube PSNR %.4f dB, SAM skipped pixels %zu\n", q.cube_psnr, q.sam_skipped);
    if (!met_csv.empty()) {
      auto out = open_out(met_csv);
      out << "band,psnr,ssim\n";
      out.precision(10);
      for (std::size_t b = 0; b < q.per_band_psnr.size(); ++b) {
        out << b << ',' << q.per_band_psnr[b] << ',' << q.per_band_ssim[b] << '\n';
      }
    }
    return 0;
  }

  if (*est) {
    const HsiCube y = est_in.load();
    std::vector<double> sigma;
    const auto k = initial_rank(y, &sigma);
    std::printf("K %zu%s\nmedian band sigma %.4f\n", k.k, k.degenerate ? " (degenerate)" : "",
                median_sigma(sigma));
    if (est_bands) {
      for (std::size_t b = 0; b < sigma.size(); ++b) std::printf("band %zu sigma %.4f\n", b, sigma[b]);
    }
    return 0;
  }

  if (*exp) {
    ExperimentSpec spec = exp_in.spec();
    spec.config = exp_cfg.build();
    spec.seed = spec.config.seed;
    spec.sigmas = exp_sigmas;
    spec.output_dir = exp_out;
    spec.name = exp_name;
    spec.write_cubes = !exp_no_cubes;
    spec.parallel = exp_parallel;
    fs::create_directories(spec.output_dir);
    const auto report = run_experiment(spec);
    write_report_csv(std::cout, report);
    std::size_t failed = 0;
    for (const auto& c : report.cases) failed += c.error.has_value();
    if (failed) std::fprintf(stderr, "%zu case(s) failed; see failures.csv\n", failed);
    return 0;
  }

  if (*bench) {
    const DenoiseConfig cfg = bench_cfg.build();
    HsiCube clean;
    if (!bench_synth.empty()) {
      clean = make_low_rank_cube({bench_synth[0], bench_synth[1], bench_synth[2]}, bench_rank, cfg.seed);
    } else if (!bench_input.empty()) {
      ExperimentSpec s;
      s.input = bench_input;
      s.normalize = !bench_no_normalize;
      clean = load_input(s);
    } else {
      throw usage_error("bench-bands needs --input or --synthetic");
    }
    const auto rows = bench_bands(clean, bench_sigma, cfg, cfg.seed, bench_counts);
    if (bench_out.empty()) {
      write_bench_csv(std::cout, rows);
    } else {
      auto out = open_out(bench_out);
      write_bench_csv(out, rows);
    }
    return 0;
  }

  if (*syn) {
    save(syn_out, make_low_rank_cube({syn_dims[0], syn_dims[1], syn_dims[2]}, syn_rank, syn_seed), syn_dtype);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "ngmeet: %s\n", e.what());
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "ngmeet: %s\n", e.what());
    return static_cast<int>(ErrorKind::Data);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ngmeet: %s\n", e.what());
    return static_cast<int>(ErrorKind::Numerical);
  }
}
