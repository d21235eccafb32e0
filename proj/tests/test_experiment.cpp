#include "ngmeet/error.hpp"
#include "ngmeet/experiment.hpp"
#include "ngmeet/io.hpp"
#include "ngmeet/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

using namespace ngmeet;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.name = "synthetic";
  spec.seed = 5;
  spec.config.geom.patch = 5;
  spec.config.geom.stride = 3;
  spec.config.geom.window = 12;
  spec.config.geom.group = 20;
  spec.config.iters = 2;
  return spec;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Everything except the wall-clock column.
std::string strip_seconds(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_CASE("empty sigma list gives an empty report") {
  const HsiCube clean = make_low_rank_cube({24, 24, 8}, 2, 1);
  const auto report = run_experiment(clean, small_spec());
  CHECK(report.cases.empty());
  std::ostringstream csv;
  write_report_csv(csv, report);
  CHECK(csv.str() == "image,sigma,mpsnr,mssim,sam_deg,seconds\n");
}

TEST_CASE("experiment cases, outputs and determinism") {
  const fs::path dir = fs::temp_directory_path() / ("ngmeet_exp_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const HsiCube clean = make_low_rank_cube({24, 24, 8}, 2, 2);

  ExperimentSpec spec = small_spec();
  spec.sigmas = {10.0, 30.0};
  spec.output_dir = dir;
  const auto report = run_experiment(clean, spec);
  REQUIRE(report.cases.size() == 2);
  CHECK(report.image == "synthetic");
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& c = report.cases[i];
    CHECK_FALSE(c.error.has_value());
    CHECK(c.seed == 5 + i);
    CHECK(c.denoised.mpsnr > c.noisy.mpsnr);
    CHECK(c.trace.records.size() == 2);
  }
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "details.csv"));
  CHECK(fs::exists(dir / "failures.csv"));
  CHECK(fs::exists(dir / "trace_synthetic_sigma10.csv"));
  CHECK(fs::exists(dir / "denoised_synthetic_sigma30.hdr"));
  CHECK(read_cube(dir / "denoised_synthetic_sigma30.hdr", {.normalize = false}).dims() == clean.dims());

  const std::string first = read_all(dir / "report.csv");
  run_experiment(clean, spec);
  CHECK(strip_seconds(read_all(dir / "report.csv")) == strip_seconds(first));

  spec.parallel = true;
  spec.output_dir.clear();
  const auto par = run_experiment(clean, spec);
  REQUIRE(par.cases.size() == 2);
  CHECK(par.cases[1].denoised.mpsnr == report.cases[1].denoised.mpsnr);
  fs::remove_all(dir);
}

TEST_CASE("a failing case is recorded and the harness continues") {
  const HsiCube clean = make_low_rank_cube({24, 24, 8}, 2, 3);
  ExperimentSpec spec = small_spec();
  spec.sigmas = {10.0};
  spec.config.geom.patch = 30;  // larger than the image
  const auto report = run_experiment(clean, spec);
  REQUIRE(report.cases.size() == 1);
  CHECK(report.cases[0].error.has_value());
  std::ostringstream failures, csv;
  write_failures_csv(failures, report);
  write_report_csv(csv, report);
  CHECK(failures.str().find("synthetic,10,") != std::string::npos);
  CHECK(csv.str() == "image,sigma,mpsnr,mssim,sam_deg,seconds\n");

  spec.sigmas = {-1.0};
  CHECK_THROWS_AS(run_experiment(clean, spec), Error);
}

TEST_CASE("load_input honours the band-keep list") {
  const fs::path dir = fs::temp_directory_path() / ("ngmeet_load_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  HsiCube cube = make_low_rank_cube({6, 6, 5}, 2, 4);
  write_cube(dir / "c.hdr", cube, SampleType::F64);
  ExperimentSpec spec;
  spec.input = dir / "c.hdr";
  spec.normalize = false;
  spec.keep_bands = {0, 3};
  const HsiCube in = load_input(spec);
  CHECK(in.bands() == 2);
  CHECK(in(2, 2, 1) == cube(2, 2, 3));
  fs::remove_all(dir);
}

TEST_CASE("bench_bands") {
  const HsiCube clean = make_low_rank_cube({20, 20, 40}, 3, 5);
  DenoiseConfig cfg = small_spec().config;
  cfg.iters = 1;
  const std::size_t one[] = {32};
  const auto rows = bench_bands(clean, 20.0, cfg, 1, one);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].bands == 32);
  CHECK(rows[0].mssim > 0.0);

  const auto all = bench_bands(clean, 20.0, cfg, 1);
  REQUIRE(all.size() == 2);
  CHECK(all[1].bands == 40);

  std::ostringstream csv;
  write_bench_csv(csv, rows);
  CHECK(csv.str().rfind("bands,initial_k,stage_a_sec,stage_b_sec,mssim\n32,", 0) == 0);

  CHECK_THROWS_AS(bench_bands(make_low_rank_cube({20, 20, 31}, 3, 5), 20.0, cfg, 1), Error);
}
