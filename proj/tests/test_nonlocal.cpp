#include "helpers.hpp"

#include "ngmeet/error.hpp"
#include "ngmeet/noise.hpp"
#include "ngmeet/nonlocal.hpp"

#include <Eigen/SVD>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>
#include <vector>

using namespace ngmeet;
using ngmeet::test::random_cube;
using ngmeet::test::random_mat;

namespace {

PatchGeometry geom(std::size_t n, std::size_t s, std::size_t w = 30, std::size_t p = 70) {
  PatchGeometry g;
  g.patch = n;
  g.stride = s;
  g.window = w;
  g.group = p;
  return g;
}

std::set<Position> grid_set(std::initializer_list<std::size_t> rows,
                            std::initializer_list<std::size_t> cols) {
  std::set<Position> out;
  for (auto r : rows)
    for (auto c : cols) out.insert({r, c});
  return out;
}

Vec singular_values(const Mat& m) { return Eigen::JacobiSVD<Mat>(m).singularValues(); }

}  // namespace

TEST_CASE("reference_grid") {
  CHECK(reference_grid(6, 6, geom(6, 4)) == std::vector<Position>{{0, 0}});

  const auto g10 = reference_grid(10, 10, geom(6, 4));
  CHECK(std::set<Position>(g10.begin(), g10.end()) == grid_set({0, 4}, {0, 4}));

  const auto g11 = reference_grid(11, 11, geom(6, 4));
  CHECK(std::set<Position>(g11.begin(), g11.end()) == grid_set({0, 4, 5}, {0, 4, 5}));
  CHECK(std::is_sorted(g11.begin(), g11.end()));

  // Every pixel lies inside some reference patch.
  for (std::size_t m : {6u, 7u, 13u, 29u}) {
    for (std::size_t s : {1u, 3u, 6u}) {
      const auto grid = reference_grid(m, m + 2, geom(6, s));
      std::vector<int> hit(m * (m + 2), 0);
      for (auto p : grid)
        for (std::size_t dr = 0; dr < 6; ++dr)
          for (std::size_t dc = 0; dc < 6; ++dc) hit[(p.col + dc) * m + p.row + dr] = 1;
      CHECK(std::count(hit.begin(), hit.end(), 0) == 0);
    }
  }

  CHECK_THROWS_AS(reference_grid(5, 10, geom(6, 4)), Error);
  CHECK_THROWS_AS(reference_grid(10, 10, geom(6, 7)), Error);
  CHECK_THROWS_AS(reference_grid(10, 10, geom(6, 0)), Error);
  CHECK_THROWS_AS(reference_grid(10, 10, geom(6, 4, 5)), Error);
  CHECK_THROWS_AS(reference_grid(10, 10, geom(6, 4, 30, 0)), Error);
}

TEST_CASE("match_group on a constant image takes candidates in row-major order") {
  const HsiCube img({20, 20, 2}, std::vector<double>(800, 7.0));
  const auto g = match_group(img, {5, 5}, geom(4, 2, 6, 10));
  REQUIRE(g.members.size() == 10);
  CHECK(g.members[0] == Position{5, 5});
  // Window rows/cols 2..8; candidates in row-major order, reference skipped.
  std::vector<Position> expected{{5, 5}};
  for (std::size_t r = 2; r <= 8 && expected.size() < 10; ++r)
    for (std::size_t c = 2; c <= 8 && expected.size() < 10; ++c)
      if (!(r == 5 && c == 5)) expected.push_back({r, c});
  CHECK(g.members == expected);
  CHECK(g.matrix.rows() == 4 * 4 * 2);
  CHECK(g.matrix.cols() == 10);
}

TEST_CASE("match_group with p = 1 returns the reference alone") {
  const HsiCube img = random_cube({12, 12, 3}, 1);
  const auto g = match_group(img, {3, 4}, geom(4, 2, 10, 1));
  CHECK(g.members == std::vector<Position>{{3, 4}});
  CHECK(g.matrix.col(0) == extract_patch(img, {3, 4}, 4));
}

TEST_CASE("planted duplicates of the reference fill the top slots") {
  HsiCube img = random_cube({24, 24, 3}, 2, 50.0);
  const Position ref{10, 10};
  const std::vector<Position> planted{{2, 3}, {4, 17}, {12, 1}, {15, 15}, {18, 6}};
  for (auto p : planted)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t dc = 0; dc < 5; ++dc)
        for (std::size_t dr = 0; dr < 5; ++dr)
          img(p.row + dr, p.col + dc, b) = img(ref.row + dr, ref.col + dc, b);

  const auto g = match_group(img, ref, geom(5, 2, 30, 12));
  REQUIRE(g.members.size() == 12);
  CHECK(g.members[0] == ref);
  std::vector<Position> top(g.members.begin() + 1, g.members.begin() + 6);
  CHECK(top == planted);  // planted list is already row-major
}

TEST_CASE("match_group agrees with a brute-force sort") {
  const HsiCube img = random_cube({26, 23, 3}, 3);
  const auto gm = geom(5, 3, 12, 25);
  for (Position ref : {Position{0, 0}, Position{10, 9}, Position{21, 18}}) {
    const auto g = match_group(img, ref, gm);
    const Vec rv = extract_patch(img, ref, 5);
    std::vector<std::tuple<double, std::size_t, std::size_t>> all;
    for (std::size_t r = 0; r + 5 <= 26; ++r)
      for (std::size_t c = 0; c + 5 <= 23; ++c) {
        const bool inside = r + 6 >= ref.row && r <= ref.row + 6 && c + 6 >= ref.col &&
                            c <= ref.col + 6;
        if (!inside || (r == ref.row && c == ref.col)) continue;
        all.emplace_back((extract_patch(img, {r, c}, 5) - rv).squaredNorm(), r, c);
      }
    std::sort(all.begin(), all.end());
    REQUIRE(g.members.size() == 25);
    CHECK(g.members[0] == ref);
    for (std::size_t j = 1; j < 25; ++j) {
      CHECK(g.members[j] == Position{std::get<1>(all[j - 1]), std::get<2>(all[j - 1])});
      CHECK(g.matrix.col(j) == extract_patch(img, g.members[j], 5));
    }
  }
}

TEST_CASE("match_group with fewer candidates than p takes them all") {
  const HsiCube img = random_cube({8, 8, 2}, 4);
  const auto g = match_group(img, {2, 2}, geom(4, 2, 30, 70));
  CHECK(g.members.size() == 25);  // 5 x 5 corner positions
  CHECK_THROWS_AS(match_group(img, {5, 2}, geom(4, 2)), Error);
}

TEST_CASE("extract_patch order: band, then column-major inside the patch") {
  HsiCube img({5, 5, 2});
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = double(i);
  const Vec v = extract_patch(img, {1, 2}, 2);
  REQUIRE(v.size() == 8);
  CHECK(v(0) == img(1, 2, 0));
  CHECK(v(1) == img(2, 2, 0));
  CHECK(v(2) == img(1, 3, 0));
  CHECK(v(3) == img(2, 3, 0));
  CHECK(v(4) == img(1, 2, 1));
  CHECK(v(7) == img(2, 3, 1));
}

TEST_CASE("wnnm_shrink hand-evaluated 2x2 example") {
  Mat g = Mat::Zero(2, 2);
  g(0, 0) = 10.0;
  g(1, 1) = 1.0;
  WnnmParams wp;
  wp.scaling = WnnmScaling::Columns;
  const double p = 2.0, sigma = 1.0, c = 2.0 * std::numbers::sqrt2, eps = 1e-16;
  CHECK(wp.c == c);
  CHECK(wp.eps == eps);

  double expected[2];
  const double s[2] = {10.0, 1.0};
  for (int j = 0; j < 2; ++j) {
    const double s_hat = std::sqrt(std::max(s[j] * s[j] - p * sigma * sigma, 0.0));
    const double w = c * std::sqrt(p) * sigma * sigma / (s_hat + eps);
    expected[j] = std::max(s[j] - w, 0.0);
  }
  // sqrt(98) estimate and weight 4/sqrt(98) on the first value; the second is killed.
  CHECK(expected[0] == doctest::Approx(10.0 - 4.0 / std::sqrt(98.0)).epsilon(1e-14));
  CHECK(expected[1] == 0.0);

  const Mat out = wnnm_shrink(g, sigma, wp, 255.0);
  CHECK(std::abs(out(0, 0) - expected[0]) < 1e-10);
  CHECK(std::abs(out(1, 1) - expected[1]) < 1e-10);
  CHECK(std::abs(out(0, 1)) < 1e-10);
  CHECK(std::abs(out(1, 0)) < 1e-10);
}

TEST_CASE("wnnm_shrink dominant scaling on a tall group") {
  const Mat g = random_mat(12, 4, 5) * 10.0;
  const double sigma = 2.0;
  WnnmParams wp;  // dominant by default
  const Vec s = singular_values(g);
  Vec expected(4);
  for (int j = 0; j < 4; ++j) {
    const double s_hat = std::sqrt(std::max(s(j) * s(j) - 12.0 * sigma * sigma, 0.0));
    expected(j) = std::max(s(j) - wp.c * std::sqrt(48.0) * sigma * sigma / (s_hat + wp.eps), 0.0);
  }
  const Vec got = singular_values(wnnm_shrink(g, sigma, wp));
  CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-9 * s(0));
}

TEST_CASE("wnnm_shrink bypass and zero input") {
  const Mat g = random_mat(9, 6, 6);
  for (auto scaling : {WnnmScaling::Columns, WnnmScaling::Dominant}) {
    WnnmParams wp;
    wp.scaling = scaling;
    CHECK(wnnm_shrink(g, 0.0, wp) == g);
    CHECK(wnnm_shrink(g, 1e-10, wp) == g);
    CHECK(wnnm_shrink(Mat::Zero(9, 6), 3.0, wp).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(wnnm_shrink(g, -1.0, WnnmParams{}), Error);
}

TEST_CASE("wnnm_shrink invariants") {
  GaussianSource rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 3 + trial % 7, p = 2 + (trial * 5) % 9;
    Mat g = random_mat(d, p, 100 + trial) * 20.0;
    if (trial % 3 == 0) g.col(0) = g.col(1);  // rank deficient
    const double sigma = 1.0 + trial;
    for (auto scaling : {WnnmScaling::Columns, WnnmScaling::Dominant}) {
      WnnmParams wp;
      wp.scaling = scaling;
      const Vec s = singular_values(g);
      const Mat out = wnnm_shrink(g, sigma, wp);
      const Vec so = singular_values(out);
      for (Eigen::Index j = 0; j < so.size(); ++j) CHECK(so(j) <= s(j) * (1 + 1e-12) + 1e-12);

      const auto rank = [](const Vec& v) { return (v.array() > 1e-9 * std::max(v(0), 1.0)).count(); };
      CHECK(rank(so) <= rank(s));

      const Mat q = random_orthonormal(d, d, rng);
      const Mat r = random_orthonormal(p, p, rng);
      const Vec sr = singular_values(wnnm_shrink(q * g * r, sigma, wp));
      CHECK((sr - so).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, s(0)));

      const double big = s(0) / std::sqrt(double(p)) * 1.0001;
      CHECK(wnnm_shrink(g, big, wp).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("aggregate: one group covering the image reproduces it") {
  const HsiCube img = random_cube({6, 6, 2}, 8);
  PatchGroup g;
  g.ref = {0, 0};
  g.members = {{0, 0}};
  g.matrix = extract_patch(img, {0, 0}, 6);
  const std::vector<GroupResult> groups{{g, g.matrix}};
  CHECK(aggregate(groups, img.dims(), 6).storage() == img.storage());
}

TEST_CASE("aggregate averages overlaps") {
  PatchGroup g;
  g.members = {{0, 0}, {0, 2}};
  Mat values(9, 2);
  values.col(0).setConstant(3.0);
  values.col(1).setConstant(8.0);
  g.matrix = values;
  const std::vector<GroupResult> groups{{g, values}};
  const HsiCube out = aggregate(groups, {3, 5, 1}, 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(out(r, 0, 0) == 3.0);
    CHECK(out(r, 1, 0) == 3.0);
    CHECK(out(r, 2, 0) == 5.5);
    CHECK(out(r, 3, 0) == 8.0);
    CHECK(out(r, 4, 0) == 8.0);
  }
}

TEST_CASE("aggregate matches a naive scatter-add and ignores group order") {
  const CubeDims dims{11, 9, 2};
  const std::size_t n = 3;
  GaussianSource rng(9);
  std::vector<GroupResult> groups;
  for (int gi = 0; gi < 30; ++gi) {
    GroupResult gr;
    const int members = 1 + gi % 5;
    for (int j = 0; j < members; ++j) {
      gr.group.members.push_back({std::size_t(rng.uniform() * 9), std::size_t(rng.uniform() * 7)});
    }
    gr.group.ref = gr.group.members[0];
    gr.denoised = random_mat(n * n * 2, members, 500 + gi);
    groups.push_back(gr);
  }
  // Guarantee coverage with a tiling group.
  GroupResult tile;
  for (std::size_t r : {0u, 3u, 6u, 8u})
    for (std::size_t c : {0u, 3u, 6u}) tile.group.members.push_back({r, c});
  tile.group.ref = tile.group.members[0];
  tile.denoised = random_mat(n * n * 2, Eigen::Index(tile.group.members.size()), 999);
  groups.push_back(tile);

  std::vector<double> sum(dims.size(), 0.0), count(dims.pixels(), 0.0);
  for (const auto& gr : groups) {
    for (std::size_t j = 0; j < gr.group.members.size(); ++j) {
      const Position p = gr.group.members[j];
      std::size_t i = 0;
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t dc = 0; dc < n; ++dc)
          for (std::size_t dr = 0; dr < n; ++dr) {
            const std::size_t px = (p.col + dc) * dims.rows + p.row + dr;
            sum[b * dims.pixels() + px] += gr.denoised(Eigen::Index(i++), Eigen::Index(j));
            if (b == 0) count[px] += 1.0;
          }
    }
  }
  const HsiCube out = aggregate(groups, dims, n);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t px = 0; px < dims.pixels(); ++px)
      CHECK(out.data()[b * dims.pixels() + px] == sum[b * dims.pixels() + px] / count[px]);

  // Permute, then normalize the order back by original index.
  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = (i * 7 + 3) % order.size();
  std::vector<std::pair<std::size_t, GroupResult>> permuted;
  for (auto i : order) permuted.emplace_back(i, groups[i]);
  std::sort(permuted.begin(), permuted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<GroupResult> shuffled;
  for (auto& [i, gr] : permuted) shuffled.push_back(gr);
  CHECK(aggregate(shuffled, dims, n).storage() == out.storage());
}

TEST_CASE("aggregate reports coverage gaps") {
  PatchGroup g;
  g.members = {{0, 0}};
  const std::vector<GroupResult> groups{{g, Mat::Ones(4, 1)}};
  try {
    aggregate(groups, {3, 3, 1}, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("coverage gap") != std::string::npos);
  }
}

TEST_CASE("spatial pass with sigma 0 is the identity") {
  const HsiCube img = random_cube({23, 21, 3}, 10, 40.0);
  SpatialOptions opts;
  opts.geom = geom(5, 3, 12, 16);
  const HsiCube out = denoise_reduced(img, 0.0, opts);
  CHECK(ngmeet::test::rel_diff(out, img) < 1e-9);
}

TEST_CASE("spatial pass is independent of the thread count") {
  const HsiCube img = random_cube({30, 28, 3}, 11, 40.0);
  SpatialOptions opts;
  opts.geom = geom(5, 2, 14, 20);
  const HsiCube serial = denoise_reduced(img, 15.0, opts);
  opts.threads = 3;
  CHECK(denoise_reduced(img, 15.0, opts).storage() == serial.storage());
  opts.center_groups = true;
  CHECK(denoise_reduced(img, 15.0, opts).all_finite());
}
