#include "ngmeet/config.hpp"
#include "ngmeet/error.hpp"

#include <doctest.h>

#include <sstream>

using namespace ngmeet;

namespace {

KeyValues parse(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in, "test");
}

}  // namespace

TEST_CASE("key = value parsing") {
  const auto kv = parse("# header\n\n  Delta = 3  \nlambda=0.8 # trailing\nK0 = auto\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("delta") == "3");
  CHECK(kv.at("lambda") == "0.8");
  CHECK(kv.at("k0") == "auto");
  CHECK_THROWS_AS(parse("no equals sign\n"), Error);
  CHECK_THROWS_AS(parse(" = 4\n"), Error);
}

TEST_CASE("apply_config sets every field") {
  DenoiseConfig cfg;
  apply_config(cfg, parse("k0=4\ndelta=1\nlambda=0.7\ngamma=0.4\niters=3\npatch=5\nstride=2\n"
                          "window=20\ngroup=40\nwnnm_c=3.5\nwnnm_eps=1e-12\nwnnm_scaling=columns\n"
                          "center_groups=yes\nrank_update=affine\nearly_stop=1e-4\nthreads=2\nseed=99\n"));
  CHECK(cfg.k0 == 4u);
  CHECK(cfg.delta == 1);
  CHECK(cfg.lambda == 0.7);
  CHECK(cfg.gamma == 0.4);
  CHECK(cfg.iters == 3);
  CHECK(cfg.geom.patch == 5);
  CHECK(cfg.geom.stride == 2);
  CHECK(cfg.geom.window == 20);
  CHECK(cfg.geom.group == 40);
  CHECK(cfg.wnnm.c == 3.5);
  CHECK(cfg.wnnm.eps == 1e-12);
  CHECK(cfg.wnnm.scaling == WnnmScaling::Columns);
  CHECK(cfg.center_groups);
  CHECK(cfg.rank_update == RankUpdate::Affine);
  CHECK(cfg.early_stop_tol == 1e-4);
  CHECK(cfg.threads == 2);
  CHECK(cfg.seed == 99);

  apply_config(cfg, parse("k0=auto\n"));
  CHECK_FALSE(cfg.k0.has_value());
}

TEST_CASE("apply_config rejects bad input") {
  DenoiseConfig cfg;
  CHECK_THROWS_AS(apply_config(cfg, parse("colour=blue\n")), Error);
  CHECK_THROWS_AS(apply_config(cfg, parse("delta=-1\n")), Error);
  CHECK_THROWS_AS(apply_config(cfg, parse("lambda=abc\n")), Error);
  CHECK_THROWS_AS(apply_config(cfg, parse("center_groups=maybe\n")), Error);
  CHECK_THROWS_AS(apply_config(cfg, parse("rank_update=sideways\n")), Error);
  CHECK_THROWS_AS(apply_config(cfg, parse("wnnm_scaling=rows\n")), Error);
  try {
    apply_config(cfg, parse("iters=x\n"));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Usage);
  }
}

TEST_CASE("index lists") {
  CHECK(parse_index_list("0-3,7") == std::vector<std::size_t>{0, 1, 2, 3, 7});
  CHECK(parse_index_list("5, 2-3 ,2") == std::vector<std::size_t>{2, 3, 5});
  CHECK_THROWS_AS(parse_index_list(""), Error);
  CHECK_THROWS_AS(parse_index_list("4-2"), Error);
  CHECK_THROWS_AS(parse_index_list("a"), Error);
}
