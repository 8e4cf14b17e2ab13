#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "cilayer/error.hpp"
#include "cilayer/serialization.hpp"
#include "doctest.h"

using namespace cilayer;

namespace {

SweepConfig toy_config() {
  SweepConfig c;
  c.source.kind = "uniform";
  c.source.a = 0.0;
  c.source.b = 6.0;
  c.targets = {2.0, std::log2(6.0)};
  c.r_common_grid = {0.0, 1.0};
  c.designer = DesignerKind::JointScalar;
  c.tol = 1e-15;
  c.restarts = 2;
  return c;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("toy sweep rows and csv") {
  auto cfg = toy_config();
  cfg.keep_codebooks = true;
  const auto res = sweep(cfg);
  REQUIRE(res.rows.size() == 2);
  for (const auto& row : res.rows) CHECK(row.ok);
  CHECK(res.rows[0].record.common_rate() < 1e-9);
  CHECK(res.rows[1].record.transmit_rate == doctest::Approx(2.0 + std::log2(3.0)).epsilon(1e-4));
  REQUIRE(res.rows[1].scalar_codebook);
  const std::string csv = format_csv(res);
  std::stringstream ss(csv);
  std::string header, line;
  std::getline(ss, header);
  const auto cols = split(header);
  CHECK(cols.front() == "designer");
  std::size_t rt = cols.size(), red = cols.size();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "Rt") rt = i;
    if (cols[i] == "reduction_pct") red = i;
  }
  REQUIRE(rt < cols.size());
  REQUIRE(red < cols.size());
  std::getline(ss, line);
  std::getline(ss, line);
  const auto f = split(line);
  REQUIRE(f.size() == cols.size());
  CHECK(std::stod(f[rt]) == doctest::Approx(3.58496).epsilon(1e-5));
  CHECK(std::stod(f[red]) == doctest::Approx(21.8104).epsilon(1e-4));
  // Six significant digits.
  CHECK(f[rt] == "3.58496");
}

TEST_CASE("sweep output is reproducible") {
  const auto a = format_csv(sweep(toy_config()));
  const auto b = format_csv(sweep(toy_config()));
  CHECK(a == b);
}

TEST_CASE("config parsing and validation") {
  const auto j = parse_json(R"({"source": {"kind": "laplacian", "lambda": 1},
    "targets": [2, 3], "r_common_grid": {"start": 0, "stop": 1, "step": 0.25},
    "designer": "laplacian_fast"})");
  const auto c = sweep_config_from_json(j);
  CHECK(c.r_common_grid == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(c.designer == DesignerKind::LaplacianFast);
  const auto back = sweep_config_from_json(to_json(c));
  CHECK(back.r_common_grid == c.r_common_grid);
  CHECK(back.targets == c.targets);

  auto bad = j;
  bad["bogus"] = 1;
  CHECK_THROWS_AS(sweep_config_from_json(bad), Error);
  bad = j;
  bad["designer"] = "nope";
  CHECK_THROWS_AS(sweep_config_from_json(bad), Error);
  auto cfg = c;
  cfg.r_common_grid = {2.5};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = c;
  cfg.targets = {2.0, 3.0, 4.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  try {
    sweep_config_from_json(parse_json(R"({"targets": [1, 2]})"));
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}

TEST_CASE("codebook json round trips") {
  const auto src = ScalarSource::laplacian(1.0);
  const auto cb = make_layered_codebook(src, {-kInf, -0.5, 1.0, kInf}, 3);
  const auto back = layered_scalar_from_json(parse_json(to_json(cb).dump()));
  CHECK(back.common_boundaries == cb.common_boundaries);
  CHECK(back.layers[1][2].reps == cb.layers[1][2].reps);
  CHECK_NOTHROW(back.validate());

  const auto s = draw_training_set(VectorSource::gaussian({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}), 500, 1);
  JointVqOptions opt;
  opt.m_init = 4;
  opt.m_sub = 2;
  opt.n_init = 3;
  const auto v = initial_vq_codebook(s, PacketTopology::nested_chain(3), opt, 2);
  const auto vb = layered_vq_from_json(parse_json(to_json(v).dump()));
  REQUIRE(vb.leaves.size() == v.leaves.size());
  CHECK_NOTHROW(vb.validate());
  const auto w = CostWeights::with_sharing({0.1, 0.1, 0.1}, 0.2);
  CHECK(assign_all(s, vb, w).cost == doctest::Approx(assign_all(s, v, w).cost).epsilon(1e-12));

  const auto wb = weights_from_json(to_json(w));
  CHECK(wb.lambda_common == w.lambda_common);
  CHECK(number_from_json(number_to_json(-kInf)) == -kInf);
}

TEST_CASE("training csv round trip") {
  const auto s = draw_training_set(VectorSource::gaussian({0.0, 1.0}, {1.0, 1.0, 1.0, 2.0}), 50, 1);
  const auto path = (std::filesystem::temp_directory_path() / "cilayer_train_test.csv").string();
  write_training_csv(s, path);
  const auto back = read_training_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.data().size(); ++i) CHECK(back.data()[i] == s.data()[i]);
  CHECK_THROWS_AS(read_training_csv("/nonexistent/x.csv"), Error);
}
