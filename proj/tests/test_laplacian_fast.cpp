#include <cmath>

#include "cilayer/baseline.hpp"
#include "cilayer/laplacian_fast.hpp"
#include "doctest.h"

using namespace cilayer;

TEST_CASE("alignment of nested dead-zone quantizers") {
  const auto src = ScalarSource::laplacian(1.0);
  // Coarse: step 2, dead zone 4 (z = 2); fine: step 1, dead zone 2 (z = 2).
  // The coarse dead zone holds 2n+1 = 3 fine cells, other cells m+1 = 2.
  const auto coarse = make_dzq(src, {2.0, 2.0}, 20);
  const auto fine = make_dzq(src, {1.0, 2.0}, 40);
  const auto rep = check_alignment(coarse, fine);
  CHECK(rep.aligned);
  CHECK(rep.n == 1);
  CHECK(rep.m == 1);
  CHECK(rep.max_misalignment < 1e-9);
  const auto off = make_dzq(src, {1.0, 1.7}, 40);
  CHECK_FALSE(check_alignment(coarse, off).aligned);
}

TEST_CASE("conditional initialization") {
  const auto src = ScalarSource::laplacian(1.0);
  const std::vector<double> common{-kInf, -1.5, 1.5, kInf};
  const DzqShape fine{0.5, 1.5};
  const auto cb = conditional_init(src, common, {fine, fine});
  CHECK_NOTHROW(cb.validate());
  // Inside the interval holding zero the refinement follows the dead zone.
  const auto& mid = cb.layers[0][1].boundaries;
  bool has_edge = false;
  for (double t : mid) has_edge = has_edge || std::abs(t - fine.dead_zone_half_width()) < 1e-12;
  CHECK(has_edge);
  // Elsewhere uniform cells of the fine step.
  const auto& right = cb.layers[0][2].boundaries;
  CHECK(right[1] - right[0] == doctest::Approx(0.5));
}

TEST_CASE("fast design: endpoints and rate calibration") {
  const auto src = ScalarSource::laplacian(1.0);
  ScalarBaselineOptions bo;
  bo.max_rate = 4.0;
  const auto curve = scalar_baseline(src, bo);
  FastOptions opt;
  opt.r12_grid = {0.0, 0.4};
  const auto res = design_fast(src, 1.6, 2.8, curve, opt);
  REQUIRE(res.points.size() == 2);
  for (const auto& p : res.points) {
    REQUIRE(p.feasible);
    CHECK(std::abs(p.record.receive_rates[0] - 1.6) <= 0.05);
    CHECK(std::abs(p.record.receive_rates[1] - 2.8) <= 0.05);
    CHECK_NOTHROW(p.codebook.validate());
  }
  CHECK(res.points[0].record.common_rate() < 1e-9);
  CHECK(std::abs(res.points[1].record.common_rate() - 0.4) < 0.05);
  CHECK(res.points[0].record.excess_distortion_db < 0.05);
}
