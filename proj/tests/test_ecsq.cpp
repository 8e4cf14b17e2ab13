#include <cmath>
#include <random>

#include "cilayer/baseline.hpp"
#include "cilayer/dzq.hpp"
#include "cilayer/ecsq.hpp"
#include "doctest.h"

using namespace cilayer;

TEST_CASE("ecsq at zero rate price is Lloyd: uniform source gives equal cells") {
  const auto src = ScalarSource::uniform(0.0, 6.0);
  const auto q = design_ecsq(src, 1.0, 0.0, 6);
  REQUIRE(q.cells() == 6);
  for (std::size_t k = 0; k <= 6; ++k) CHECK(q.boundaries[k] == doctest::Approx(static_cast<double>(k)));
  const auto e = evaluate_scalar(q, src);
  CHECK(e.distortion == doctest::Approx(1.0 / 12.0));
  CHECK(e.rate == doctest::Approx(std::log2(6.0)));
}

TEST_CASE("ecsq boundary rule on a two-cell uniform quantizer") {
  // With uneven cells the rule shifts the boundary toward the smaller cell;
  // the fixed point of a two-cell design on U(0,1) is the midpoint.
  const auto src = ScalarSource::uniform(0.0, 1.0);
  ScalarQuantizer init = quantizer_from_boundaries(src, {0.0, 0.3, 1.0});
  const auto q = ecsq_refine(src, init, 1.0, 0.01);
  REQUIRE(q.cells() == 2);
  CHECK(std::abs(q.boundaries[1] - 0.5) < 1e-4);
}

TEST_CASE("ecsq cost is non-increasing per iteration") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const auto src = ScalarSource::laplacian(0.5 + u(rng));
    EcsqTrace trace;
    const double lambda = std::pow(10.0, -2.0 * u(rng));
    design_ecsq(src, 1.0, lambda, 4 + t, std::nullopt, {}, &trace);
    for (std::size_t i = 1; i < trace.cost.size(); ++i)
      CHECK(trace.cost[i] <= trace.cost[i - 1] + 1e-12 * std::abs(trace.cost[i - 1]));
  }
}

TEST_CASE("rate-matched ecsq hits its target") {
  // Low rates fall in gaps of the operational ECSQ curve and are not tested.
  const auto src = ScalarSource::laplacian(1.0);
  for (double r : {1.5, 2.0, 2.5, 4.0}) {
    const auto m = design_ecsq_at_rate(src, r, 32);
    CHECK(std::abs(m.rate - r) < 1e-3);
    CHECK(m.distortion < src.variance());
  }
}

TEST_CASE("dead-zone quantizer") {
  const auto src = ScalarSource::laplacian(1.0);
  const auto d = design_dzq(src, 2.0);
  CHECK(std::abs(d.rate - 2.0) < 1e-3);
  CHECK(d.shape.ratio >= 1.0);
  // Symmetric about zero with a central cell of z * step.
  const auto& b = d.quantizer.boundaries;
  const std::size_t mid = b.size() / 2;
  CHECK(b[mid] - b[mid - 1] == doctest::Approx(d.shape.ratio * d.shape.step));
  CHECK(b[mid] == doctest::Approx(-b[mid - 1]));
  // The best dead-zone quantizer is near the unconstrained ECSQ at this rate.
  const auto e = design_ecsq_at_rate(src, 2.0, 32);
  CHECK(to_db(d.distortion) - to_db(e.distortion) < 0.05);
  CHECK(uniform_boundaries_within(0.5, 0.0, 2.0, 10.0) == std::vector<double>{0.5, 1.0, 1.5});
}

TEST_CASE("scalar baseline is a decreasing convex hull") {
  const auto src = ScalarSource::laplacian(1.0);
  ScalarBaselineOptions opt;
  opt.max_rate = 4.0;
  const auto curve = scalar_baseline(src, opt);
  const auto& h = curve.hull();
  REQUIRE(h.size() >= 3);
  CHECK(curve.min_rate() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(h.front().distortion == doctest::Approx(src.variance()));
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i].distortion < h[i - 1].distortion);
  for (std::size_t i = 2; i < h.size(); ++i) {
    const double s0 = (h[i - 1].distortion - h[i - 2].distortion) / (h[i - 1].rate - h[i - 2].rate);
    const double s1 = (h[i].distortion - h[i - 1].distortion) / (h[i].rate - h[i - 1].rate);
    CHECK(s1 >= s0 - 1e-12);
  }
  // Geometric interpolation stays at or below the chord.
  for (std::size_t i = 1; i < h.size(); ++i) {
    const double r = 0.5 * (h[i - 1].rate + h[i].rate);
    CHECK(curve.distortion_at(r) <= 0.5 * (h[i - 1].distortion + h[i].distortion) + 1e-15);
  }
  CHECK_THROWS(curve.distortion_at(curve.max_rate() + 1.0));
}
