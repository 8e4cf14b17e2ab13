#include <cmath>
#include <random>

#include "cilayer/baseline.hpp"
#include "cilayer/calibration.hpp"
#include "cilayer/layered_scalar.hpp"
#include "doctest.h"

using namespace cilayer;

TEST_CASE("layered codebook invariants") {
  const auto src = ScalarSource::laplacian(1.0);
  const auto cb = make_layered_codebook(src, {-kInf, -1.0, 0.5, kInf}, 3);
  CHECK_NOTHROW(cb.validate());
  CHECK(cb.intervals() == 3);
  const auto q = cb.overall(0);
  CHECK(q.cells() == 9);
  double total = 0.0;
  for (double p : q.probs) total += p;
  CHECK(total == doctest::Approx(1.0));
  // Refinements must tile their common interval.
  auto bad = cb;
  bad.layers[1][1].boundaries.front() = -0.9;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("layered record: receive rate is common plus conditional entropy") {
  const auto src = ScalarSource::uniform(0.0, 6.0);
  const auto cb = layered_from_partitions(src, {0.0, 3.0, 6.0},
                                          {{0.0, 1.5, 3.0, 4.5, 6.0}, {0, 1, 2, 3, 4, 5, 6}});
  const auto w = CostWeights::with_sharing({0.1, 0.1}, 0.0);
  const auto r = evaluate_layered(cb, src, w);
  CHECK(r.rate("12") == doctest::Approx(1.0));
  CHECK(r.rate("1") == doctest::Approx(1.0));
  CHECK(r.rate("2") == doctest::Approx(std::log2(3.0)));
  CHECK(r.distortion[0] == doctest::Approx(1.5 * 1.5 / 12.0));
  CHECK(r.distortion[1] == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("uniform toy: joint design recovers the nested partitions") {
  const auto src = ScalarSource::uniform(0.0, 6.0);
  JointScalarOptions opt;
  opt.tol = 1e-15;
  opt.inner.tol = 1e-15;
  auto design = [&](const CostWeights& w) { return joint_design_scalar(src, w, opt).record; };
  const auto cal = calibrate_weights(design, {2.0, std::log2(6.0)}, 1.0, {0.2, 0.05});
  REQUIRE(cal.converged);
  const auto res = joint_design_scalar(src, cal.weights, opt);
  const auto& cb = res.codebook;
  REQUIRE(cb.common_boundaries.size() == 3);
  CHECK(cb.common_boundaries[1] == doctest::Approx(3.0).epsilon(1e-6));
  const auto q1 = cb.overall(0), q2 = cb.overall(1);
  REQUIRE(q1.cells() == 4);
  REQUIRE(q2.cells() == 6);
  for (std::size_t k = 0; k <= 4; ++k) CHECK(std::abs(q1.boundaries[k] - 1.5 * k) < 1e-6);
  for (std::size_t k = 0; k <= 6; ++k) CHECK(std::abs(q2.boundaries[k] - 1.0 * k) < 1e-6);
}

TEST_CASE("zero common rate decouples into two ecsq designs") {
  const auto src = ScalarSource::laplacian(1.0);
  const auto curve = scalar_baseline(src, {});
  auto design = [&](const CostWeights& w) { return joint_design_scalar(src, w, {}).record; };
  const auto cal = calibrate_weights(design, {2.0, 3.0}, 0.0, {0.1, 0.03});
  REQUIRE(cal.converged);
  CHECK(cal.record.common_rate() < 1e-9);
  for (std::size_t l = 0; l < 2; ++l) {
    const double lam = cal.weights.lambda_private[l];
    const double dstar = curve.distortion_at(cal.record.receive_rates[l]);
    CHECK(std::abs(to_db(cal.record.distortion[l]) - to_db(dstar)) < 0.1);
    // Each layer is at least as good as a stand-alone ECSQ at its lambda.
    const double own = cal.record.distortion[l] + lam * cal.record.receive_rates[l];
    for (std::size_t n : {4u, 8u, 16u, 32u, 64u}) {
      const auto e = evaluate_scalar(design_ecsq(src, 1.0, lam, n), src);
      CHECK(own <= e.distortion + lam * e.rate + 1e-9);
    }
  }
}

TEST_CASE("joint scalar cost is non-increasing across guarded sweeps") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 8; ++t) {
    const auto src = ScalarSource::laplacian(0.5 + u(rng));
    const auto w = CostWeights::with_sharing({std::pow(10.0, -1.5 * u(rng)), std::pow(10.0, -2.0 * u(rng))},
                                             0.8 * u(rng));
    JointScalarOptions opt;
    opt.restarts = 2;
    opt.seed = static_cast<std::uint64_t>(t);
    const auto res = joint_design_scalar(src, w, opt);
    const auto& c = res.trace.cost;
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] <= c[i - 1] + 1e-12 * std::abs(c[i - 1]));
    CHECK_NOTHROW(res.codebook.validate());
    CHECK(res.record.cost == doctest::Approx(c.back()).epsilon(1e-9));
  }
}

TEST_CASE("common update alone never raises the cost") {
  const auto src = ScalarSource::laplacian(1.0);
  const auto w = CostWeights::with_sharing({0.05, 0.02}, 0.4);
  auto cb = design_individual_layers(make_layered_codebook(src, {-kInf, -1.2, -0.1, 0.7, 2.0, kInf}, 4),
                                     src, w);
  double prev = evaluate_layered(cb, src, w).cost;
  for (int it = 0; it < 10; ++it) {
    CommonUpdateReport rep;
    cb = update_common_boundaries(cb, src, w, &rep);
    const double c = evaluate_layered(cb, src, w).cost;
    CHECK(c <= prev + 1e-12);
    prev = c;
    cb = design_individual_layers(cb, src, w);
    const double c2 = evaluate_layered(cb, src, w).cost;
    CHECK(c2 <= prev + 1e-12);
    prev = c2;
  }
}
