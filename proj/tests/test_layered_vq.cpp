#include <cmath>
#include <random>

#include "cilayer/layered_vq.hpp"
#include "doctest.h"

using namespace cilayer;

namespace {

TrainingSet gaussian_samples(std::size_t n, std::uint64_t seed) {
  return draw_training_set(VectorSource::gaussian({0.0, 1.0}, {1.0, 1.0, 1.0, 2.0}), n, seed);
}

double sq(std::span<const double> x, const std::vector<double>& c) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - c[i]) * (x[i] - c[i]);
  return d;
}

// Reference: enumerate every root, child and leaf combination explicitly.
double brute_force_cost(std::span<const double> x, const LayeredVQCodebook& cb, const CostWeights& w) {
  const auto& topo = cb.topology;
  const std::size_t L = cb.decoders();
  double best = kInf;
  auto leaf_term = [&](const VqCommonNode& node, std::size_t slot, std::size_t decoder, double& out) {
    double b = kInf;
    for (std::size_t li : node.leaves[slot]) {
      const auto& leaf = cb.leaves[li];
      if (!(leaf.prob > 0.0)) continue;
      b = std::min(b, w.a[decoder] * sq(x, leaf.rep) -
                          w.packet_weight(topo, decoder) * std::log2(leaf.prob / node.prob));
    }
    out = b;
  };
  for (std::size_t r : cb.roots()) {
    const auto& root = cb.nodes[r];
    if (!(root.prob > 0.0)) continue;
    const double head = -w.packet_weight(topo, topo.common_packet(0)) * std::log2(root.prob);
    if (L == 2) {
      double t0, t1;
      leaf_term(root, 0, 0, t0);
      leaf_term(root, 1, 1, t1);
      best = std::min(best, head + t0 + t1);
    } else {
      double t0;
      leaf_term(root, 0, 0, t0);
      for (std::size_t c : root.children) {
        const auto& child = cb.nodes[c];
        if (!(child.prob > 0.0)) continue;
        double t1, t2;
        leaf_term(child, 0, 1, t1);
        leaf_term(child, 1, 2, t2);
        const double mid = -w.packet_weight(topo, topo.common_packet(1)) * std::log2(child.prob / root.prob);
        best = std::min(best, head + t0 + mid + t1 + t2);
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("assignment is the exhaustive minimum") {
  const auto s = gaussian_samples(400, 2);
  for (std::size_t L : {2u, 3u}) {
    const auto topo = PacketTopology::nested_chain(L);
    JointVqOptions opt;
    opt.m_init = 5;
    opt.m_sub = 3;
    opt.n_init = 4;
    auto cb = initial_vq_codebook(s, topo, opt, 9);
    // Uneven probabilities make the rate terms matter.
    cb = update_codebooks(s, cb, assign_all(s, cb, CostWeights::with_sharing(std::vector<double>(L, 0.3), 0.2)));
    const auto w = CostWeights::with_sharing(std::vector<double>(L, 0.4), 0.3);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double c = 0.0;
      assign_sample(s.point(i), cb, w, &c);
      CHECK(c == doctest::Approx(brute_force_cost(s.point(i), cb, w)).epsilon(1e-12));
    }
  }
}

TEST_CASE("update: reps are leaf means and probabilities are frequencies") {
  const auto s = gaussian_samples(1000, 3);
  const auto topo = PacketTopology::nested_chain(2);
  auto cb = initial_vq_codebook(s, topo, {}, 1);
  const auto w = CostWeights::with_sharing({0.2, 0.1}, 0.3);
  const auto a = assign_all(s, cb, w);
  const auto up = update_codebooks(s, cb, a);
  CHECK_NOTHROW(up.validate());
  // J after the update is not above J before it (center and frequency steps).
  const auto before = evaluate_vq(s, cb, a, w).cost;
  const auto a2 = assign_all(s, up, w);
  CHECK(evaluate_vq(s, up, a2, w).cost <= before + 1e-12);
  double mass = 0.0;
  for (std::size_t r : up.roots()) mass += up.nodes[r].prob;
  CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("joint vq cost is non-increasing per round") {
  const auto s = gaussian_samples(3000, 4);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    const std::size_t L = t % 2 ? 3 : 2;
    std::vector<double> lam;
    for (std::size_t l = 0; l < L; ++l) lam.push_back(std::pow(10.0, -1.0 - u(rng)));
    const auto w = CostWeights::with_sharing(lam, 0.6 * u(rng));
    JointVqOptions opt;
    opt.restarts = 1;
    opt.seed = static_cast<std::uint64_t>(t + 1);
    const auto res = joint_design_vq(s, w, PacketTopology::nested_chain(L), opt);
    const auto& c = res.trace.cost;
    REQUIRE(c.size() >= 2);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] <= c[i - 1] + 1e-12 * std::abs(c[i - 1]));
    CHECK_NOTHROW(res.codebook.validate());
  }
}

TEST_CASE("ecvq rate and distortion") {
  const auto s = gaussian_samples(5000, 5);
  const auto one = design_ecvq(s, 1.0, 0.1, sample_reps(s, 1, 1));
  CHECK(one.rate == doctest::Approx(0.0));
  CHECK(std::abs(one.distortion - 3.0) < 0.1);  // trace of the covariance
  const auto many = design_ecvq(s, 1.0, 0.05, sample_reps(s, 64, 1));
  CHECK(many.rate > 2.0);
  CHECK(many.distortion < one.distortion);
  for (std::size_t i = 1; i < many.trace.size(); ++i) CHECK(many.trace[i] <= many.trace[i - 1] + 1e-12);
}

TEST_CASE("nested seed from single-decoder codebooks") {
  const auto s = gaussian_samples(5000, 6);
  const auto coarse = design_ecvq(s, 1.0, 0.3, sample_reps(s, 8, 1));
  const auto f1 = design_ecvq(s, 1.0, 0.1, sample_reps(s, 32, 2));
  const auto f2 = design_ecvq(s, 1.0, 0.03, sample_reps(s, 64, 3));
  const auto cb = nested_vq_seed(PacketTopology::nested_chain(2), {&coarse}, {&f1, &f2});
  CHECK_NOTHROW(cb.validate());
  CHECK(cb.common_cells(0) == coarse.reps.size());
}
