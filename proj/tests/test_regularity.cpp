#include <cmath>
#include <random>

#include "cilayer/regularity.hpp"
#include "doctest.h"

using namespace cilayer;

namespace {

// Three tight clusters on a line; the outer two share one common cell.
struct Irregular {
  TrainingSet samples;
  LayeredVQCodebook codebook;
};

Irregular irregular_codebook(std::size_t per_cluster, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<double> xs;
  for (double cx : {-5.0, 0.0, 5.0})
    for (std::size_t i = 0; i < per_cluster; ++i) {
      xs.push_back(cx + n(rng));
      xs.push_back(n(rng));
    }
  Irregular out{TrainingSet(2, std::move(xs)), {}};
  auto& cb = out.codebook;
  cb.dim = 2;
  cb.nodes.resize(2);
  for (auto& node : cb.nodes) node.leaves.resize(2);
  auto leaf = [&](std::size_t decoder, std::size_t node, double x) {
    cb.nodes[node].leaves[decoder].push_back(cb.leaves.size());
    cb.leaves.push_back({decoder, node, 0.0, {x, 0.0}});
  };
  for (std::size_t d = 0; d < 2; ++d) {
    leaf(d, 0, -5.0);
    leaf(d, 0, 5.0);
    leaf(d, 1, 0.0);
  }
  cb.nodes[0].prob = 2.0 / 3.0;
  cb.nodes[1].prob = 1.0 / 3.0;
  for (auto& l : cb.leaves) l.prob = 1.0 / 3.0;
  return out;
}

}  // namespace

TEST_CASE("split of a disconnected common cell keeps distortion and receive rates") {
  const auto ir = irregular_codebook(300, 1);
  const auto w = CostWeights::with_sharing({0.05, 0.05}, 0.3);
  const auto a = assign_all(ir.samples, ir.codebook, w);
  const auto obs = observed_codebook(ir.codebook, ir.samples, a);
  const auto before = evaluate_vq(ir.samples, obs.codebook, obs.assignment, w);
  std::vector<std::size_t> group(ir.samples.size(), 0);
  for (std::size_t i = 0; i < ir.samples.size(); ++i) group[i] = ir.samples.point(i)[0] > 0.0 ? 1 : 0;
  const auto split = split_common_region(obs.codebook, ir.samples, obs.assignment, 0, group);
  CHECK_NOTHROW(split.codebook.validate());
  CHECK(split.codebook.common_cells(0) == 3);
  const auto after = evaluate_vq(ir.samples, split.codebook, split.assignment, w);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(std::abs(after.distortion[l] - before.distortion[l]) <= 1e-12);
    CHECK(std::abs(after.receive_rates[l] - before.receive_rates[l]) <= 1e-12);
  }
  CHECK(after.common_rate() > before.common_rate());
  CHECK(after.cost < before.cost);
}

TEST_CASE("audit flags the disconnected region and explains it") {
  const auto ir = irregular_codebook(300, 2);
  const auto w = CostWeights::with_sharing({0.05, 0.05}, 0.3);
  const auto rep = regularity_audit(ir.codebook, ir.samples, w);
  REQUIRE(rep.regions.size() == 2);
  CHECK(rep.disconnected == 1);
  CHECK(rep.unexplained == 0);
  CHECK(rep.regions[0].disconnected);
  CHECK(rep.regions[0].components == 2);
  CHECK(rep.regions[0].preserved);
  CHECK(rep.regions[0].cost_after < rep.regions[0].cost_before);
  CHECK_FALSE(rep.regions[1].disconnected);
}

TEST_CASE("converged designs have connected common regions") {
  const auto s = draw_training_set(VectorSource::gaussian({0.0, 1.0}, {1.0, 1.0, 1.0, 2.0}), 4000, 3);
  const auto w = CostWeights::with_sharing({0.08, 0.03}, 0.4);
  JointVqOptions opt;
  opt.restarts = 1;
  const auto res = joint_design_vq(s, w, PacketTopology::nested_chain(2), opt);
  const auto rep = regularity_audit(res.codebook, s, w);
  CHECK(rep.unexplained == 0);
}
