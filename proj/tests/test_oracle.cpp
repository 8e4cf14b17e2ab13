#include <cmath>

#include "cilayer/oracle.hpp"
#include "doctest.h"

using namespace cilayer;

namespace {

// Independent enumeration by bitmask: bit g set means a cut in gap g. Layer
// cuts must contain the common cuts.
double bitmask_optimum(const ScalarSource& src, const CostWeights& w) {
  const std::size_t gaps = src.atoms().size() - 1;
  const unsigned all = 1u << gaps;
  auto cuts_of = [&](unsigned mask) {
    AtomCuts c;
    for (std::size_t g = 0; g < gaps; ++g)
      if (mask & (1u << g)) c.push_back(g + 1);
    return c;
  };
  double best = kInf;
  for (unsigned c = 0; c < all; ++c)
    for (unsigned l1 = 0; l1 < all; ++l1) {
      if ((l1 & c) != c) continue;
      for (unsigned l2 = 0; l2 < all; ++l2) {
        if ((l2 & c) != c) continue;
        const auto cb = codebook_from_cuts(src, cuts_of(c), {cuts_of(l1), cuts_of(l2)});
        best = std::min(best, evaluate_layered(cb, src, w).cost);
      }
    }
  return best;
}

}  // namespace

TEST_CASE("oracle agrees with bitmask enumeration") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto inst = random_oracle_instance(seed, 5);
    const auto o = brute_force_layered_oracle(inst.source, inst.weights);
    CHECK(o.cost == doctest::Approx(bitmask_optimum(inst.source, inst.weights)).epsilon(1e-12));
    CHECK(o.record.cost == doctest::Approx(o.cost).epsilon(1e-12));
    CHECK_NOTHROW(o.codebook.validate());
  }
}

TEST_CASE("joint design reaches the oracle on small sources") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = random_oracle_instance(seed, 6);
    const auto o = brute_force_layered_oracle(inst.source, inst.weights);
    const auto j = joint_design_scalar(inst.source, inst.weights, {});
    const double gap = (j.record.cost - o.cost) / std::abs(o.cost);
    CHECK(gap <= 0.01);
    CHECK(gap >= -1e-9);
  }
}

TEST_CASE("oracle instances are seeded") {
  const auto a = random_oracle_instance(4, 7), b = random_oracle_instance(4, 7);
  CHECK(std::equal(a.source.atoms().begin(), a.source.atoms().end(), b.source.atoms().begin()));
  CHECK(a.weights.lambda_private == b.weights.lambda_private);
  CHECK(a.source.atoms().size() == 7);
}
