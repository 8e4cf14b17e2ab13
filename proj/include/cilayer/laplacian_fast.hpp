#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cilayer/baseline.hpp"
#include "cilayer/dzq.hpp"
#include "cilayer/layered_scalar.hpp"

namespace cilayer {

struct FastOptions {
  std::vector<double> r12_grid;  // empty: 0, 0.1, ..., min(c1, c2)
  double delta_d_budget = 0.1;   // dB
  double sharing = 0.05;         // theta of the common price used to rank grid points
  double rate_tol = 0.05;        // receive-rate calibration tolerance, bits
  EcsqOptions inner{};
};

struct FastPoint {
  double r12_target = 0.0;
  bool feasible = false;
  std::string warning;
  DzqShape common_shape;          // unused when r12_target == 0
  LayeredScalarCodebook codebook; // kept for infeasible points when one was built
  CostWeights weights;            // calibrated lambda_1, lambda_2 of this point
  RDRecord record;                // cost under the reference weights
};

struct FastResult {
  std::vector<FastPoint> points;  // grid order
  CostWeights reference;          // weights at R_12 = 0 plus the common price
  std::size_t best_cost = npos;   // minimum J under the reference weights
  std::size_t best_budget = npos; // largest R_12 with excess distortion within budget
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Refinement initialization for one layer: inside the interval containing
// zero, the boundaries of `fine` (a dead-zone quantizer); elsewhere uniform
// cells of fine.step.
LayeredScalarCodebook conditional_init(const ScalarSource& src,
                                       const std::vector<double>& common_boundaries,
                                       const std::vector<DzqShape>& fine);

// Low-complexity design for a Laplacian source: for each grid point a DZQ
// common layer at that rate, then per layer restricted ECSQ refinements from
// the conditional initialization with lambda_l bisected so the receive rate
// matches c_l. Excess distortion is measured against `baseline`.
FastResult design_fast(const ScalarSource& src, double c1, double c2, const RDCurve& baseline,
                       const FastOptions& opt = {});

struct AlignmentReport {
  int n = 0;                   // dead zone of the coarse quantizer holds 2n+1 fine cells
  int m = 0;                   // other coarse cells hold m+1 fine cells
  double coarse_ratio = 0.0;   // z of the coarse quantizer
  double fine_step = 0.0;
  double ratio_error = 0.0;    // |2n/m - z|, NaN when m == 0
  double max_misalignment = 0.0;  // coarse boundary to nearest fine-lattice point
  bool refinement_free = false;   // fine adds no boundaries
  bool aligned = false;
};

// Checks the embedding condition between two dead-zone shaped quantizers.
// The fine lattice is its dead-zone edge plus multiples of its (median)
// step; misalignment is measured on coarse boundaries within the finite
// range of the fine quantizer.
AlignmentReport check_alignment(const ScalarQuantizer& coarse, const ScalarQuantizer& fine);

}  // namespace cilayer
