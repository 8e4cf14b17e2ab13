#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cilayer/ecsq.hpp"
#include "cilayer/quantizer_core.hpp"

namespace cilayer {

// Common-layer partition plus, for every common interval and each of the two
// decoders, a refinement quantizer spanning exactly that interval. All
// probabilities are global (unconditioned).
struct LayeredScalarCodebook {
  std::vector<double> common_boundaries;             // t^12_0 .. t^12_M
  std::vector<double> common_probs;                  // p^12_1 .. p^12_M
  std::vector<std::vector<ScalarQuantizer>> layers;  // layers[l][i]
  std::vector<bool> degenerate;                      // zero-probability intervals

  std::size_t intervals() const noexcept { return common_probs.size(); }
  std::size_t decoders() const noexcept { return layers.size(); }

  // Concatenation of every refinement of decoder l.
  ScalarQuantizer overall(std::size_t l) const;

  // Boundary consistency, partition and marginalization invariants.
  void validate(double tol = 1e-9) const;
};

// A codebook with the given common boundaries and equal-mass refinements.
LayeredScalarCodebook make_layered_codebook(const ScalarSource& src,
                                            std::vector<double> common_boundaries,
                                            std::size_t cells_per_interval);

// Codebook whose refinements follow the given overall partitions: each
// layer's boundaries inside a common interval become its refinement.
LayeredScalarCodebook layered_from_partitions(const ScalarSource& src,
                                              std::vector<double> common_boundaries,
                                              const std::vector<std::vector<double>>& layer_boundaries);

RDRecord evaluate_layered(const LayeredScalarCodebook& cb, const ScalarSource& src,
                          const CostWeights& w);

struct LayerUpdateReport {
  std::size_t degenerate_intervals = 0;
};

// Runs the restricted ECSQ iteration for every common interval and layer,
// warm-started from the current refinements.
LayeredScalarCodebook design_individual_layers(const LayeredScalarCodebook& cb,
                                               const ScalarSource& src, const CostWeights& w,
                                               const EcsqOptions& opt = {},
                                               LayerUpdateReport* report = nullptr);

struct CommonUpdateReport {
  std::size_t moved = 0;
  std::size_t stationary_ties = 0;  // zero denominator, boundary kept
  std::size_t rejected = 0;         // moves that would have raised the cost
  std::size_t merged = 0;
};

// One left-to-right sweep of the closed-form common-boundary rule using the
// last refinement cell left of each boundary and the first one right of it
// for both decoders, with common probabilities from before the sweep. Each
// move is confined to the span where only those adjacent cells change and
// is accepted only if it does not raise the cost (halved up to 8 times
// otherwise). Zero-width or zero-probability intervals are merged away; with
// a positive common price adjacent intervals are merged while that lowers
// the cost.
LayeredScalarCodebook update_common_boundaries(const LayeredScalarCodebook& cb,
                                               const ScalarSource& src, const CostWeights& w,
                                               CommonUpdateReport* report = nullptr);

struct JointScalarOptions {
  std::size_t m_init = 16;
  std::size_t n_init = 8;
  int restarts = 5;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  int max_outer = 500;
  double jitter = 0.5;     // fraction of an equal-mass cell used to perturb restarts
  bool merge_trials = true;
  double trial_gain = 1e-6;  // relative cost drop a structural trial must achieve
  EcsqOptions inner{};
};

struct JointScalarTrace {
  std::vector<double> cost;  // after every outer sweep of the best restart
  std::vector<double> restart_costs;
  int outer_iterations = 0;
};

struct JointScalarResult {
  LayeredScalarCodebook codebook;
  RDRecord record;
  JointScalarTrace trace;
};

// Alternates design_individual_layers and update_common_boundaries until the
// relative cost change drops below tol. At convergence the structural
// trials run in turn (merge two adjacent common intervals; drop one
// refinement boundary; split a common interval at a refinement boundary of
// either layer; for sources of at most 64 atoms, a local search over common
// partitions with dynamic-programming refinements) and the first that lowers
// the cost by trial_gain * |J| is
// applied before resuming. Restart 0 starts from equal-mass cells with
// (m_init, n_init), restart 1 from a single common interval with jittered
// refinements, later ones from jittered starts with log-uniform sizes. The
// best result is kept; extra_starts are additional initial codebooks.
JointScalarResult joint_design_scalar(const ScalarSource& src, const CostWeights& w,
                                      const JointScalarOptions& opt = {},
                                      const std::vector<LayeredScalarCodebook>& extra_starts = {});

// Runs the alternation from one initial codebook (no restarts).
JointScalarResult joint_design_scalar_from(const ScalarSource& src, const CostWeights& w,
                                           LayeredScalarCodebook start,
                                           const JointScalarOptions& opt = {});

}  // namespace cilayer
