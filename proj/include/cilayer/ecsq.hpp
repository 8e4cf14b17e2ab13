#pragma once

#include <optional>
#include <vector>

#include "cilayer/quantizer_core.hpp"

namespace cilayer {

struct EcsqOptions {
  double tol = 1e-9;         // relative cost change that counts as converged
  int max_iter = 500;
  double prune_prob = 1e-12; // cells below this probability are merged away
};

// Per-iteration cost a*D + lambda*R of an ECSQ run.
struct EcsqTrace {
  std::vector<double> cost;
  int iterations = 0;
  bool converged = false;
};

// Lagrangian cost a * sum mse + lambda * sum -p log2 p of the cells of q,
// with probabilities taken from the source (global, not conditioned on the
// quantizer's range).
double ecsq_cost(const ScalarQuantizer& q, const ScalarSource& src, double a, double lambda);

// Iterative entropy-constrained design restricted to [init.lo(), init.hi()]:
// centroid and probability update, then the boundary rule
//   t_q = (x_q + x_{q+1})/2 - (lambda/a) (log2 p_q - log2 p_{q+1}) / (2 (x_q - x_{q+1}))
// evaluated as the lower envelope of the per-cell modified costs, so cells
// that are dominated everywhere disappear. Returns reps at centroids.
// A zero-probability range yields one cell with zero probability.
ScalarQuantizer ecsq_refine(const ScalarSource& src, const ScalarQuantizer& init, double a,
                            double lambda, const EcsqOptions& opt = {}, EcsqTrace* trace = nullptr);

// Boundaries of n equal-mass cells over [lo, hi]. For atomic sources the
// boundaries sit halfway between atoms and duplicates are dropped.
std::vector<double> equal_mass_boundaries(const ScalarSource& src, double lo, double hi,
                                          std::size_t n);

// Full-support ECSQ. Defaults to n_init equal-mass cells.
ScalarQuantizer design_ecsq(const ScalarSource& src, double a, double lambda, std::size_t n_init,
                            const std::optional<ScalarQuantizer>& init = std::nullopt,
                            const EcsqOptions& opt = {}, EcsqTrace* trace = nullptr);

// ECSQ whose entropy matches target_rate (bits), found by bisection on
// lambda with a = 1. Returns the design and the lambda used.
struct RateMatchedEcsq {
  ScalarQuantizer quantizer;
  double lambda = 0.0;
  double rate = 0.0;
  double distortion = 0.0;
};
RateMatchedEcsq design_ecsq_at_rate(const ScalarSource& src, double target_rate,
                                    std::size_t n_init, double rate_tol = 1e-4,
                                    const EcsqOptions& opt = {});

}  // namespace cilayer
