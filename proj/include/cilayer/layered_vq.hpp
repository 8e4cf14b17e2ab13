#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cilayer/baseline.hpp"
#include "cilayer/quantizer_core.hpp"
#include "cilayer/sources.hpp"
#include "cilayer/topology.hpp"

namespace cilayer {

inline constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

// A cell of common packet `level` (0 is the packet shared by all decoders).
// Level k cells host the private leaves of decoder k; the deepest level
// (L-2) also hosts the leaves of decoder L-1. Probabilities are global.
struct VqCommonNode {
  std::size_t level = 0;
  std::size_t parent = kNoNode;
  double prob = 0.0;
  std::vector<std::size_t> children;             // common nodes at level + 1
  std::vector<std::vector<std::size_t>> leaves;  // per hosted decoder, indices into leaves
};

struct VqLeaf {
  std::size_t decoder = 0;
  std::size_t node = 0;
  double prob = 0.0;
  std::vector<double> rep;
};

struct LayeredVQCodebook {
  PacketTopology topology = PacketTopology::nested_chain(2);
  std::size_t dim = 0;
  std::vector<VqCommonNode> nodes;
  std::vector<VqLeaf> leaves;

  std::size_t decoders() const noexcept { return topology.decoders(); }
  std::vector<std::size_t> roots() const;
  // Decoders whose leaves hang off a level-k node.
  std::vector<std::size_t> hosted(std::size_t level) const;
  std::size_t common_cells(std::size_t level) const;
  // Tree shape, probability additivity (tol) and sizes.
  void validate(double tol = 1e-12) const;
};

// Chosen node per common level and leaf per decoder.
struct VqPath {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> leaves;
};

// Exhaustive minimization over all admissible paths of
//   sum_l a_l |x - c_l|^2 - sum_packets mu_p log2 p(cell | parent cell)
// (mu_p the effective packet weight), which averages to the layered cost.
// Zero-probability cells are skipped; ties go to the smallest index, level
// by level. Returns the path and writes its cost.
VqPath assign_sample(std::span<const double> x, const LayeredVQCodebook& cb, const CostWeights& w,
                     double* cost = nullptr);

struct VqAssignment {
  std::vector<VqPath> paths;
  double cost = 0.0;  // mean per-sample cost under the codebook's probabilities
};

VqAssignment assign_all(const TrainingSet& s, const LayeredVQCodebook& cb, const CostWeights& w);

// Leaf reps become the means of their samples and every probability the
// empirical frequency; empty leaves and nodes are removed.
LayeredVQCodebook update_codebooks(const TrainingSet& s, const LayeredVQCodebook& cb,
                                   const VqAssignment& a);

// Record from the codebook probabilities and the distortion of the given
// assignment (per-vector squared error averaged over samples).
RDRecord evaluate_vq(const TrainingSet& s, const LayeredVQCodebook& cb, const VqAssignment& a,
                     const CostWeights& w);

struct JointVqOptions {
  std::size_t m_init = 16;  // cells of the all-decoder common packet
  std::size_t m_sub = 4;    // cells per parent for deeper common packets
  std::size_t n_init = 8;   // leaves per hosted decoder per node
  int restarts = 3;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  int max_rounds = 200;
};

struct JointVqTrace {
  std::vector<double> cost;  // exact cost after every round of the best restart
  std::vector<double> restart_costs;
  int rounds = 0;
};

struct JointVqResult {
  LayeredVQCodebook codebook;
  VqAssignment assignment;
  RDRecord record;
  JointVqTrace trace;
};

// Initial codebook: leaf reps drawn from the samples, uniform conditional
// probabilities at every level.
LayeredVQCodebook initial_vq_codebook(const TrainingSet& s, const PacketTopology& topo,
                                      const JointVqOptions& opt, std::uint64_t seed);

// Alternates assignment and update until the relative drop of the exact
// cost is below tol (or max_rounds); best of the seeded restarts and any
// extra starting codebooks.
JointVqResult joint_design_vq(const TrainingSet& s, const CostWeights& w,
                              const PacketTopology& topo, const JointVqOptions& opt = {},
                              const std::vector<LayeredVQCodebook>& extra_starts = {});

JointVqResult joint_design_vq_from(const TrainingSet& s, const CostWeights& w,
                                   LayeredVQCodebook start, const JointVqOptions& opt = {});

// Single-decoder entropy-constrained VQ (generalized Lloyd with an entropy
// term): the non-scalable reference.
struct EcvqCodebook {
  std::size_t dim = 0;
  std::vector<std::vector<double>> reps;
  std::vector<double> probs;
  double rate = 0.0;
  double distortion = 0.0;
  double cost = 0.0;
  std::vector<double> trace;  // cost per round
};

EcvqCodebook design_ecvq(const TrainingSet& s, double a, double lambda,
                         std::vector<std::vector<double>> init_reps, double tol = 1e-9,
                         int max_rounds = 200);

// Random-sample initialization with n cells.
std::vector<std::vector<double>> sample_reps(const TrainingSet& s, std::size_t n, std::uint64_t seed);

struct VectorBaselineOptions {
  double max_rate = 5.0;
  double min_rate = 0.0;  // chains stop below this rate
  double lambda_step_log2 = 0.25;
  std::size_t n_init = 256;
  int restarts = 1;
  std::uint64_t seed = 1;
  double tol = 1e-7;
  int max_rounds = 200;
};

// ECVQ continuation chains over a lambda grid (warm starts, from fine to
// coarse), reduced to the lower convex hull.
RDCurve vector_baseline(const TrainingSet& s, const VectorBaselineOptions& opt = {});

// The same chains, keeping every design.
struct VectorBaseline {
  RDCurve curve;
  std::vector<EcvqCodebook> designs;

  // Design whose rate is closest to `rate`.
  const EcvqCodebook& nearest(double rate) const;
};

VectorBaseline vector_baseline_designs(const TrainingSet& s, const VectorBaselineOptions& opt = {});

// Layered codebook nesting single-decoder codebooks: levels[k] supplies the
// cells of common packet k (level 0 is the coarsest), leaves[l] the leaf
// reps of decoder l. Every cell goes under the nearest cell (Euclidean, by
// rep) of the level above; a node left without leaves for a decoder gets
// its own rep as one. Probabilities follow the nested codebooks,
// renormalized so that children add up to their parent.
LayeredVQCodebook nested_vq_seed(const PacketTopology& topo,
                                 const std::vector<const EcvqCodebook*>& levels,
                                 const std::vector<const EcvqCodebook*>& leaves);

}  // namespace cilayer
