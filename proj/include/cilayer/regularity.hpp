#pragma once

#include <cstddef>
#include <vector>

#include "cilayer/layered_vq.hpp"

namespace cilayer {

struct AuditOptions {
  std::size_t k = 10;             // mutual k-nearest-neighbor graph
  std::size_t max_points = 4000;  // per region; larger regions are thinned evenly
  double min_component = 0.01;    // components below this fraction (or 2k points) are ignored
};

struct RegionAudit {
  std::size_t node = 0;
  std::size_t samples = 0;
  std::size_t components = 0;  // significant components of the graph
  bool disconnected = false;
  // Groups left once components sharing an overall cell are merged. A
  // disconnected region with one group owes its shape to an irregular
  // overall cell and is not split.
  std::size_t cell_groups = 0;
  // Filled for disconnected regions from the split construction.
  double cost_before = 0.0;
  double cost_after = 0.0;
  double distortion_change = 0.0;  // max over decoders, absolute
  double receive_change = 0.0;     // max over decoders, absolute, bits
  bool preserved = false;          // distortions and receive rates within 1e-12
  bool unexplained = false;        // split along overall cells does not lower J
};

struct AuditReport {
  std::vector<RegionAudit> regions;
  std::size_t disconnected = 0;
  std::size_t inherited = 0;  // disconnected through an irregular overall cell
  std::size_t unexplained = 0;
};

// Audits the regions of the all-decoder common packet. Samples are assigned
// with the codebook as given and probabilities are taken from that
// assignment.
AuditReport regularity_audit(const LayeredVQCodebook& cb, const TrainingSet& s,
                             const CostWeights& w, const AuditOptions& opt = {});

struct SplitCodebook {
  LayeredVQCodebook codebook;
  VqAssignment assignment;
};

// Codebook with the reps of cb and probabilities counted from the given
// assignment.
SplitCodebook observed_codebook(const LayeredVQCodebook& cb, const TrainingSet& s,
                                const VqAssignment& a);

// Replaces the level-0 node `node` by one copy per group: the samples of
// group g (group[i] for sample i; ignored outside the node) move to copy g
// together with copies of every node and leaf below it that they use. Reps
// are kept, probabilities are recounted.
SplitCodebook split_common_region(const LayeredVQCodebook& cb, const TrainingSet& s,
                                  const VqAssignment& a, std::size_t node,
                                  const std::vector<std::size_t>& group);

}  // namespace cilayer
