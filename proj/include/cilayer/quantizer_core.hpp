#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cilayer/sources.hpp"
#include "cilayer/topology.hpp"

namespace cilayer {

// Ordered cell boundaries t_0 < ... < t_N (outer ones may be infinite),
// reconstruction levels and cell probabilities.
struct ScalarQuantizer {
  std::vector<double> boundaries;
  std::vector<double> reps;
  std::vector<double> probs;

  std::size_t cells() const noexcept { return reps.size(); }
  double lo() const { return boundaries.front(); }
  double hi() const { return boundaries.back(); }

  // Structural checks: sizes, strict ordering, reps inside their cells.
  void validate() const;
};

// Builds a quantizer from boundaries: reps at cell centroids, probs from the
// source. Zero-probability cells are kept with their midpoint as rep.
ScalarQuantizer quantizer_from_boundaries(const ScalarSource& src, std::vector<double> boundaries);

// Lagrangian weights of the layered cost. lambda_private[l] multiplies the
// receive rate of decoder l; lambda_common[label] multiplies the rate of
// that common packet on top of the receive-rate terms, so the effective
// per-bit price of a common packet is lambda_common + sum of lambda_private
// over the decoders it reaches. Negative lambda_common rewards sharing; the
// effective price must stay nonnegative.
struct CostWeights {
  std::vector<double> a;
  std::vector<double> lambda_private;
  std::map<std::string, double> lambda_common;

  std::size_t decoders() const noexcept { return a.size(); }
  double common(const std::string& label) const;

  // Effective weight on a packet's own rate under a topology.
  double packet_weight(const PacketTopology& topo, std::size_t packet) const;

  void validate(const PacketTopology& topo) const;

  // a_l = 1 and lambda_common[c] = -theta * sum_{l in c} lambda_l for every
  // common packet of the nested chain. theta in [0, 1) rewards shared bits,
  // theta < 0 penalizes them.
  static CostWeights with_sharing(std::vector<double> lambdas, double theta);
  double sharing() const;  // recovers theta from the first common label
};

// One operating point.
struct RDRecord {
  std::vector<std::string> packet_labels;
  std::vector<double> packet_rates;
  std::vector<double> receive_rates;
  double transmit_rate = 0.0;
  std::vector<double> distortion;
  std::vector<double> distortion_db;
  double excess_distortion_db = std::numeric_limits<double>::quiet_NaN();
  double cost = 0.0;

  double rate(const std::string& label) const;
  double common_rate() const;  // rate of the packet shared by all decoders
  // (sum of receive rates - transmit rate) / sum of receive rates
  double transmit_reduction() const;
};

// Fills packet/receive/transmit rates, distortions (linear and dB) and cost.
RDRecord make_record(const PacketTopology& topo, const std::vector<double>& packet_rates,
                     const std::vector<double>& distortion, const CostWeights& w);

struct ScalarEvaluation {
  double distortion = 0.0;
  double rate = 0.0;
};

ScalarEvaluation evaluate_scalar(const ScalarQuantizer& q, const ScalarSource& src);

// -sum p log2 p with 0 log 0 = 0.
double entropy_bits(std::span<const double> probs);
inline double plogp(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

double to_db(double mse);

}  // namespace cilayer
