#pragma once

#include <vector>

#include "cilayer/ecsq.hpp"
#include "cilayer/quantizer_core.hpp"

namespace cilayer {

struct RDPoint {
  double rate = 0.0;
  double distortion = 0.0;
};

// Lower convex hull of operational (rate, distortion) points. Between hull
// vertices the distortion is interpolated geometrically (linear in dB),
// which is exact for exponential curves and never above time sharing.
class RDCurve {
 public:
  RDCurve() = default;
  static RDCurve from_points(std::vector<RDPoint> points);

  const std::vector<RDPoint>& hull() const noexcept { return hull_; }
  bool empty() const noexcept { return hull_.empty(); }
  double min_rate() const { return hull_.front().rate; }
  double max_rate() const { return hull_.back().rate; }

  // Rates outside [min_rate, max_rate] raise RateInfeasible.
  double distortion_at(double rate) const;

 private:
  std::vector<RDPoint> hull_;
};

struct ScalarBaselineOptions {
  double max_rate = 6.0;            // stop once designs exceed this entropy
  double lambda_step_log2 = 0.125;  // lambda grid spacing
  std::vector<std::size_t> n_init{4, 8, 16, 32, 64};
  EcsqOptions ecsq{};
};

// Non-scalable reference: ECSQ designs over a geometric lambda grid and
// several initial sizes, reduced to their lower convex hull. The grid runs
// from the single-cell design (rate 0) up past max_rate.
RDCurve scalar_baseline(const ScalarSource& src, const ScalarBaselineOptions& opt = {});

// Sum over decoders of dB(D_l) - dB(D*(R_r,l)), each decoder against its
// curve evaluated at the record's own receive rate.
double excess_distortion(const RDRecord& record, const std::vector<const RDCurve*>& baselines);

}  // namespace cilayer
