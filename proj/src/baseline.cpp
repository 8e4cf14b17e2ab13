#include "cilayer/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cilayer/error.hpp"

namespace cilayer {

RDCurve RDCurve::from_points(std::vector<RDPoint> points) {
  points.erase(std::remove_if(points.begin(), points.end(),
                              [](const RDPoint& p) {
                                return !std::isfinite(p.rate) || !std::isfinite(p.distortion);
                              }),
               points.end());
  if (points.empty()) fail(ErrorCode::Config, "rate-distortion curve needs at least one point");
  std::sort(points.begin(), points.end(), [](const RDPoint& a, const RDPoint& b) {
    return a.rate < b.rate || (a.rate == b.rate && a.distortion < b.distortion);
  });
  // Monotone decreasing lower hull (Andrew's chain on the lower side).
  std::vector<RDPoint> h;
  for (const auto& p : points) {
    if (!h.empty() && p.distortion >= h.back().distortion) continue;
    while (h.size() >= 2) {
      const RDPoint& a = h[h.size() - 2];
      const RDPoint& b = h.back();
      const double cross = (b.rate - a.rate) * (p.distortion - a.distortion) -
                           (b.distortion - a.distortion) * (p.rate - a.rate);
      if (cross <= 0.0) h.pop_back();
      else break;
    }
    h.push_back(p);
  }
  RDCurve c;
  c.hull_ = std::move(h);
  return c;
}

double RDCurve::distortion_at(double rate) const {
  if (hull_.empty()) fail(ErrorCode::Config, "empty rate-distortion curve");
  const double eps = 1e-9;
  if (rate < hull_.front().rate - eps || rate > hull_.back().rate + eps) {
    std::ostringstream os;
    os << "rate " << rate << " outside baseline range [" << hull_.front().rate << ", "
       << hull_.back().rate << "]";
    fail(ErrorCode::RateInfeasible, os.str());
  }
  if (rate <= hull_.front().rate) return hull_.front().distortion;
  if (rate >= hull_.back().rate) return hull_.back().distortion;
  auto it = std::upper_bound(hull_.begin(), hull_.end(), rate,
                             [](double r, const RDPoint& p) { return r < p.rate; });
  const RDPoint& b = *it;
  const RDPoint& a = *(it - 1);
  const double t = (rate - a.rate) / (b.rate - a.rate);
  if (a.distortion > 0.0 && b.distortion > 0.0)
    return a.distortion * std::pow(b.distortion / a.distortion, t);
  return a.distortion + t * (b.distortion - a.distortion);
}

RDCurve scalar_baseline(const ScalarSource& src, const ScalarBaselineOptions& opt) {
  std::vector<RDPoint> pts;
  auto add = [&](const ScalarQuantizer& q) {
    const auto e = evaluate_scalar(q, src);
    pts.push_back({e.rate, e.distortion});
    return e;
  };
  add(quantizer_from_boundaries(src, {src.support_lo(), src.support_hi()}));

  // Continuation chains: start fine at a small lambda and warm-start every
  // larger lambda from the previous design.
  const std::size_t fine = static_cast<std::size_t>(std::exp2(std::ceil(opt.max_rate) + 2.0));
  std::vector<std::vector<double>> starts;
  starts.push_back(equal_mass_boundaries(src, src.support_lo(), src.support_hi(), fine));
  if (!src.is_atomic()) {
    const double lo = src.quantile(1e-9), hi = src.quantile(1.0 - 1e-9);
    std::vector<double> b{src.support_lo()};
    for (std::size_t k = 0; k <= fine; ++k) {
      const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(fine);
      if (t > b.back() && t < src.support_hi()) b.push_back(t);
    }
    b.push_back(src.support_hi());
    starts.push_back(std::move(b));
  }
  const double var = src.variance();
  const double log2_top = std::ceil(std::log2(4.0 * var));
  const double log2_bottom = log2_top - 2.0 * (opt.max_rate + 2.0);
  for (const auto& b : starts) {
    ScalarQuantizer q = quantizer_from_boundaries(src, b);
    for (double l2 = log2_bottom; l2 <= log2_top; l2 += opt.lambda_step_log2) {
      q = ecsq_refine(src, q, 1.0, std::exp2(l2), opt.ecsq);
      const auto e = add(q);
      if (e.rate < 1e-12) break;
    }
  }
  // Cold starts of several sizes at every lambda.
  for (std::size_t n : opt.n_init)
    for (double l2 = log2_bottom; l2 <= log2_top; l2 += 4.0 * opt.lambda_step_log2) {
      const auto e = add(design_ecsq(src, 1.0, std::exp2(l2), n, std::nullopt, opt.ecsq));
      if (e.rate < 1e-12) break;
    }
  return RDCurve::from_points(std::move(pts));
}

double excess_distortion(const RDRecord& record, const std::vector<const RDCurve*>& baselines) {
  if (baselines.size() != record.distortion.size())
    fail(ErrorCode::Config, "one baseline per decoder is required");
  double total = 0.0;
  for (std::size_t l = 0; l < baselines.size(); ++l) {
    if (!baselines[l] || baselines[l]->empty()) fail(ErrorCode::Config, "missing baseline");
    total += to_db(record.distortion[l]) - to_db(baselines[l]->distortion_at(record.receive_rates[l]));
  }
  return total;
}

}  // namespace cilayer
