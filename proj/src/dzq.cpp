#include "cilayer/dzq.hpp"

#include <algorithm>
#include <cmath>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

constexpr double kTailExponent = 40.0;  // lambda * x beyond which cells are merged into the tail

std::size_t cells_per_side(const ScalarSource& src, const DzqShape& s, std::size_t cap) {
  const double reach = kTailExponent / src.lambda() - s.dead_zone_half_width();
  if (reach <= 0.0) return 0;
  return std::min<std::size_t>(cap, static_cast<std::size_t>(std::ceil(reach / s.step)));
}

struct Eval {
  double rate, distortion;
};

Eval evaluate_shape(const ScalarSource& src, const DzqShape& s) {
  const auto q = make_dzq(src, s);
  const auto e = evaluate_scalar(q, src);
  return {e.rate, e.distortion};
}

}  // namespace

ScalarQuantizer make_dzq(const ScalarSource& src, const DzqShape& shape,
                         std::size_t max_cells_per_side) {
  if (src.kind() != ScalarKind::Laplacian) fail(ErrorCode::Shape, "DZQ design needs a Laplacian source");
  if (!(shape.step > 0.0) || !(shape.ratio >= 1.0))
    fail(ErrorCode::Config, "DZQ needs step > 0 and dead-zone ratio >= 1");
  const std::size_t k = cells_per_side(src, shape, max_cells_per_side);
  const double w = shape.dead_zone_half_width();
  std::vector<double> b;
  b.reserve(2 * k + 4);
  b.push_back(-kInf);
  for (std::size_t i = k; i-- > 0;) b.push_back(-(w + static_cast<double>(i) * shape.step));
  for (std::size_t i = 0; i < k; ++i) b.push_back(w + static_cast<double>(i) * shape.step);
  if (k == 0) {
    b.push_back(-w);
    b.push_back(w);
  }
  b.push_back(kInf);
  return quantizer_from_boundaries(src, std::move(b));
}

DzqDesign design_dzq(const ScalarSource& src, double target_rate) {
  if (src.kind() != ScalarKind::Laplacian) fail(ErrorCode::Shape, "DZQ design needs a Laplacian source");
  if (!(target_rate > 0.0)) fail(ErrorCode::RateInfeasible, "DZQ target rate must be positive");
  const double lambda = src.lambda();
  const double step_min = kTailExponent / (lambda * 4096.0);

  // Step giving the target entropy for a fixed ratio; entropy falls with step.
  auto step_for = [&](double ratio) {
    double lo = step_min, hi = 1.0 / lambda;
    if (evaluate_shape(src, {lo, ratio}).rate < target_rate)
      fail(ErrorCode::RateInfeasible, "target rate above the DZQ entropy ceiling");
    while (evaluate_shape(src, {hi, ratio}).rate > target_rate) {
      hi *= 2.0;
      if (hi > 1e12 / lambda) fail(ErrorCode::RateInfeasible, "DZQ rate search diverged");
    }
    for (int it = 0; it < 80 && hi / lo > 1.0 + 1e-13; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (evaluate_shape(src, {mid, ratio}).rate > target_rate) lo = mid;
      else hi = mid;
    }
    return std::sqrt(lo * hi);
  };
  auto distortion_for = [&](double ratio) {
    return evaluate_shape(src, {step_for(ratio), ratio}).distortion;
  };

  constexpr double kRatioMax = 6.0;
  constexpr int kGrid = 26;
  double best_ratio = 1.0, best_d = distortion_for(1.0);
  for (int g = 1; g < kGrid; ++g) {
    const double r = 1.0 + (kRatioMax - 1.0) * g / (kGrid - 1);
    const double d = distortion_for(r);
    if (d < best_d) {
      best_d = d;
      best_ratio = r;
    }
  }
  const double cell = (kRatioMax - 1.0) / (kGrid - 1);
  double a = std::max(1.0, best_ratio - cell), b = std::min(kRatioMax, best_ratio + cell);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = distortion_for(x1), f2 = distortion_for(x2);
  for (int it = 0; it < 40 && b - a > 1e-6; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = distortion_for(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = distortion_for(x2);
    }
  }
  const double golden = f1 < f2 ? x1 : x2;
  if (std::min(f1, f2) < best_d) best_ratio = golden;

  DzqDesign out;
  out.shape = {step_for(best_ratio), best_ratio};
  out.quantizer = make_dzq(src, out.shape);
  const auto e = evaluate_scalar(out.quantizer, src);
  out.rate = e.rate;
  out.distortion = e.distortion;
  return out;
}

std::vector<double> dzq_boundaries_within(const DzqShape& shape, double lo, double hi,
                                          double reach) {
  std::vector<double> neg, pos;
  const double w = shape.dead_zone_half_width();
  for (double t = w; t < hi && t <= reach; t += shape.step)
    if (t > lo) pos.push_back(t);
  for (double t = -w; t > lo && t >= -reach; t -= shape.step)
    if (t < hi) neg.push_back(t);
  std::vector<double> out(neg.rbegin(), neg.rend());
  out.insert(out.end(), pos.begin(), pos.end());
  return out;
}

std::vector<double> uniform_boundaries_within(double step, double lo, double hi, double reach) {
  std::vector<double> out;
  if (!(step > 0.0)) return out;
  if (std::isfinite(lo) && std::isfinite(hi)) {
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 0.5));
    for (long k = 1; k < n; ++k) out.push_back(lo + (hi - lo) * k / n);
    return out;
  }
  if (!std::isfinite(lo) && !std::isfinite(hi)) {
    for (double t = -std::floor(reach / step) * step; t <= reach; t += step) out.push_back(t);
    return out;
  }
  const double start = std::isfinite(lo) ? lo : hi;
  const double dir = std::isfinite(lo) ? 1.0 : -1.0;
  for (int k = 1;; ++k) {
    const double t = start + dir * step * k;
    if (std::abs(t) > reach) break;
    out.push_back(t);
  }
  if (dir < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace cilayer
