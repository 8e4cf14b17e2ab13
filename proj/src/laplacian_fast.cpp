#include "cilayer/laplacian_fast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

constexpr double kReachExponent = 40.0;

struct LayerFit {
  std::vector<ScalarQuantizer> cells;
  double lambda = 0.0;
  double rate = 0.0;
};

LayerFit fit_layer(const ScalarSource& src, const std::vector<ScalarQuantizer>& init, double lambda,
                   const EcsqOptions& opt) {
  LayerFit f;
  f.lambda = lambda;
  for (const auto& q : init) {
    f.cells.push_back(ecsq_refine(src, q, 1.0, lambda, opt));
    for (double p : f.cells.back().probs) f.rate += plogp(p);
  }
  return f;
}

// Bisection on log2 lambda so the layer's receive rate meets the target.
// Aims at a fifth of the tolerance and settles for the closest design
// within it.
LayerFit calibrate_layer(const ScalarSource& src, const std::vector<ScalarQuantizer>& init,
                         double target, const FastOptions& opt) {
  const double aim = 0.2 * opt.rate_tol;
  double lo = -24.0, hi = 4.0;  // log2 lambda; rate falls as lambda grows
  LayerFit fl = fit_layer(src, init, std::exp2(lo), opt.inner);
  if (fl.rate < target - opt.rate_tol)
    fail(ErrorCode::RateInfeasible, "receive-rate target above what the refinements can reach");
  LayerFit fh = fit_layer(src, init, std::exp2(hi), opt.inner);
  if (fh.rate > target + opt.rate_tol)
    fail(ErrorCode::RateInfeasible, "receive-rate target below the common-layer rate");
  LayerFit best = std::abs(fl.rate - target) < std::abs(fh.rate - target) ? fl : fh;
  for (int it = 0; it < 60 && std::abs(best.rate - target) > aim && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    LayerFit fm = fit_layer(src, init, std::exp2(mid), opt.inner);
    if (fm.rate > target) lo = mid;
    else hi = mid;
    if (std::abs(fm.rate - target) < std::abs(best.rate - target)) best = std::move(fm);
  }
  return best;
}

}  // namespace

LayeredScalarCodebook conditional_init(const ScalarSource& src,
                                       const std::vector<double>& common_boundaries,
                                       const std::vector<DzqShape>& fine) {
  const double reach = kReachExponent / src.lambda();
  std::vector<std::vector<double>> layer_boundaries(fine.size());
  for (std::size_t l = 0; l < fine.size(); ++l)
    for (std::size_t i = 0; i + 1 < common_boundaries.size(); ++i) {
      const double lo = common_boundaries[i], hi = common_boundaries[i + 1];
      const auto inner = (lo < 0.0 && hi > 0.0)
                             ? dzq_boundaries_within(fine[l], lo, hi, reach)
                             : uniform_boundaries_within(fine[l].step, lo, hi, reach);
      layer_boundaries[l].insert(layer_boundaries[l].end(), inner.begin(), inner.end());
    }
  return layered_from_partitions(src, common_boundaries, layer_boundaries);
}

FastResult design_fast(const ScalarSource& src, double c1, double c2, const RDCurve& baseline,
                       const FastOptions& opt) {
  if (src.kind() != ScalarKind::Laplacian)
    fail(ErrorCode::Shape, "low-complexity design needs a Laplacian source");
  if (!(c1 > 0.0) || !(c2 > 0.0)) fail(ErrorCode::Config, "receive-rate targets must be positive");
  const double cmin = std::min(c1, c2);
  std::vector<double> grid = opt.r12_grid;
  if (grid.empty())
    for (int k = 0; k * 0.1 <= cmin + 1e-9; ++k) grid.push_back(0.1 * k);
  for (double r : grid)
    if (r < 0.0 || r > cmin + 1e-12)
      fail(ErrorCode::Config, "common-rate grid points must lie in [0, min(c1, c2)]");

  const std::vector<double> targets{c1, c2};
  const std::vector<DzqShape> fine{design_dzq(src, c1).shape, design_dzq(src, c2).shape};
  const auto topo = PacketTopology::nested_chain(2);

  // Per grid point: common partition, then both layers calibrated.
  auto build = [&](double r, FastPoint& pt) {
    std::vector<double> common{-kInf, kInf};
    if (r > 0.0) {
      const auto dzq = design_dzq(src, r);
      pt.common_shape = dzq.shape;
      common = dzq.quantizer.boundaries;
    }
    auto cb = conditional_init(src, common, fine);
    std::vector<double> lambdas(2);
    bool within = true;
    for (std::size_t l = 0; l < 2; ++l) {
      const auto fit = calibrate_layer(src, cb.layers[l], targets[l], opt);
      cb.layers[l] = fit.cells;
      lambdas[l] = fit.lambda;
      within = within && std::abs(fit.rate - targets[l]) <= opt.rate_tol;
    }
    pt.codebook = std::move(cb);
    pt.weights = CostWeights::with_sharing(lambdas, opt.sharing);
    return within;
  };

  FastResult res;
  {
    FastPoint ref;
    if (!build(0.0, ref))
      fail(ErrorCode::CalibrationFailed, "receive rates not reachable without a common layer");
    res.reference = CostWeights::with_sharing(ref.weights.lambda_private, opt.sharing);
  }
  std::map<double, std::size_t> seen;
  for (double r : grid) {
    FastPoint pt;
    pt.r12_target = r;
    try {
      const bool within = build(r, pt);
      pt.record = evaluate_layered(pt.codebook, src, res.reference);
      pt.record.excess_distortion_db = excess_distortion(pt.record, {&baseline, &baseline});
      pt.feasible = within;
      if (!within) pt.warning = "calibration-failed: receive rates off target by more than the tolerance";
    } catch (const Error& e) {
      pt.feasible = false;
      pt.warning = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    res.points.push_back(std::move(pt));
  }
  for (std::size_t k = 0; k < res.points.size(); ++k) {
    const auto& p = res.points[k];
    if (!p.feasible) continue;
    if (res.best_cost == FastResult::npos || p.record.cost < res.points[res.best_cost].record.cost)
      res.best_cost = k;
    if (p.record.excess_distortion_db <= opt.delta_d_budget &&
        (res.best_budget == FastResult::npos ||
         p.record.common_rate() > res.points[res.best_budget].record.common_rate()))
      res.best_budget = k;
  }
  return res;
}

AlignmentReport check_alignment(const ScalarQuantizer& coarse, const ScalarQuantizer& fine) {
  // Central cell, its half width and the median width of the other finite cells.
  struct Shape {
    std::size_t center;
    double half;
    double step;
  };
  auto shape_of = [](const ScalarQuantizer& q, const char* name) {
    const auto& b = q.boundaries;
    std::size_t c = 0;
    while (c < q.cells() && !(b[c] < 0.0 && b[c + 1] > 0.0)) ++c;
    if (c == q.cells())
      fail(ErrorCode::Shape, std::string(name) + " quantizer has no cell straddling zero");
    const double width = b[c + 1] - b[c];
    std::vector<double> widths;
    for (std::size_t k = 0; k < q.cells(); ++k) {
      const double wk = b[k + 1] - b[k];
      if (k == c || !std::isfinite(wk)) continue;
      if (std::isfinite(width) && wk > width * (1.0 + 1e-9))
        fail(ErrorCode::Shape, std::string(name) + " quantizer's central cell is not the widest");
      widths.push_back(wk);
    }
    double step = width;
    if (!widths.empty()) {
      std::nth_element(widths.begin(), widths.begin() + widths.size() / 2, widths.end());
      step = widths[widths.size() / 2];
    }
    return Shape{c, 0.5 * width, step};
  };
  const Shape cs = shape_of(coarse, "coarse");
  const Shape fs = shape_of(fine, "fine");

  AlignmentReport rep;
  rep.fine_step = fs.step;
  rep.coarse_ratio = 2.0 * cs.half / cs.step;

  auto fine_cells_in = [&](double lo, double hi) {
    int n = 0;
    for (std::size_t k = 0; k < fine.cells(); ++k)
      if (fine.boundaries[k] >= lo - 1e-12 && fine.boundaries[k + 1] <= hi + 1e-12) ++n;
    return n;
  };
  const auto& cb = coarse.boundaries;
  const int dz = fine_cells_in(cb[cs.center], cb[cs.center + 1]);
  rep.n = std::max(0, (dz - 1) / 2);
  std::map<int, int> counts;
  for (std::size_t k = 0; k < coarse.cells(); ++k) {
    if (k == cs.center || !std::isfinite(cb[k]) || !std::isfinite(cb[k + 1])) continue;
    ++counts[fine_cells_in(cb[k], cb[k + 1])];
  }
  int mode = 1, best = 0;
  for (const auto& [cnt, freq] : counts)
    if (freq > best) {
      best = freq;
      mode = cnt;
    }
  rep.m = std::max(0, mode - 1);
  rep.ratio_error = rep.m > 0 ? std::abs(2.0 * rep.n / rep.m - rep.coarse_ratio)
                              : std::numeric_limits<double>::quiet_NaN();
  rep.refinement_free = rep.n == 0 && rep.m == 0;

  // Coarse boundaries against the fine lattice +-(half + k * step).
  const double fine_reach = std::max(std::abs(fine.boundaries[1]),
                                     std::abs(fine.boundaries[fine.cells() - 1]));
  double mis = 0.0;
  for (double t : cb) {
    if (!std::isfinite(t) || std::abs(t) > fine_reach + 1e-12) continue;
    const double u = std::abs(t);
    double d;
    if (u <= fs.half) d = fs.half - u;
    else {
      const double k = std::round((u - fs.half) / fs.step);
      d = std::abs(u - (fs.half + k * fs.step));
    }
    mis = std::max(mis, d);
  }
  rep.max_misalignment = mis;
  rep.aligned = rep.m > 0 && rep.ratio_error <= 1e-6 && mis <= 0.05 * fs.step;
  return rep;
}

}  // namespace cilayer
