#include "cilayer/ecsq.hpp"

#include <algorithm>
#include <cmath>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

void refresh_cells(const ScalarSource& src, ScalarQuantizer& q) {
  const std::size_t n = q.boundaries.size() - 1;
  q.reps.resize(n);
  q.probs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = q.boundaries[i], hi = q.boundaries[i + 1];
    q.probs[i] = src.interval_probability(lo, hi);
    if (q.probs[i] > 0.0) {
      q.reps[i] = std::clamp(src.interval_centroid(lo, hi), lo, hi);
    } else {
      q.reps[i] = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi)
                  : std::isfinite(lo)                    ? lo
                                                         : hi;
    }
  }
}

// Removes cells below the probability threshold by deleting one of their
// boundaries, then refreshes reps and probs. Keeps at least one cell.
void prune_cells(const ScalarSource& src, ScalarQuantizer& q, double threshold) {
  refresh_cells(src, q);
  for (;;) {
    const std::size_t n = q.cells();
    if (n <= 1) return;
    std::vector<bool> drop(q.boundaries.size(), false);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (q.probs[i] >= threshold) continue;
      any = true;
      // Merge leftwards unless this is the first cell.
      if (i > 0) drop[i] = true;
      else drop[i + 1] = true;
    }
    if (!any) return;
    std::vector<double> kept;
    for (std::size_t j = 0; j < q.boundaries.size(); ++j)
      if (!drop[j] || j == 0 || j + 1 == q.boundaries.size()) kept.push_back(q.boundaries[j]);
    if (kept.size() < 2) kept = {q.boundaries.front(), q.boundaries.back()};
    const bool changed = kept.size() != q.boundaries.size();
    q.boundaries = std::move(kept);
    refresh_cells(src, q);
    if (!changed) return;
  }
}

// Lower envelope of a (x - x_q)^2 + lambda * (-log2 p_q) over [lo, hi].
// Returns the new boundary list.
std::vector<double> envelope_boundaries(const ScalarQuantizer& q, double a, double lambda) {
  const double lo = q.lo(), hi = q.hi();
  const std::size_t n = q.cells();
  if (n <= 1) return {lo, hi};
  std::vector<double> len(n);
  for (std::size_t i = 0; i < n; ++i) len[i] = -std::log2(q.probs[i]);

  if (!(a > 0.0)) {
    // Pure rate cost: the most probable cell takes the whole range.
    return {lo, hi};
  }

  // Lines y = slope x + icpt with slope = -2 a x_q, after dropping a x^2.
  auto icpt = [&](std::size_t i) { return a * q.reps[i] * q.reps[i] + lambda * len[i]; };
  auto cross = [&](std::size_t i, std::size_t j) {
    // x where lines i and j meet; reps[j] > reps[i].
    return (icpt(j) - icpt(i)) / (2.0 * a * (q.reps[j] - q.reps[i]));
  };

  std::vector<std::size_t> st;
  for (std::size_t k = 0; k < n; ++k) {
    if (!st.empty() && !(q.reps[k] > q.reps[st.back()])) {
      // Coincident reps: keep the cheaper one.
      if (icpt(k) < icpt(st.back())) st.back() = k;
      continue;
    }
    while (st.size() >= 2 && cross(st[st.size() - 2], k) <= cross(st[st.size() - 2], st.back()))
      st.pop_back();
    st.push_back(k);
  }

  std::vector<double> bp(st.size() + 1);
  bp.front() = -kInf;
  bp.back() = kInf;
  for (std::size_t j = 0; j + 1 < st.size(); ++j) bp[j + 1] = cross(st[j], st[j + 1]);

  std::vector<double> out{lo};
  bool started = false;
  for (std::size_t j = 0; j < st.size(); ++j) {
    const double l = std::max(bp[j], lo), h = std::min(bp[j + 1], hi);
    if (!(h > l)) continue;
    if (started) out.push_back(l);
    started = true;
  }
  out.push_back(hi);
  return out;
}

}  // namespace

double ecsq_cost(const ScalarQuantizer& q, const ScalarSource& src, double a, double lambda) {
  double cost = 0.0;
  for (std::size_t i = 0; i < q.cells(); ++i) {
    cost += a * src.interval_mse(q.boundaries[i], q.boundaries[i + 1], q.reps[i]);
    cost += lambda * plogp(q.probs[i]);
  }
  return cost;
}

ScalarQuantizer ecsq_refine(const ScalarSource& src, const ScalarQuantizer& init, double a,
                            double lambda, const EcsqOptions& opt, EcsqTrace* trace) {
  if (init.boundaries.size() < 2) fail(ErrorCode::Config, "ECSQ needs at least one cell");
  if (!(a >= 0.0) || !(lambda >= 0.0)) fail(ErrorCode::Config, "ECSQ weights must be nonnegative");
  ScalarQuantizer q;
  q.boundaries = init.boundaries;
  prune_cells(src, q, opt.prune_prob);

  double prev = ecsq_cost(q, src, a, lambda);
  if (trace) {
    trace->cost.assign(1, prev);
    trace->iterations = 0;
    trace->converged = false;
  }
  for (int it = 0; it < opt.max_iter; ++it) {
    std::vector<double> nb = envelope_boundaries(q, a, lambda);
    if (nb == q.boundaries) {
      if (trace) trace->converged = true;
      break;
    }
    ScalarQuantizer next;
    next.boundaries = std::move(nb);
    prune_cells(src, next, opt.prune_prob);
    const double cost = ecsq_cost(next, src, a, lambda);
    q = std::move(next);
    if (trace) {
      trace->cost.push_back(cost);
      trace->iterations = it + 1;
    }
    const bool done = std::abs(prev - cost) <= opt.tol * std::max(std::abs(prev), 1e-300);
    prev = cost;
    if (done) {
      if (trace) trace->converged = true;
      break;
    }
  }
  return q;
}

std::vector<double> equal_mass_boundaries(const ScalarSource& src, double lo, double hi,
                                          std::size_t n) {
  if (n == 0) fail(ErrorCode::Config, "need at least one cell");
  const double mass = src.interval_probability(lo, hi);
  std::vector<double> b{lo};
  if (n == 1 || !(mass > 0.0)) {
    b.push_back(hi);
    return b;
  }
  if (src.is_atomic()) {
    auto v = src.atoms();
    auto m = src.atom_masses();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] >= lo && v[i] < hi) idx.push_back(i);
    double cum = 0.0;
    std::size_t k = 1;
    for (std::size_t j = 0; j + 1 < idx.size() && k < n; ++j) {
      cum += m[idx[j]];
      if (cum >= k * mass / n - 1e-12 * mass) {
        b.push_back(0.5 * (v[idx[j]] + v[idx[j + 1]]));
        while (k < n && cum >= k * mass / n - 1e-12 * mass) ++k;
      }
    }
  } else {
    const double base = src.interval_probability(-kInf, lo);
    for (std::size_t k = 1; k < n; ++k) {
      const double u = std::clamp(base + mass * static_cast<double>(k) / n, 0.0, 1.0);
      const double t = src.quantile(u);
      if (t > b.back() && t < hi) b.push_back(t);
    }
  }
  b.push_back(hi);
  return b;
}

ScalarQuantizer design_ecsq(const ScalarSource& src, double a, double lambda, std::size_t n_init,
                            const std::optional<ScalarQuantizer>& init, const EcsqOptions& opt,
                            EcsqTrace* trace) {
  if (n_init == 0) fail(ErrorCode::Config, "n_init must be at least 1");
  ScalarQuantizer start;
  if (init) {
    if (init->lo() > src.support_lo() || init->hi() < src.support_hi())
      fail(ErrorCode::Coverage, "initial quantizer does not cover the source support");
    start.boundaries = init->boundaries;
  } else {
    start.boundaries = equal_mass_boundaries(src, src.support_lo(), src.support_hi(), n_init);
  }
  ScalarQuantizer q = ecsq_refine(src, start, a, lambda, opt, trace);
  double total = 0.0;
  for (double p : q.probs) total += p;
  if (!(total > 0.0)) fail(ErrorCode::DegenerateDesign, "every ECSQ cell was pruned");
  return q;
}

RateMatchedEcsq design_ecsq_at_rate(const ScalarSource& src, double target_rate,
                                    std::size_t n_init, double rate_tol, const EcsqOptions& opt) {
  auto run = [&](double lambda) {
    RateMatchedEcsq r;
    r.quantizer = design_ecsq(src, 1.0, lambda, n_init, std::nullopt, opt);
    r.lambda = lambda;
    const auto e = evaluate_scalar(r.quantizer, src);
    r.rate = e.rate;
    r.distortion = e.distortion;
    return r;
  };
  if (target_rate < 0.0) fail(ErrorCode::RateInfeasible, "negative target rate");
  double lo = 1e-9, hi = 1.0;
  RateMatchedEcsq at_lo = run(lo);
  if (at_lo.rate < target_rate - rate_tol)
    fail(ErrorCode::RateInfeasible, "target rate exceeds what n_init cells can reach");
  RateMatchedEcsq at_hi = run(hi);
  for (int k = 0; k < 60 && at_hi.rate > target_rate; ++k) {
    hi *= 4.0;
    at_hi = run(hi);
  }
  RateMatchedEcsq best = std::abs(at_lo.rate - target_rate) < std::abs(at_hi.rate - target_rate)
                             ? at_lo
                             : at_hi;
  for (int k = 0; k < 200 && std::abs(best.rate - target_rate) > rate_tol; ++k) {
    const double mid = std::sqrt(lo * hi);
    RateMatchedEcsq m = run(mid);
    if (std::abs(m.rate - target_rate) < std::abs(best.rate - target_rate)) best = m;
    if (m.rate > target_rate) lo = mid;
    else hi = mid;
    if (hi / lo < 1.0 + 1e-13) break;
  }
  return best;
}

}  // namespace cilayer
