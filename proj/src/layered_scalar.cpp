#include "cilayer/layered_scalar.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

const PacketTopology& two_level() {
  static const PacketTopology topo = PacketTopology::nested_chain(2);
  return topo;
}

double common_weight(const CostWeights& w) { return w.common("12"); }

// Prune zero-probability cells and refresh reps/probs without iterating.
ScalarQuantizer tidy(const ScalarSource& src, const ScalarQuantizer& q) {
  EcsqOptions opt;
  opt.max_iter = 0;
  return ecsq_refine(src, q, 1.0, 0.0, opt);
}

ScalarQuantizer cells_from(const ScalarSource& src, std::vector<double> boundaries) {
  ScalarQuantizer q;
  q.boundaries = std::move(boundaries);
  return tidy(src, q);
}

void refresh_common(LayeredScalarCodebook& cb, const ScalarSource& src) {
  const std::size_t m = cb.common_boundaries.size() - 1;
  cb.common_probs.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    cb.common_probs[i] = src.interval_probability(cb.common_boundaries[i], cb.common_boundaries[i + 1]);
  cb.degenerate.assign(m, false);
}

// Merges common interval i+1 into i, keeping every refinement boundary.
void merge_into_left(LayeredScalarCodebook& cb, std::size_t i) {
  for (auto& layer : cb.layers) {
    auto& left = layer[i].boundaries;
    const auto& right = layer[i + 1].boundaries;
    left.insert(left.end(), right.begin() + 1, right.end());
    auto& lq = layer[i];
    const auto& rq = layer[i + 1];
    lq.reps.insert(lq.reps.end(), rq.reps.begin(), rq.reps.end());
    lq.probs.insert(lq.probs.end(), rq.probs.begin(), rq.probs.end());
    layer.erase(layer.begin() + static_cast<long>(i) + 1);
  }
  cb.common_boundaries.erase(cb.common_boundaries.begin() + static_cast<long>(i) + 1);
  cb.common_probs[i] += cb.common_probs[i + 1];
  cb.common_probs.erase(cb.common_probs.begin() + static_cast<long>(i) + 1);
  cb.degenerate.erase(cb.degenerate.begin() + static_cast<long>(i) + 1);
}

// Removes zero-width and zero-probability common intervals and empty cells.
std::size_t normalize(LayeredScalarCodebook& cb, const ScalarSource& src) {
  std::size_t merged = 0;
  refresh_common(cb, src);
  for (std::size_t i = 0; cb.intervals() > 1 && i < cb.intervals();) {
    const bool empty = !(cb.common_probs[i] > 0.0) ||
                       !(cb.common_boundaries[i + 1] > cb.common_boundaries[i]);
    if (!empty) {
      ++i;
      continue;
    }
    if (i + 1 < cb.intervals()) merge_into_left(cb, i);
    else merge_into_left(cb, i - 1);
    ++merged;
  }
  for (auto& layer : cb.layers)
    for (std::size_t i = 0; i < layer.size(); ++i) {
      // Drop duplicate boundaries left by zero-width cells.
      auto& b = layer[i].boundaries;
      std::vector<double> clean{b.front()};
      for (std::size_t k = 1; k + 1 < b.size(); ++k)
        if (b[k] > clean.back() && b[k] < b.back()) clean.push_back(b[k]);
      clean.push_back(b.back());
      layer[i] = cells_from(src, std::move(clean));
    }
  refresh_common(cb, src);
  return merged;
}

double cell_term(const ScalarSource& src, double lo, double hi, double a, double lambda) {
  if (!(hi > lo)) return 0.0;
  const double p = src.interval_probability(lo, hi);
  if (!(p > 0.0)) return 0.0;
  const double rep = src.interval_centroid(lo, hi);
  return a * src.interval_mse(lo, hi, rep) + lambda * plogp(p);
}

double total_cost(const LayeredScalarCodebook& cb, const ScalarSource& src, const CostWeights& w) {
  return evaluate_layered(cb, src, w).cost;
}

}  // namespace

ScalarQuantizer LayeredScalarCodebook::overall(std::size_t l) const {
  ScalarQuantizer q;
  const auto& layer = layers.at(l);
  q.boundaries.push_back(common_boundaries.front());
  for (const auto& r : layer) {
    q.boundaries.insert(q.boundaries.end(), r.boundaries.begin() + 1, r.boundaries.end());
    q.reps.insert(q.reps.end(), r.reps.begin(), r.reps.end());
    q.probs.insert(q.probs.end(), r.probs.begin(), r.probs.end());
  }
  return q;
}

void LayeredScalarCodebook::validate(double tol) const {
  const std::size_t m = intervals();
  if (m == 0 || common_boundaries.size() != m + 1)
    fail(ErrorCode::Config, "layered codebook needs M+1 common boundaries and M probabilities");
  for (std::size_t i = 0; i < m; ++i)
    if (!(common_boundaries[i] < common_boundaries[i + 1]))
      fail(ErrorCode::Config, "common boundaries must be strictly increasing");
  double total = 0.0;
  for (double p : common_probs) total += p;
  if (std::abs(total - 1.0) > tol) fail(ErrorCode::Config, "common probabilities must sum to 1");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].size() != m) fail(ErrorCode::Config, "every layer needs one refinement per interval");
    double layer_total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& q = layers[l][i];
      q.validate();
      if (q.lo() != common_boundaries[i] || q.hi() != common_boundaries[i + 1])
        fail(ErrorCode::Config, "refinement end boundaries must coincide with common boundaries");
      double s = 0.0;
      for (double p : q.probs) s += p;
      if (std::abs(s - common_probs[i]) > tol)
        fail(ErrorCode::Config, "refinement probabilities must marginalize to the common probability");
      layer_total += s;
    }
    if (std::abs(layer_total - 1.0) > tol) fail(ErrorCode::Config, "layer probabilities must sum to 1");
  }
}

LayeredScalarCodebook make_layered_codebook(const ScalarSource& src,
                                            std::vector<double> common_boundaries,
                                            std::size_t cells_per_interval) {
  LayeredScalarCodebook cb;
  cb.common_boundaries = std::move(common_boundaries);
  const std::size_t m = cb.common_boundaries.size() - 1;
  cb.layers.assign(2, std::vector<ScalarQuantizer>(m));
  for (auto& layer : cb.layers)
    for (std::size_t i = 0; i < m; ++i)
      layer[i] = cells_from(src, equal_mass_boundaries(src, cb.common_boundaries[i],
                                                       cb.common_boundaries[i + 1],
                                                       cells_per_interval));
  refresh_common(cb, src);
  return cb;
}

LayeredScalarCodebook layered_from_partitions(const ScalarSource& src,
                                              std::vector<double> common_boundaries,
                                              const std::vector<std::vector<double>>& layer_boundaries) {
  LayeredScalarCodebook cb;
  cb.common_boundaries = std::move(common_boundaries);
  const std::size_t m = cb.common_boundaries.size() - 1;
  cb.layers.assign(layer_boundaries.size(), std::vector<ScalarQuantizer>(m));
  for (std::size_t l = 0; l < layer_boundaries.size(); ++l)
    for (std::size_t i = 0; i < m; ++i) {
      const double lo = cb.common_boundaries[i], hi = cb.common_boundaries[i + 1];
      std::vector<double> b{lo};
      for (double t : layer_boundaries[l])
        if (t > lo && t < hi) b.push_back(t);
      b.push_back(hi);
      cb.layers[l][i] = cells_from(src, std::move(b));
    }
  refresh_common(cb, src);
  return cb;
}

RDRecord evaluate_layered(const LayeredScalarCodebook& cb, const ScalarSource& src,
                          const CostWeights& w) {
  const std::size_t m = cb.intervals();
  std::vector<double> packet(3, 0.0), dist(2, 0.0);
  for (std::size_t i = 0; i < m; ++i) packet[2] += plogp(cb.common_probs[i]);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t i = 0; i < m; ++i) {
      const auto& q = cb.layers[l][i];
      const double pc = cb.common_probs[i];
      for (std::size_t k = 0; k < q.cells(); ++k) {
        dist[l] += src.interval_mse(q.boundaries[k], q.boundaries[k + 1], q.reps[k]);
        if (q.probs[k] > 0.0 && pc > 0.0) packet[l] -= q.probs[k] * std::log2(q.probs[k] / pc);
      }
      packet[l] = std::max(packet[l], 0.0);
    }
  return make_record(two_level(), packet, dist, w);
}

LayeredScalarCodebook design_individual_layers(const LayeredScalarCodebook& cb,
                                               const ScalarSource& src, const CostWeights& w,
                                               const EcsqOptions& opt, LayerUpdateReport* report) {
  LayeredScalarCodebook out = cb;
  refresh_common(out, src);
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < out.intervals(); ++i) {
    if (!(out.common_probs[i] > 0.0)) {
      for (auto& layer : out.layers)
        layer[i] = cells_from(src, {out.common_boundaries[i], out.common_boundaries[i + 1]});
      out.degenerate[i] = true;
      ++degenerate;
      continue;
    }
    for (std::size_t l = 0; l < out.layers.size(); ++l)
      out.layers[l][i] = ecsq_refine(src, out.layers[l][i], w.a[l], w.lambda_private[l], opt);
  }
  if (report) report->degenerate_intervals = degenerate;
  return out;
}

LayeredScalarCodebook update_common_boundaries(const LayeredScalarCodebook& cb,
                                               const ScalarSource& src, const CostWeights& w,
                                               CommonUpdateReport* report) {
  CommonUpdateReport rep;
  LayeredScalarCodebook out = cb;
  const double lambda12 = common_weight(w);
  const std::vector<double> p12 = out.common_probs;  // lagged values for the whole sweep
  const std::size_t nl = out.layers.size();

  for (std::size_t k = 1; k < out.intervals(); ++k) {
    const std::size_t left = k - 1, right = k;
    if (!(p12[left] > 0.0) || !(p12[right] > 0.0)) continue;
    double sq = 0.0, lin = 0.0, rate = 0.0;
    double lower = out.common_boundaries[left], upper = out.common_boundaries[right + 1];
    bool usable = true;
    for (std::size_t l = 0; l < nl; ++l) {
      const auto& ql = out.layers[l][left];
      const auto& qr = out.layers[l][right];
      const double xl = ql.reps.back(), xf = qr.reps.front();
      const double pl = ql.probs.back(), pf = qr.probs.front();
      if (!(pl > 0.0) || !(pf > 0.0)) usable = false;
      sq += w.a[l] * (xf * xf - xl * xl);
      lin += w.a[l] * (xf - xl);
      rate += w.lambda_private[l] * (std::log2(pf) - std::log2(pl));
      lower = std::max(lower, ql.boundaries[ql.cells() - 1]);
      upper = std::min(upper, qr.boundaries[1]);
    }
    if (!usable) continue;
    const double den = 2.0 * lin;
    if (!(std::abs(den) > 1e-300) || den < 0.0) {
      ++rep.stationary_ties;
      continue;
    }
    const double num = sq - rate - lambda12 * (std::log2(p12[right]) - std::log2(p12[left]));
    const double t_old = out.common_boundaries[k];
    double t_new = std::clamp(num / den, lower, upper);

    // Exact cost of the adjacent cells and the two common cells at boundary t.
    auto local = [&](double t) {
      double c = 0.0;
      for (std::size_t l = 0; l < nl; ++l) {
        const auto& ql = out.layers[l][left];
        const auto& qr = out.layers[l][right];
        c += cell_term(src, ql.boundaries[ql.cells() - 1], t, w.a[l], w.lambda_private[l]);
        c += cell_term(src, t, qr.boundaries[1], w.a[l], w.lambda_private[l]);
      }
      c += lambda12 * (plogp(src.interval_probability(out.common_boundaries[left], t)) +
                       plogp(src.interval_probability(t, out.common_boundaries[right + 1])));
      return c;
    };
    if (t_new == t_old) continue;
    const double before = local(t_old);
    double after = local(t_new);
    int halvings = 0;
    while (after > before + 1e-15 * std::abs(before) && halvings < 8) {
      t_new = 0.5 * (t_new + t_old);
      after = local(t_new);
      ++halvings;
    }
    if (after > before + 1e-15 * std::abs(before)) {
      ++rep.rejected;
      continue;
    }
    ++rep.moved;
    out.common_boundaries[k] = t_new;
    for (std::size_t l = 0; l < nl; ++l) {
      auto bl = out.layers[l][left].boundaries;
      auto br = out.layers[l][right].boundaries;
      bl.back() = t_new;
      br.front() = t_new;
      out.layers[l][left] = cells_from(src, std::move(bl));
      out.layers[l][right] = cells_from(src, std::move(br));
    }
    out.common_probs[left] = src.interval_probability(out.common_boundaries[left], t_new);
    out.common_probs[right] = src.interval_probability(t_new, out.common_boundaries[right + 1]);
  }
  rep.merged += normalize(out, src);

  if (lambda12 > 0.0) {
    // Merging keeps every overall cell and only lowers the common rate.
    while (out.intervals() > 1) {
      std::size_t best = 0;
      double gain = 0.0;
      for (std::size_t i = 0; i + 1 < out.intervals(); ++i) {
        const double a = out.common_probs[i], b = out.common_probs[i + 1];
        const double g = plogp(a) + plogp(b) - plogp(a + b);
        if (g > gain) {
          gain = g;
          best = i;
        }
      }
      if (!(gain > 0.0)) break;
      merge_into_left(out, best);
      ++rep.merged;
    }
    refresh_common(out, src);
  }
  if (report) *report = rep;
  return out;
}

namespace {

// Best single merge of adjacent intervals with re-optimized refinements.
bool try_merge(LayeredScalarCodebook& cb, const ScalarSource& src, const CostWeights& w,
               const JointScalarOptions& opt, double current) {
  if (cb.intervals() < 2) return false;
  double best_cost = current;
  std::optional<LayeredScalarCodebook> best;
  for (std::size_t i = 0; i + 1 < cb.intervals(); ++i) {
    LayeredScalarCodebook cand = cb;
    merge_into_left(cand, i);
    for (std::size_t l = 0; l < cand.layers.size(); ++l)
      cand.layers[l][i] = ecsq_refine(src, cand.layers[l][i], w.a[l], w.lambda_private[l], opt.inner);
    refresh_common(cand, src);
    const double c = total_cost(cand, src, w);
    if (c < best_cost - opt.trial_gain * std::abs(current)) {
      best_cost = c;
      best = std::move(cand);
    }
  }
  if (!best) return false;
  cb = std::move(*best);
  return true;
}

// Best single removal of an interior refinement boundary, re-optimized.
bool try_cell_merge(LayeredScalarCodebook& cb, const ScalarSource& src, const CostWeights& w,
                    const JointScalarOptions& opt, double current) {
  double best_cost = current;
  std::optional<LayeredScalarCodebook> best;
  for (std::size_t l = 0; l < cb.layers.size(); ++l)
    for (std::size_t i = 0; i < cb.intervals(); ++i) {
      const auto& q = cb.layers[l][i];
      for (std::size_t k = 1; k < q.cells(); ++k) {
        auto b = q.boundaries;
        b.erase(b.begin() + static_cast<long>(k));
        LayeredScalarCodebook cand = cb;
        cand.layers[l][i] = ecsq_refine(src, cells_from(src, std::move(b)), w.a[l],
                                        w.lambda_private[l], opt.inner);
        const double c = total_cost(cand, src, w);
        if (c < best_cost - opt.trial_gain * std::abs(current)) {
          best_cost = c;
          best = std::move(cand);
        }
      }
    }
  if (!best) return false;
  cb = std::move(*best);
  return true;
}

// Best split of a common interval at one of its refinement boundaries; the
// other layers get a matching refinement boundary there.
bool try_split(LayeredScalarCodebook& cb, const ScalarSource& src, const CostWeights& w,
               const JointScalarOptions& opt, double current) {
  double best_cost = current;
  std::optional<LayeredScalarCodebook> best;
  for (std::size_t i = 0; i < cb.intervals(); ++i) {
    std::vector<double> cuts;
    for (const auto& layer : cb.layers) {
      const auto& b = layer[i].boundaries;
      cuts.insert(cuts.end(), b.begin() + 1, b.end() - 1);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (double t : cuts) {
      LayeredScalarCodebook cand = cb;
      cand.common_boundaries.insert(cand.common_boundaries.begin() + static_cast<long>(i) + 1, t);
      for (std::size_t l = 0; l < cand.layers.size(); ++l) {
        const auto& b = cb.layers[l][i].boundaries;
        std::vector<double> left{b.front()}, right{t};
        for (std::size_t k = 1; k + 1 < b.size(); ++k) {
          if (b[k] < t) left.push_back(b[k]);
          else if (b[k] > t) right.push_back(b[k]);
        }
        left.push_back(t);
        right.push_back(b.back());
        auto& layer = cand.layers[l];
        layer[i] = ecsq_refine(src, cells_from(src, std::move(left)), w.a[l], w.lambda_private[l],
                               opt.inner);
        layer.insert(layer.begin() + static_cast<long>(i) + 1,
                     ecsq_refine(src, cells_from(src, std::move(right)), w.a[l],
                                 w.lambda_private[l], opt.inner));
      }
      normalize(cand, src);
      const double c = total_cost(cand, src, w);
      if (c < best_cost - opt.trial_gain * std::abs(current)) {
        best_cost = c;
        best = std::move(cand);
      }
    }
  }
  if (!best) return false;
  cb = std::move(*best);
  return true;
}

constexpr std::size_t kShiftMaxAtoms = 64;
constexpr std::size_t kPairMaxAtoms = 16;

// Optimal grouping of the atoms in [lo, hi) into contiguous cells for one
// layer, by dynamic programming over cell ends. Cuts sit at gap midpoints.
ScalarQuantizer exact_refinement(const ScalarSource& src, const std::vector<double>& gaps, double lo,
                                 double hi, double a, double lambda) {
  const auto v = src.atoms();
  const auto s = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), lo) - v.begin());
  const auto e = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), hi) - v.begin());
  if (e <= s + 1) return cells_from(src, {lo, hi});
  const double p = src.interval_probability(lo, hi);
  auto edge = [&](std::size_t k) { return k == s ? lo : k == e ? hi : gaps[k - 1]; };
  std::vector<double> best(e - s + 1, kInf);
  std::vector<std::size_t> from(e - s + 1, 0);
  best[0] = 0.0;
  for (std::size_t j = s + 1; j <= e; ++j)
    for (std::size_t i = s; i < j; ++i) {
      const double bl = edge(i), bh = edge(j);
      const double q = src.interval_probability(bl, bh);
      double c = best[i - s] + a * src.interval_mse(bl, bh, src.interval_centroid(bl, bh));
      if (q > 0.0 && p > 0.0) c -= lambda * q * std::log2(q / p);
      if (c < best[j - s]) {
        best[j - s] = c;
        from[j - s] = i;
      }
    }
  std::vector<double> cuts;
  for (std::size_t j = e; j != s; j = from[j - s]) cuts.push_back(edge(j));
  cuts.push_back(lo);
  std::reverse(cuts.begin(), cuts.end());
  return cells_from(src, std::move(cuts));
}

// For sources with few atoms: local search over common partitions with
// exactly optimal refinements. Neighbours are the current partition, one
// common boundary relocated to another atom gap, removed or inserted, and
// (at most 16 atoms) two boundaries relocated at once.
bool try_shift(LayeredScalarCodebook& cb, const ScalarSource& src, const CostWeights& w,
               const JointScalarOptions& opt, double current) {
  if (!src.is_atomic() || src.atoms().size() > kShiftMaxAtoms) return false;
  const auto v = src.atoms();
  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) gaps.push_back(0.5 * (v[i] + v[i + 1]));
  auto gap_of = [&](double t) { return std::lower_bound(v.begin(), v.end(), t) - v.begin(); };
  // Gap midpoints in (lo, hi) other than the one holding t.
  auto moves = [&](double t, double lo, double hi) {
    std::vector<double> out;
    for (std::size_t g = 0; g < gaps.size(); ++g)
      if (gaps[g] > lo && gaps[g] < hi && static_cast<long>(g) + 1 != gap_of(t)) out.push_back(gaps[g]);
    return out;
  };
  double best_cost = current;
  std::optional<LayeredScalarCodebook> best;
  auto consider = [&](std::vector<double> common) {
    LayeredScalarCodebook cand;
    cand.common_boundaries = std::move(common);
    const std::size_t m = cand.common_boundaries.size() - 1;
    cand.layers.assign(cb.layers.size(), std::vector<ScalarQuantizer>(m));
    for (std::size_t l = 0; l < cand.layers.size(); ++l)
      for (std::size_t i = 0; i < m; ++i)
        cand.layers[l][i] = exact_refinement(src, gaps, cand.common_boundaries[i],
                                             cand.common_boundaries[i + 1], w.a[l], w.lambda_private[l]);
    refresh_common(cand, src);
    normalize(cand, src);
    const double c = total_cost(cand, src, w);
    if (c < best_cost - opt.trial_gain * std::abs(current)) {
      best_cost = c;
      best = std::move(cand);
    }
  };
  const auto cbd = cb.common_boundaries;
  consider(cbd);
  for (std::size_t j = 1; j + 1 < cbd.size(); ++j) {
    auto removed = cbd;
    removed.erase(removed.begin() + static_cast<long>(j));
    consider(std::move(removed));
    for (double t : moves(cbd[j], cbd[j - 1], cbd[j + 1])) {
      auto moved = cbd;
      moved[j] = t;
      consider(std::move(moved));
    }
  }
  for (std::size_t g = 0; g < gaps.size(); ++g) {
    bool held = false;
    for (double t : cbd) held = held || gap_of(t) == static_cast<long>(g) + 1;
    if (held) continue;
    auto added = cbd;
    added.insert(std::upper_bound(added.begin(), added.end(), gaps[g]), gaps[g]);
    consider(std::move(added));
  }
  if (v.size() <= kPairMaxAtoms)
    for (std::size_t j = 1; j + 2 < cbd.size(); ++j)
      for (std::size_t k = j + 1; k + 1 < cbd.size(); ++k)
        for (double tj : moves(cbd[j], cbd[j - 1], cbd[j + 1]))
          for (double tk : moves(cbd[k], std::max(tj, cbd[k - 1]), cbd[k + 1])) {
            auto moved = cbd;
            moved[j] = tj;
            moved[k] = tk;
            consider(std::move(moved));
          }
  if (!best) return false;
  cb = std::move(*best);
  return true;
}

std::vector<double> jittered_boundaries(const ScalarSource& src, double lo, double hi,
                                        std::size_t n, double jitter, std::mt19937_64* rng) {
  if (!rng || jitter <= 0.0 || n <= 1) return equal_mass_boundaries(src, lo, hi, n);
  if (src.is_atomic()) {
    std::vector<double> mids;
    auto v = src.atoms();
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      if (v[i] >= lo && v[i + 1] < hi) mids.push_back(0.5 * (v[i] + v[i + 1]));
    std::shuffle(mids.begin(), mids.end(), *rng);
    std::uniform_int_distribution<std::size_t> count(0, std::min(n - 1, mids.size()));
    mids.resize(count(*rng));
    std::sort(mids.begin(), mids.end());
    std::vector<double> b{lo};
    b.insert(b.end(), mids.begin(), mids.end());
    b.push_back(hi);
    return b;
  }
  const double base = src.interval_probability(-kInf, lo);
  const double mass = src.interval_probability(lo, hi);
  if (!(mass > 0.0)) return {lo, hi};
  std::uniform_real_distribution<double> u(-0.5 * jitter, 0.5 * jitter);
  std::vector<double> b{lo};
  for (std::size_t k = 1; k < n; ++k) {
    const double level = std::clamp(base + mass * (static_cast<double>(k) + u(*rng)) / n, 0.0, 1.0);
    const double t = src.quantile(level);
    if (t > b.back() && t < hi) b.push_back(t);
  }
  b.push_back(hi);
  return b;
}

LayeredScalarCodebook initial_codebook(const ScalarSource& src, const JointScalarOptions& opt,
                                       std::mt19937_64* rng) {
  LayeredScalarCodebook cb;
  cb.common_boundaries =
      jittered_boundaries(src, src.support_lo(), src.support_hi(), opt.m_init, opt.jitter, rng);
  const std::size_t m = cb.common_boundaries.size() - 1;
  cb.layers.assign(2, std::vector<ScalarQuantizer>(m));
  for (auto& layer : cb.layers)
    for (std::size_t i = 0; i < m; ++i)
      layer[i] = cells_from(src, jittered_boundaries(src, cb.common_boundaries[i],
                                                     cb.common_boundaries[i + 1], opt.n_init,
                                                     opt.jitter, rng));
  refresh_common(cb, src);
  return cb;
}

}  // namespace

JointScalarResult joint_design_scalar_from(const ScalarSource& src, const CostWeights& w,
                                           LayeredScalarCodebook start,
                                           const JointScalarOptions& opt) {
  w.validate(two_level());
  if (start.layers.size() != 2) fail(ErrorCode::Config, "scalar layered design has two decoders");
  normalize(start, src);
  JointScalarResult res;
  LayeredScalarCodebook cb = design_individual_layers(start, src, w, opt.inner);
  double cost = total_cost(cb, src, w);
  res.trace.cost.push_back(cost);
  for (int it = 0; it < opt.max_outer; ++it) {
    LayeredScalarCodebook next = update_common_boundaries(cb, src, w);
    next = design_individual_layers(next, src, w, opt.inner);
    const double c = total_cost(next, src, w);
    cb = std::move(next);
    res.trace.cost.push_back(c);
    res.trace.outer_iterations = it + 1;
    const bool converged = std::abs(cost - c) <= opt.tol * std::max(std::abs(cost), 1e-300);
    cost = c;
    if (converged) {
      if (opt.merge_trials &&
          (try_merge(cb, src, w, opt, cost) || try_cell_merge(cb, src, w, opt, cost) ||
           try_split(cb, src, w, opt, cost) || try_shift(cb, src, w, opt, cost))) {
        cost = total_cost(cb, src, w);
        res.trace.cost.push_back(cost);
        continue;
      }
      break;
    }
  }
  res.codebook = std::move(cb);
  res.record = evaluate_layered(res.codebook, src, w);
  return res;
}

JointScalarResult joint_design_scalar(const ScalarSource& src, const CostWeights& w,
                                      const JointScalarOptions& opt,
                                      const std::vector<LayeredScalarCodebook>& extra_starts) {
  if (opt.m_init == 0 || opt.n_init == 0) fail(ErrorCode::Config, "M_init and N_init must be at least 1");
  if (opt.restarts < 1 && extra_starts.empty()) fail(ErrorCode::Config, "need at least one restart");
  std::optional<JointScalarResult> best;
  std::vector<double> costs;
  auto consider = [&](JointScalarResult r) {
    costs.push_back(r.record.cost);
    if (!best || r.record.cost < best->record.cost) best = std::move(r);
  };
  for (int r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(r));
    JointScalarOptions ropt = opt;
    if (r > 0) {
      // Later restarts also vary the initial sizes, log-uniformly.
      std::uniform_real_distribution<double> u(0.0, 1.0);
      auto draw = [&](std::size_t hi) {
        const double v = std::exp2(u(rng) * std::log2(static_cast<double>(hi) + 1.0));
        return std::clamp<std::size_t>(static_cast<std::size_t>(v), 1, hi);
      };
      ropt.m_init = draw(opt.m_init);
      ropt.n_init = draw(opt.n_init);
    }
    // The second start designs the layers independently; splits then add
    // shared structure.
    if (r == 1) {
      ropt.m_init = 1;
      ropt.n_init = opt.n_init;
    }
    LayeredScalarCodebook start = initial_codebook(src, ropt, r == 0 ? nullptr : &rng);
    consider(joint_design_scalar_from(src, w, std::move(start), opt));
  }
  for (const auto& s : extra_starts) consider(joint_design_scalar_from(src, w, s, opt));
  best->trace.restart_costs = std::move(costs);
  return std::move(*best);
}

}  // namespace cilayer
