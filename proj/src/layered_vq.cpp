#include "cilayer/layered_vq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

double sqdist(std::span<const double> x, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double d = x[k] - c[k];
    s += d * d;
  }
  return s;
}

// Per-codebook constants of the per-sample cost, plus scratch for the
// bottom-up minimization.
struct Scorer {
  const LayeredVQCodebook& cb;
  std::vector<double> a;
  std::vector<double> node_cost;
  std::vector<double> leaf_cost;
  std::vector<double> reps;  // leaf reps, contiguous
  std::vector<std::vector<std::size_t>> hosted;  // per level
  std::size_t deepest = 0;
  // scratch
  std::vector<double> value;
  std::vector<std::size_t> best_child;
  std::vector<std::vector<std::size_t>> best_leaf;
  std::vector<std::size_t> roots;

  Scorer(const LayeredVQCodebook& c, const CostWeights& w) : cb(c) {
    const auto& topo = cb.topology;
    const std::size_t L = topo.decoders();
    w.validate(topo);
    a = w.a;
    deepest = L - 2;
    for (std::size_t k = 0; k + 1 < L; ++k) hosted.push_back(cb.hosted(k));
    node_cost.assign(cb.nodes.size(), kInf);
    for (std::size_t n = 0; n < cb.nodes.size(); ++n) {
      const auto& nd = cb.nodes[n];
      const double parent = nd.parent == kNoNode ? 1.0 : cb.nodes[nd.parent].prob;
      if (nd.prob > 0.0 && parent > 0.0)
        node_cost[n] = -w.packet_weight(topo, topo.common_packet(nd.level)) *
                       std::log2(nd.prob / parent);
      if (nd.parent == kNoNode) roots.push_back(n);
    }
    leaf_cost.assign(cb.leaves.size(), kInf);
    for (std::size_t q = 0; q < cb.leaves.size(); ++q) {
      const auto& lf = cb.leaves[q];
      const double parent = cb.nodes[lf.node].prob;
      if (lf.prob > 0.0 && parent > 0.0)
        leaf_cost[q] = -w.lambda_private[lf.decoder] * std::log2(lf.prob / parent);
    }
    reps.reserve(cb.leaves.size() * cb.dim);
    for (const auto& lf : cb.leaves) reps.insert(reps.end(), lf.rep.begin(), lf.rep.end());
    value.assign(cb.nodes.size(), kInf);
    best_child.assign(cb.nodes.size(), kNoNode);
    best_leaf.assign(cb.nodes.size(), {});
    for (std::size_t n = 0; n < cb.nodes.size(); ++n)
      best_leaf[n].assign(cb.nodes[n].leaves.size(), kNoNode);
  }

  double score(std::size_t n, std::span<const double> x) {
    const auto& nd = cb.nodes[n];
    double v = node_cost[n];
    if (!std::isfinite(v)) return value[n] = kInf;
    const auto& dec = hosted[nd.level];
    for (std::size_t h = 0; h < dec.size(); ++h) {
      double best = kInf;
      std::size_t arg = kNoNode;
      const double al = a[dec[h]];
      for (auto q : nd.leaves[h]) {
        if (!std::isfinite(leaf_cost[q])) continue;
        const double* c0 = reps.data() + q * cb.dim;
        double dist = 0.0;
        for (std::size_t k = 0; k < cb.dim; ++k) dist += (x[k] - c0[k]) * (x[k] - c0[k]);
        const double c = al * dist + leaf_cost[q];
        if (c < best) {
          best = c;
          arg = q;
        }
      }
      best_leaf[n][h] = arg;
      v += best;
    }
    if (nd.level < deepest) {
      double best = kInf;
      std::size_t arg = kNoNode;
      for (auto ch : nd.children) {
        const double c = score(ch, x);
        if (c < best) {
          best = c;
          arg = ch;
        }
      }
      best_child[n] = arg;
      v += best;
    }
    return value[n] = v;
  }

  VqPath assign(std::span<const double> x, double* cost) {
    if (x.size() != cb.dim) fail(ErrorCode::Config, "sample dimension does not match the codebook");
    double best = kInf;
    std::size_t arg = kNoNode;
    // Rescore each root before reading its scratch; the chosen root is
    // rescored last so the argmin tables belong to it.
    for (auto r : roots) {
      const double c = score(r, x);
      if (c < best) {
        best = c;
        arg = r;
      }
    }
    if (arg == kNoNode) fail(ErrorCode::Assignment, "no admissible path for sample");
    score(arg, x);
    VqPath path;
    path.leaves.assign(cb.decoders(), kNoNode);
    std::size_t n = arg;
    while (n != kNoNode) {
      path.nodes.push_back(n);
      const auto& dec = hosted[cb.nodes[n].level];
      for (std::size_t h = 0; h < dec.size(); ++h) path.leaves[dec[h]] = best_leaf[n][h];
      n = cb.nodes[n].level < deepest ? best_child[n] : kNoNode;
    }
    if (cost) *cost = best;
    return path;
  }
};

}  // namespace

std::vector<std::size_t> LayeredVQCodebook::roots() const {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < nodes.size(); ++n)
    if (nodes[n].parent == kNoNode) out.push_back(n);
  return out;
}

std::vector<std::size_t> LayeredVQCodebook::hosted(std::size_t level) const {
  const std::size_t L = decoders();
  if (level + 2 == L) return {level, level + 1};
  return {level};
}

std::size_t LayeredVQCodebook::common_cells(std::size_t level) const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [&](const VqCommonNode& n) { return n.level == level; }));
}

void LayeredVQCodebook::validate(double tol) const {
  const std::size_t L = decoders();
  if (dim == 0) fail(ErrorCode::Config, "codebook dimension must be positive");
  double root_sum = 0.0;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto& nd = nodes[n];
    if (nd.level + 1 >= L) fail(ErrorCode::Config, "common node level out of range");
    if (nd.parent == kNoNode) {
      if (nd.level != 0) fail(ErrorCode::Config, "only level-0 nodes may be roots");
      root_sum += nd.prob;
    } else if (nd.parent >= nodes.size() || nodes[nd.parent].level + 1 != nd.level) {
      fail(ErrorCode::Config, "common node has an inconsistent parent");
    }
    const auto dec = hosted(nd.level);
    if (nd.leaves.size() != dec.size())
      fail(ErrorCode::Config, "common node hosts the wrong number of decoders");
    for (std::size_t h = 0; h < dec.size(); ++h) {
      if (nd.leaves[h].empty()) fail(ErrorCode::Config, "common node without leaves");
      double s = 0.0;
      for (auto q : nd.leaves[h]) {
        if (q >= leaves.size() || leaves[q].node != n || leaves[q].decoder != dec[h])
          fail(ErrorCode::Config, "leaf index inconsistent with its node");
        if (leaves[q].rep.size() != dim) fail(ErrorCode::Config, "leaf rep has wrong dimension");
        s += leaves[q].prob;
      }
      if (std::abs(s - nd.prob) > tol)
        fail(ErrorCode::Config, "leaf probabilities do not add up to their node");
    }
    if (nd.level + 2 < L) {
      if (nd.children.empty()) fail(ErrorCode::Config, "inner common node without children");
      double s = 0.0;
      for (auto c : nd.children) {
        if (c >= nodes.size() || nodes[c].parent != n)
          fail(ErrorCode::Config, "child index inconsistent with its parent");
        s += nodes[c].prob;
      }
      if (std::abs(s - nd.prob) > tol)
        fail(ErrorCode::Config, "child probabilities do not add up to their parent");
    } else if (!nd.children.empty()) {
      fail(ErrorCode::Config, "deepest common node must not have children");
    }
  }
  if (nodes.empty() || std::abs(root_sum - 1.0) > tol)
    fail(ErrorCode::Config, "root probabilities must sum to 1");
}

VqPath assign_sample(std::span<const double> x, const LayeredVQCodebook& cb, const CostWeights& w,
                     double* cost) {
  Scorer sc(cb, w);
  return sc.assign(x, cost);
}

VqAssignment assign_all(const TrainingSet& s, const LayeredVQCodebook& cb, const CostWeights& w) {
  if (s.dim() != cb.dim) fail(ErrorCode::Config, "training set dimension does not match the codebook");
  Scorer sc(cb, w);
  VqAssignment out;
  out.paths.reserve(s.size());
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double c = 0.0;
    out.paths.push_back(sc.assign(s.point(i), &c));
    total += c;
  }
  out.cost = total / static_cast<double>(s.size());
  return out;
}

namespace {

LayeredVQCodebook update_impl(const TrainingSet& s, const LayeredVQCodebook& cb, VqAssignment& a) {
  if (a.paths.size() != s.size()) fail(ErrorCode::Config, "assignment does not cover the training set");
  const std::size_t d = cb.dim;
  std::vector<std::size_t> node_count(cb.nodes.size(), 0), leaf_count(cb.leaves.size(), 0);
  std::vector<std::vector<double>> sums(cb.leaves.size(), std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& p = a.paths[i];
    for (auto n : p.nodes) ++node_count[n];
    const auto x = s.point(i);
    for (auto q : p.leaves) {
      ++leaf_count[q];
      for (std::size_t k = 0; k < d; ++k) sums[q][k] += x[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(s.size());
  LayeredVQCodebook out;
  out.topology = cb.topology;
  out.dim = d;
  std::vector<std::size_t> node_map(cb.nodes.size(), kNoNode), leaf_map(cb.leaves.size(), kNoNode);
  // Parents precede children in every codebook we build, so one pass in
  // index order keeps that property.
  for (std::size_t n = 0; n < cb.nodes.size(); ++n) {
    if (node_count[n] == 0) continue;
    const auto& nd = cb.nodes[n];
    VqCommonNode nn;
    nn.level = nd.level;
    nn.parent = nd.parent == kNoNode ? kNoNode : node_map[nd.parent];
    nn.prob = static_cast<double>(node_count[n]) * inv;
    nn.leaves.resize(nd.leaves.size());
    node_map[n] = out.nodes.size();
    if (nn.parent != kNoNode) out.nodes[nn.parent].children.push_back(node_map[n]);
    out.nodes.push_back(std::move(nn));
  }
  for (std::size_t n = 0; n < cb.nodes.size(); ++n) {
    if (node_map[n] == kNoNode) continue;
    const auto& nd = cb.nodes[n];
    for (std::size_t h = 0; h < nd.leaves.size(); ++h)
      for (auto q : nd.leaves[h]) {
        if (leaf_count[q] == 0) continue;
        VqLeaf lf;
        lf.decoder = cb.leaves[q].decoder;
        lf.node = node_map[n];
        lf.prob = static_cast<double>(leaf_count[q]) * inv;
        lf.rep.resize(d);
        for (std::size_t k = 0; k < d; ++k)
          lf.rep[k] = sums[q][k] / static_cast<double>(leaf_count[q]);
        leaf_map[q] = out.leaves.size();
        out.nodes[lf.node].leaves[h].push_back(leaf_map[q]);
        out.leaves.push_back(std::move(lf));
      }
  }
  for (auto& p : a.paths) {
    for (auto& n : p.nodes) n = node_map[n];
    for (auto& q : p.leaves) q = leaf_map[q];
  }
  return out;
}

}  // namespace

LayeredVQCodebook update_codebooks(const TrainingSet& s, const LayeredVQCodebook& cb,
                                   const VqAssignment& a) {
  VqAssignment copy = a;
  return update_impl(s, cb, copy);
}

RDRecord evaluate_vq(const TrainingSet& s, const LayeredVQCodebook& cb, const VqAssignment& a,
                     const CostWeights& w) {
  const auto& topo = cb.topology;
  const std::size_t L = topo.decoders();
  if (a.paths.size() != s.size()) fail(ErrorCode::Config, "assignment does not cover the training set");
  std::vector<double> dist(L, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto x = s.point(i);
    for (std::size_t l = 0; l < L; ++l) dist[l] += sqdist(x, cb.leaves.at(a.paths[i].leaves[l]).rep);
  }
  for (auto& v : dist) v /= static_cast<double>(s.size());
  std::vector<double> rates(topo.packet_count(), 0.0);
  for (const auto& nd : cb.nodes) {
    const double parent = nd.parent == kNoNode ? 1.0 : cb.nodes[nd.parent].prob;
    if (nd.prob > 0.0) rates[topo.common_packet(nd.level)] -= nd.prob * std::log2(nd.prob / parent);
  }
  for (const auto& lf : cb.leaves) {
    const double parent = cb.nodes[lf.node].prob;
    if (lf.prob > 0.0) rates[lf.decoder] -= lf.prob * std::log2(lf.prob / parent);
  }
  for (auto& r : rates) r = std::max(r, 0.0);
  return make_record(topo, rates, dist, w);
}

LayeredVQCodebook initial_vq_codebook(const TrainingSet& s, const PacketTopology& topo,
                                      const JointVqOptions& opt, std::uint64_t seed) {
  const std::size_t L = topo.decoders();
  if (opt.m_init == 0 || opt.n_init == 0 || (L > 2 && opt.m_sub == 0))
    fail(ErrorCode::Config, "initial codebook sizes must be positive");
  if (opt.m_init * opt.n_init > s.size())
    fail(ErrorCode::Config, "training set smaller than the initial codebook");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  LayeredVQCodebook cb;
  cb.topology = topo;
  cb.dim = s.dim();
  auto add_node = [&](auto&& self, std::size_t level, std::size_t parent, double prob) -> void {
    const std::size_t id = cb.nodes.size();
    VqCommonNode nd;
    nd.level = level;
    nd.parent = parent;
    nd.prob = prob;
    const auto dec = cb.hosted(level);
    nd.leaves.resize(dec.size());
    cb.nodes.push_back(nd);
    if (parent != kNoNode) cb.nodes[parent].children.push_back(id);
    for (std::size_t h = 0; h < dec.size(); ++h)
      for (std::size_t q = 0; q < opt.n_init; ++q) {
        VqLeaf lf;
        lf.decoder = dec[h];
        lf.node = id;
        lf.prob = prob / static_cast<double>(opt.n_init);
        const auto x = s.point(pick(rng));
        lf.rep.assign(x.begin(), x.end());
        cb.nodes[id].leaves[h].push_back(cb.leaves.size());
        cb.leaves.push_back(std::move(lf));
      }
    if (level + 2 < L)
      for (std::size_t c = 0; c < opt.m_sub; ++c)
        self(self, level + 1, id, prob / static_cast<double>(opt.m_sub));
  };
  for (std::size_t i = 0; i < opt.m_init; ++i)
    add_node(add_node, 0, kNoNode, 1.0 / static_cast<double>(opt.m_init));
  return cb;
}

JointVqResult joint_design_vq_from(const TrainingSet& s, const CostWeights& w,
                                   LayeredVQCodebook start, const JointVqOptions& opt) {
  w.validate(start.topology);
  start.validate(1e-9);
  JointVqResult res;
  res.assignment = assign_all(s, start, w);
  res.codebook = update_impl(s, start, res.assignment);
  res.record = evaluate_vq(s, res.codebook, res.assignment, w);
  res.trace.cost.push_back(res.record.cost);
  for (int round = 0; round < opt.max_rounds; ++round) {
    VqAssignment a = assign_all(s, res.codebook, w);
    LayeredVQCodebook next = update_impl(s, res.codebook, a);
    RDRecord rec = evaluate_vq(s, next, a, w);
    ++res.trace.rounds;
    const double prev = res.record.cost;
    if (rec.cost > prev) break;  // only round-off can get here
    res.codebook = std::move(next);
    res.assignment = std::move(a);
    res.record = std::move(rec);
    res.trace.cost.push_back(res.record.cost);
    if (prev - res.record.cost <= opt.tol * std::abs(prev)) break;
  }
  return res;
}

JointVqResult joint_design_vq(const TrainingSet& s, const CostWeights& w,
                              const PacketTopology& topo, const JointVqOptions& opt,
                              const std::vector<LayeredVQCodebook>& extra_starts) {
  w.validate(topo);
  if (opt.restarts < 1 && extra_starts.empty())
    fail(ErrorCode::Config, "joint VQ design needs at least one start");
  std::optional<JointVqResult> best;
  std::vector<double> costs;
  auto consider = [&](JointVqResult r) {
    costs.push_back(r.record.cost);
    if (!best || r.record.cost < best->record.cost) best = std::move(r);
  };
  for (int r = 0; r < opt.restarts; ++r) {
    const std::uint64_t seed = opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(r);
    consider(joint_design_vq_from(s, w, initial_vq_codebook(s, topo, opt, seed), opt));
  }
  for (const auto& cb : extra_starts) consider(joint_design_vq_from(s, w, cb, opt));
  best->trace.restart_costs = std::move(costs);
  return std::move(*best);
}

std::vector<std::vector<double>> sample_reps(const TrainingSet& s, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > s.size()) fail(ErrorCode::Config, "bad number of initial cells");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  std::vector<std::vector<double>> reps;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = s.point(pick(rng));
    reps.emplace_back(x.begin(), x.end());
  }
  return reps;
}

EcvqCodebook design_ecvq(const TrainingSet& s, double a, double lambda,
                         std::vector<std::vector<double>> init_reps, double tol, int max_rounds) {
  if (!(a > 0.0) || !(lambda >= 0.0)) fail(ErrorCode::Config, "ECVQ needs a > 0 and lambda >= 0");
  if (init_reps.empty()) fail(ErrorCode::Config, "ECVQ needs initial reps");
  const std::size_t d = s.dim(), n = s.size();
  EcvqCodebook cb;
  cb.dim = d;
  cb.reps = std::move(init_reps);
  cb.probs.assign(cb.reps.size(), 1.0 / static_cast<double>(cb.reps.size()));
  std::vector<std::size_t> idx(n);
  double prev = kInf;
  for (int round = 0; round <= max_rounds; ++round) {
    std::vector<double> pen(cb.reps.size());
    for (std::size_t k = 0; k < pen.size(); ++k) pen[k] = -lambda * std::log2(cb.probs[k]);
    std::vector<double> flat;
    for (const auto& r : cb.reps) flat.insert(flat.end(), r.begin(), r.end());
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = s.point(i);
      double best = kInf;
      std::size_t arg = 0;
      for (std::size_t k = 0; k < cb.reps.size(); ++k) {
        const double* c0 = flat.data() + k * d;
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) dist += (x[j] - c0[j]) * (x[j] - c0[j]);
        const double c = a * dist + pen[k];
        if (c < best) {
          best = c;
          arg = k;
        }
      }
      idx[i] = arg;
    }
    std::vector<std::size_t> count(cb.reps.size(), 0);
    std::vector<std::vector<double>> sums(cb.reps.size(), std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      ++count[idx[i]];
      const auto x = s.point(i);
      for (std::size_t k = 0; k < d; ++k) sums[idx[i]][k] += x[k];
    }
    std::vector<std::vector<double>> reps;
    std::vector<double> probs;
    std::vector<std::size_t> remap(cb.reps.size(), 0);
    for (std::size_t k = 0; k < cb.reps.size(); ++k) {
      if (count[k] == 0) continue;
      remap[k] = reps.size();
      for (auto& v : sums[k]) v /= static_cast<double>(count[k]);
      reps.push_back(std::move(sums[k]));
      probs.push_back(static_cast<double>(count[k]) / static_cast<double>(n));
    }
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) dist += sqdist(s.point(i), reps[remap[idx[i]]]);
    dist /= static_cast<double>(n);
    const double rate = entropy_bits(probs);
    const double cost = a * dist + lambda * rate;
    if (cost > prev) break;
    cb.reps = std::move(reps);
    cb.probs = std::move(probs);
    cb.distortion = dist;
    cb.rate = rate;
    cb.cost = cost;
    cb.trace.push_back(cost);
    if (std::isfinite(prev) && prev - cost <= tol * std::abs(prev)) break;
    prev = cost;
  }
  return cb;
}

VectorBaseline vector_baseline_designs(const TrainingSet& s, const VectorBaselineOptions& opt) {
  const std::size_t d = s.dim();
  const auto mu = s.mean();
  double trace = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto x = s.point(i);
    for (std::size_t k = 0; k < d; ++k) trace += (x[k] - mu[k]) * (x[k] - mu[k]);
  }
  trace /= static_cast<double>(s.size());
  VectorBaseline out;
  EcvqCodebook single;
  single.dim = d;
  single.reps = {mu};
  single.probs = {1.0};
  single.distortion = trace;
  out.designs.push_back(single);
  std::vector<RDPoint> pts{{0.0, trace}};
  if (trace > 0.0) {
    // Slope of the high-rate Gaussian bound at max_rate + 1, halved.
    const double dd = static_cast<double>(d);
    const double d_hi = trace * std::pow(2.0, -2.0 * (opt.max_rate + 1.0) / dd);
    const double log2_bottom = std::floor(std::log2(std::log(2.0) * 2.0 / dd * d_hi / 2.0));
    const double log2_top = std::ceil(std::log2(4.0 * trace));
    const std::size_t cap = static_cast<std::size_t>(std::exp2(std::ceil(opt.max_rate) + 2.0));
    const std::size_t n0 = std::min({opt.n_init, cap, s.size()});
    for (int r = 0; r < std::max(opt.restarts, 1); ++r) {
      auto reps = sample_reps(s, n0, opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(r));
      for (double l2 = log2_bottom; l2 <= log2_top + 1e-9; l2 += opt.lambda_step_log2) {
        auto cb = design_ecvq(s, 1.0, std::exp2(l2), std::move(reps), opt.tol, opt.max_rounds);
        cb.trace.clear();
        pts.push_back({cb.rate, cb.distortion});
        reps = cb.reps;
        const bool done = cb.reps.size() <= 1 || cb.rate < opt.min_rate;
        out.designs.push_back(std::move(cb));
        if (done) break;
      }
    }
  }
  out.curve = RDCurve::from_points(pts);
  return out;
}

RDCurve vector_baseline(const TrainingSet& s, const VectorBaselineOptions& opt) {
  return vector_baseline_designs(s, opt).curve;
}

const EcvqCodebook& VectorBaseline::nearest(double rate) const {
  if (designs.empty()) fail(ErrorCode::Config, "vector baseline holds no designs");
  std::size_t best = 0;
  for (std::size_t k = 1; k < designs.size(); ++k)
    if (std::abs(designs[k].rate - rate) < std::abs(designs[best].rate - rate)) best = k;
  return designs[best];
}

LayeredVQCodebook nested_vq_seed(const PacketTopology& topo,
                                 const std::vector<const EcvqCodebook*>& levels,
                                 const std::vector<const EcvqCodebook*>& leaves) {
  const std::size_t L = topo.decoders();
  if (levels.size() + 1 != L || leaves.size() != L)
    fail(ErrorCode::Config, "nested seed needs L-1 common codebooks and L leaf codebooks");
  const std::size_t d = leaves[0]->dim;
  auto nearest = [&](const std::vector<double>& x, const std::vector<std::size_t>& ids,
                     const auto& rep_of) {
    std::size_t best = ids.front();
    double bd = kInf;
    for (auto id : ids) {
      const double dd = sqdist(x, rep_of(id));
      if (dd < bd) {
        bd = dd;
        best = id;
      }
    }
    return best;
  };
  LayeredVQCodebook cb;
  cb.topology = topo;
  cb.dim = d;
  // Nodes level by level; rep_of_node keeps the rep of each node's source cell.
  std::vector<std::vector<double>> node_rep;
  std::vector<double> raw;  // unnormalized weight of each node
  std::vector<std::size_t> prev_level;
  for (std::size_t k = 0; k + 1 < L; ++k) {
    const EcvqCodebook& c = *levels[k];
    if (c.dim != d || c.reps.empty()) fail(ErrorCode::Config, "nested seed codebooks disagree");
    std::vector<std::size_t> this_level;
    for (std::size_t q = 0; q < c.reps.size(); ++q) {
      VqCommonNode nd;
      nd.level = k;
      nd.leaves.resize(cb.hosted(k).size());
      if (k > 0)
        nd.parent = nearest(c.reps[q], prev_level, [&](std::size_t id) -> const std::vector<double>& {
          return node_rep[id];
        });
      this_level.push_back(cb.nodes.size());
      if (nd.parent != kNoNode) cb.nodes[nd.parent].children.push_back(cb.nodes.size());
      cb.nodes.push_back(std::move(nd));
      node_rep.push_back(c.reps[q]);
      raw.push_back(c.probs[q]);
    }
    // Parents that received no child keep one made from their own rep.
    for (auto p : prev_level)
      if (cb.nodes[p].children.empty()) {
        VqCommonNode nd;
        nd.level = k;
        nd.parent = p;
        nd.leaves.resize(cb.hosted(k).size());
        cb.nodes[p].children.push_back(cb.nodes.size());
        this_level.push_back(cb.nodes.size());
        cb.nodes.push_back(std::move(nd));
        node_rep.push_back(node_rep[p]);
        raw.push_back(raw[p]);
      }
    prev_level = std::move(this_level);
  }
  // Leaves of every decoder under the nearest node of the level hosting it.
  std::vector<double> leaf_raw;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t level = std::min(l, L - 2);
    const std::size_t h = l < L - 2 || l == L - 2 ? 0 : 1;
    std::vector<std::size_t> hosts;
    for (std::size_t n = 0; n < cb.nodes.size(); ++n)
      if (cb.nodes[n].level == level) hosts.push_back(n);
    const EcvqCodebook& f = *leaves[l];
    if (f.dim != d || f.reps.empty()) fail(ErrorCode::Config, "nested seed codebooks disagree");
    for (std::size_t q = 0; q < f.reps.size(); ++q) {
      const std::size_t n = nearest(f.reps[q], hosts, [&](std::size_t id) -> const std::vector<double>& {
        return node_rep[id];
      });
      VqLeaf lf;
      lf.decoder = l;
      lf.node = n;
      lf.rep = f.reps[q];
      cb.nodes[n].leaves[h].push_back(cb.leaves.size());
      cb.leaves.push_back(std::move(lf));
      leaf_raw.push_back(f.probs[q]);
    }
    for (auto n : hosts)
      if (cb.nodes[n].leaves[h].empty()) {
        VqLeaf lf;
        lf.decoder = l;
        lf.node = n;
        lf.rep = node_rep[n];
        cb.nodes[n].leaves[h].push_back(cb.leaves.size());
        cb.leaves.push_back(std::move(lf));
        leaf_raw.push_back(raw[n]);
      }
  }
  // Probabilities top-down: roots from their raw weights, children and
  // leaves share their parent's probability in proportion to raw weight.
  auto share = [](const std::vector<std::size_t>& ids, const std::vector<double>& w, double total,
                  auto&& set) {
    double sum = 0.0;
    for (auto id : ids) sum += std::max(w[id], 1e-300);
    for (auto id : ids) set(id, total * std::max(w[id], 1e-300) / sum);
  };
  const auto roots = cb.roots();
  share(roots, raw, 1.0, [&](std::size_t id, double p) { cb.nodes[id].prob = p; });
  for (std::size_t n = 0; n < cb.nodes.size(); ++n) {
    auto& nd = cb.nodes[n];
    share(nd.children, raw, nd.prob, [&](std::size_t id, double p) { cb.nodes[id].prob = p; });
    for (const auto& ls : nd.leaves)
      share(ls, leaf_raw, nd.prob, [&](std::size_t id, double p) { cb.leaves[id].prob = p; });
  }
  return cb;
}

}  // namespace cilayer
