#include "cilayer/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

// Rebuilds the codebook from an assignment, keeping reps. Nodes in the
// subtree of `node` (and their leaves) are duplicated per sample group.
SplitCodebook rebuild(const LayeredVQCodebook& cb, const TrainingSet& s, const VqAssignment& a,
                      std::size_t node, const std::vector<std::size_t>& group) {
  if (a.paths.size() != s.size()) fail(ErrorCode::Config, "assignment does not cover the training set");
  std::vector<bool> in_sub(cb.nodes.size(), false);
  if (node != kNoNode) {
    for (std::size_t n = 0; n < cb.nodes.size(); ++n) {
      std::size_t p = n;
      while (p != kNoNode && p != node) p = cb.nodes[p].parent;
      in_sub[n] = p == node;
    }
  }
  std::size_t groups = 1;
  std::vector<std::size_t> g(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (node != kNoNode && a.paths[i].nodes.at(0) == node) g[i] = group.at(i);
    groups = std::max(groups, g[i] + 1);
  }
  auto key = [&](std::size_t n, std::size_t gi) { return n * groups + (in_sub[n] ? gi : 0); };
  auto leaf_key = [&](std::size_t q, std::size_t gi) {
    return q * groups + (in_sub[cb.leaves[q].node] ? gi : 0);
  };
  std::vector<std::size_t> node_count(cb.nodes.size() * groups, 0);
  std::vector<std::size_t> leaf_count(cb.leaves.size() * groups, 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (auto n : a.paths[i].nodes) ++node_count[key(n, g[i])];
    for (auto q : a.paths[i].leaves) ++leaf_count[leaf_key(q, g[i])];
  }
  const double inv = 1.0 / static_cast<double>(s.size());
  SplitCodebook out;
  out.codebook.topology = cb.topology;
  out.codebook.dim = cb.dim;
  std::vector<std::size_t> node_map(node_count.size(), kNoNode), leaf_map(leaf_count.size(), kNoNode);
  for (std::size_t n = 0; n < cb.nodes.size(); ++n)
    for (std::size_t gi = 0; gi < groups; ++gi) {
      const std::size_t k = n * groups + gi;
      if (node_count[k] == 0) continue;
      const auto& nd = cb.nodes[n];
      VqCommonNode nn;
      nn.level = nd.level;
      nn.parent = nd.parent == kNoNode ? kNoNode : node_map[key(nd.parent, gi)];
      nn.prob = static_cast<double>(node_count[k]) * inv;
      nn.leaves.resize(nd.leaves.size());
      node_map[k] = out.codebook.nodes.size();
      if (nn.parent != kNoNode) out.codebook.nodes[nn.parent].children.push_back(node_map[k]);
      out.codebook.nodes.push_back(std::move(nn));
    }
  for (std::size_t n = 0; n < cb.nodes.size(); ++n) {
    const auto& nd = cb.nodes[n];
    for (std::size_t h = 0; h < nd.leaves.size(); ++h)
      for (auto q : nd.leaves[h])
        for (std::size_t gi = 0; gi < groups; ++gi) {
          const std::size_t k = q * groups + gi;
          if (leaf_count[k] == 0) continue;
          VqLeaf lf = cb.leaves[q];
          lf.node = node_map[key(n, gi)];
          lf.prob = static_cast<double>(leaf_count[k]) * inv;
          leaf_map[k] = out.codebook.leaves.size();
          out.codebook.nodes[lf.node].leaves[h].push_back(leaf_map[k]);
          out.codebook.leaves.push_back(std::move(lf));
        }
  }
  out.assignment = a;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& p = out.assignment.paths[i];
    for (auto& n : p.nodes) n = node_map[key(n, g[i])];
    for (auto& q : p.leaves) q = leaf_map[leaf_key(q, g[i])];
  }
  return out;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

double sq(std::span<const double> x, std::span<const double> y) {
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) d += (x[k] - y[k]) * (x[k] - y[k]);
  return d;
}

}  // namespace

SplitCodebook observed_codebook(const LayeredVQCodebook& cb, const TrainingSet& s,
                                const VqAssignment& a) {
  return rebuild(cb, s, a, kNoNode, {});
}

SplitCodebook split_common_region(const LayeredVQCodebook& cb, const TrainingSet& s,
                                  const VqAssignment& a, std::size_t node,
                                  const std::vector<std::size_t>& group) {
  if (node >= cb.nodes.size() || cb.nodes[node].level != 0)
    fail(ErrorCode::Config, "split needs a node of the all-decoder common packet");
  if (group.size() != s.size()) fail(ErrorCode::Config, "one group label per sample is required");
  return rebuild(cb, s, a, node, group);
}

AuditReport regularity_audit(const LayeredVQCodebook& cb, const TrainingSet& s,
                             const CostWeights& w, const AuditOptions& opt) {
  const VqAssignment a0 = assign_all(s, cb, w);
  const SplitCodebook base = observed_codebook(cb, s, a0);
  const RDRecord before = evaluate_vq(s, base.codebook, base.assignment, w);
  AuditReport report;
  for (auto root : base.codebook.roots()) {
    RegionAudit ra;
    ra.node = root;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (base.assignment.paths[i].nodes[0] == root) members.push_back(i);
    ra.samples = members.size();
    const std::size_t stride = (members.size() + opt.max_points - 1) / std::max<std::size_t>(opt.max_points, 1);
    std::vector<std::size_t> pts;
    for (std::size_t j = 0; j < members.size(); j += std::max<std::size_t>(stride, 1)) pts.push_back(members[j]);
    const std::size_t n = pts.size();
    const std::size_t k = std::min(opt.k, n > 0 ? n - 1 : 0);
    // k nearest neighbors by brute force, ties by index.
    std::vector<std::vector<std::size_t>> knn(n);
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t u = 0; u < n && k > 0; ++u) {
      for (std::size_t v = 0; v < n; ++v)
        d[v] = {v == u ? kInf : sq(s.point(pts[u]), s.point(pts[v])), v};
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
      for (std::size_t j = 0; j < k; ++j) knn[u].push_back(d[j].second);
      std::sort(knn[u].begin(), knn[u].end());
    }
    UnionFind uf(n);
    for (std::size_t u = 0; u < n; ++u)
      for (auto v : knn[u])
        if (std::binary_search(knn[v].begin(), knn[v].end(), u)) uf.unite(u, v);
    std::map<std::size_t, std::size_t> size;
    for (std::size_t u = 0; u < n; ++u) ++size[uf.find(u)];
    const double min_size = std::max(2.0 * static_cast<double>(opt.k), opt.min_component * static_cast<double>(n));
    std::map<std::size_t, std::size_t> label;  // component root -> group
    for (const auto& [r, c] : size)
      if (static_cast<double>(c) >= min_size) label.emplace(r, label.size());
    ra.components = label.size();
    ra.disconnected = label.size() >= 2;
    if (ra.disconnected) {
      ++report.disconnected;
      // Every region sample joins the group of its nearest sampled point
      // that lies in a significant component.
      std::vector<std::size_t> group(s.size(), 0);
      for (auto i : members) {
        double best = kInf;
        std::size_t g = 0;
        for (std::size_t u = 0; u < n; ++u) {
          const auto it = label.find(uf.find(u));
          if (it == label.end()) continue;
          const double dd = sq(s.point(i), s.point(pts[u]));
          if (dd < best) {
            best = dd;
            g = it->second;
          }
        }
        group[i] = g;
      }
      // Components that share a leaf of any decoder are merged, so the
      // split runs along overall cells.
      UnionFind cells(label.size());
      std::map<std::size_t, std::size_t> leaf_group;
      for (auto i : members)
        for (auto q : base.assignment.paths[i].leaves) {
          const auto [it, fresh] = leaf_group.emplace(q, group[i]);
          if (!fresh) cells.unite(it->second, group[i]);
        }
      std::map<std::size_t, std::size_t> relabel;
      for (auto i : members) group[i] = relabel.emplace(cells.find(group[i]), relabel.size()).first->second;
      ra.cell_groups = relabel.size();
      if (ra.cell_groups < 2) {
        ++report.inherited;
        report.regions.push_back(ra);
        continue;
      }
      const SplitCodebook split = split_common_region(base.codebook, s, base.assignment, root, group);
      const RDRecord after = evaluate_vq(s, split.codebook, split.assignment, w);
      ra.cost_before = before.cost;
      ra.cost_after = after.cost;
      for (std::size_t l = 0; l < before.distortion.size(); ++l) {
        ra.distortion_change = std::max(ra.distortion_change, std::abs(after.distortion[l] - before.distortion[l]));
        ra.receive_change = std::max(ra.receive_change, std::abs(after.receive_rates[l] - before.receive_rates[l]));
      }
      ra.preserved = ra.distortion_change <= 1e-12 && ra.receive_change <= 1e-12;
      ra.unexplained = !(ra.preserved && after.cost < before.cost);
      if (ra.unexplained) ++report.unexplained;
    }
    report.regions.push_back(ra);
  }
  return report;
}

}  // namespace cilayer
