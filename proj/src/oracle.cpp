#include "cilayer/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

std::vector<double> cuts_to_boundaries(const ScalarSource& src, const AtomCuts& cuts) {
  const auto v = src.atoms();
  std::vector<double> b{src.support_lo()};
  for (auto c : cuts) b.push_back(0.5 * (v[c - 1] + v[c]));
  b.push_back(src.support_hi());
  return b;
}

struct RunBest {
  std::vector<double> cost;   // by cell count (index k = k cells)
  std::vector<AtomCuts> cuts; // interior cuts achieving it
};

}  // namespace

LayeredScalarCodebook codebook_from_cuts(const ScalarSource& src, const AtomCuts& common,
                                         const std::vector<AtomCuts>& layers) {
  std::vector<std::vector<double>> lb;
  for (const auto& c : layers) lb.push_back(cuts_to_boundaries(src, c));
  return layered_from_partitions(src, cuts_to_boundaries(src, common), lb);
}

OracleResult brute_force_layered_oracle(const ScalarSource& src, const CostWeights& w,
                                        std::size_t max_cells) {
  if (!src.is_atomic()) fail(ErrorCode::Config, "oracle needs an atomic source");
  const std::size_t n = src.atoms().size();
  if (n == 0 || n > 12) fail(ErrorCode::Config, "oracle is limited to 12 atoms");
  if (max_cells == 0) fail(ErrorCode::Config, "oracle needs max_cells >= 1");
  const auto topo = PacketTopology::nested_chain(2);
  w.validate(topo);
  const auto v = src.atoms();
  const auto m = src.atom_masses();
  std::vector<double> cm(n + 1, 0.0), cf(n + 1, 0.0), cs(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    cm[k + 1] = cm[k] + m[k];
    cf[k + 1] = cf[k] + m[k] * v[k];
    cs[k + 1] = cs[k] + m[k] * v[k] * v[k];
  }
  auto mass = [&](std::size_t i, std::size_t j) { return cm[j] - cm[i]; };
  auto mse = [&](std::size_t i, std::size_t j) {
    const double p = mass(i, j);
    if (p <= 0.0) return 0.0;
    const double f = cf[j] - cf[i];
    return std::max(0.0, (cs[j] - cs[i]) - f * f / p);
  };
  const std::size_t cap = std::min(max_cells, n);

  // best[l][i][j]: cheapest refinement of run [i, j) per cell count.
  std::vector<std::vector<std::vector<RunBest>>> best(
      2, std::vector<std::vector<RunBest>>(n + 1, std::vector<RunBest>(n + 1)));
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j <= n; ++j) {
        RunBest& rb = best[l][i][j];
        rb.cost.assign(cap + 1, kInf);
        rb.cuts.assign(cap + 1, {});
        const double P = mass(i, j);
        const std::size_t inner = j - i - 1;
        for (std::size_t mask = 0; mask < (std::size_t{1} << inner); ++mask) {
          AtomCuts cuts;
          for (std::size_t b = 0; b < inner; ++b)
            if (mask >> b & 1U) cuts.push_back(i + 1 + b);
          const std::size_t k = cuts.size() + 1;
          if (k > cap) continue;
          double c = 0.0;
          std::size_t lo = i;
          for (std::size_t e = 0; e <= cuts.size(); ++e) {
            const std::size_t hi = e < cuts.size() ? cuts[e] : j;
            const double p = mass(lo, hi);
            c += w.a[l] * mse(lo, hi);
            if (p > 0.0 && P > 0.0) c -= w.lambda_private[l] * p * std::log2(p / P);
            lo = hi;
          }
          if (c < rb.cost[k]) {
            rb.cost[k] = c;
            rb.cuts[k] = std::move(cuts);
          }
        }
      }

  const double mu = w.packet_weight(topo, topo.common_packet(0));
  OracleResult out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << (n - 1)); ++mask) {
    AtomCuts common;
    for (std::size_t b = 0; b + 1 < n; ++b)
      if (mask >> b & 1U) common.push_back(b + 1);
    if (common.size() + 1 > cap) continue;
    ++out.common_partitions;
    std::vector<std::size_t> edges{0};
    edges.insert(edges.end(), common.begin(), common.end());
    edges.push_back(n);
    double total = 0.0;
    for (std::size_t r = 0; r + 1 < edges.size(); ++r) {
      const double P = mass(edges[r], edges[r + 1]);
      if (P > 0.0) total -= mu * P * std::log2(P);
    }
    std::vector<AtomCuts> layer_cuts(2);
    for (std::size_t l = 0; l < 2 && std::isfinite(total); ++l) {
      // Knapsack over runs: g[k] = cheapest refinement of the runs so far
      // using k cells, with back-pointers per run.
      const std::size_t runs = edges.size() - 1;
      std::vector<std::vector<double>> g(runs + 1, std::vector<double>(cap + 1, kInf));
      std::vector<std::vector<std::size_t>> pick(runs + 1, std::vector<std::size_t>(cap + 1, 0));
      g[0][0] = 0.0;
      for (std::size_t r = 0; r < runs; ++r) {
        const RunBest& rb = best[l][edges[r]][edges[r + 1]];
        for (std::size_t k0 = 0; k0 <= cap; ++k0) {
          if (!std::isfinite(g[r][k0])) continue;
          for (std::size_t k = 1; k0 + k <= cap; ++k) {
            const double c = g[r][k0] + rb.cost[k];
            if (c < g[r + 1][k0 + k]) {
              g[r + 1][k0 + k] = c;
              pick[r + 1][k0 + k] = k;
            }
          }
        }
      }
      std::size_t kbest = 0;
      for (std::size_t k = 1; k <= cap; ++k)
        if (g[runs][k] < g[runs][kbest]) kbest = k;
      if (!std::isfinite(g[runs][kbest])) {
        total = kInf;
        break;
      }
      total += g[runs][kbest];
      std::vector<AtomCuts> per_run(runs);
      for (std::size_t r = runs, k = kbest; r > 0; --r) {
        const std::size_t kr = pick[r][k];
        per_run[r - 1] = best[l][edges[r - 1]][edges[r]].cuts[kr];
        k -= kr;
      }
      for (std::size_t r = 0; r < runs; ++r) {
        if (r > 0) layer_cuts[l].push_back(edges[r]);
        layer_cuts[l].insert(layer_cuts[l].end(), per_run[r].begin(), per_run[r].end());
      }
    }
    if (total < out.cost) {
      out.cost = total;
      out.common = common;
      out.layers = layer_cuts;
    }
  }
  if (!std::isfinite(out.cost)) fail(ErrorCode::DegenerateDesign, "oracle found no admissible partition");
  out.codebook = codebook_from_cuts(src, out.common, out.layers);
  out.record = evaluate_layered(out.codebook, src, w);
  return out;
}

OracleInstance random_oracle_instance(std::uint64_t seed, std::size_t atoms) {
  if (atoms < 2 || atoms > 12) fail(ErrorCode::Config, "oracle instances have 2 to 12 atoms");
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values, masses;
  for (std::size_t k = 0; k < atoms; ++k) {
    values.push_back(static_cast<double>(k) + 0.8 * u(rng));
    masses.push_back(0.2 + u(rng));
  }
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (double& m : masses) m /= total;
  auto src = ScalarSource::discrete(values, masses);
  const double var = src.variance();
  std::vector<double> lambdas;
  for (int l = 0; l < 2; ++l) lambdas.push_back(var * std::pow(10.0, -2.0 * u(rng)));
  const double theta = 0.5 * u(rng);
  return {std::move(src), CostWeights::with_sharing(lambdas, theta)};
}

}  // namespace cilayer
