// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here; pass criterion numbers as arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "cilayer/baseline.hpp"
#include "cilayer/laplacian_fast.hpp"
#include "cilayer/layered_scalar.hpp"
#include "cilayer/oracle.hpp"
#include "cilayer/rd_harness.hpp"
#include "cilayer/regularity.hpp"

using namespace cilayer;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SourceSpec laplacian() {
  SourceSpec s;
  s.kind = "laplacian";
  s.lambda = 1.0;
  return s;
}

SourceSpec gaussian() {
  SourceSpec s;
  s.kind = "gaussian";
  s.mu = {0.0, 1.0};
  s.sigma = {1.0, 1.0, 1.0, 2.0};
  s.training_size = 100000;
  return s;
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0; lo + i * step <= hi + 1e-9; ++i) g.push_back(lo + i * step);
  return g;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Best row with calibrated receive rates meeting a predicate, by largest
// reduction. The predicates test the achieved common rate, so rows whose
// common rate missed its grid value still count.
const SweepRow* find_row(const SweepResult& r, const std::function<bool(const SweepRow&)>& pred) {
  const SweepRow* best = nullptr;
  for (const auto& row : r.rows)
    if (row.usable() && pred(row) &&
        (!best || row.record.transmit_reduction() > best->record.transmit_reduction()))
      best = &row;
  return best;
}

std::string describe(const SweepRow& row) {
  const auto& r = row.record;
  return "R12 " + fmt("%.3f", r.common_rate()) + ", dD " + fmt("%.3f", r.excess_distortion_db) + " dB, Rt " +
         fmt("%.3f", r.transmit_rate) + ", reduction " + fmt("%.1f", 100.0 * r.transmit_reduction()) + " %";
}

bool nonincreasing(const std::vector<double>& c) {
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] > c[i - 1] + 1e-12 * std::abs(c[i - 1])) return false;
  return true;
}

// 1. Uniform toy.
Outcome toy() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  cfg.source.kind = "uniform";
  cfg.source.a = 0.0;
  cfg.source.b = 6.0;
  cfg.targets = {2.0, std::log2(6.0)};
  cfg.r_common_grid = {1.0};
  cfg.tol = 1e-15;
  cfg.keep_codebooks = true;
  const auto res = sweep(cfg);
  const double secs = seconds_since(t0);
  const auto& row = res.rows.at(0);
  if (!row.ok || !row.scalar_codebook) return {false, "design failed: " + row.warning};
  const auto& cb = *row.scalar_codebook;
  auto max_err = [](const std::vector<double>& got, const std::vector<double>& want) {
    if (got.size() != want.size()) return kInf;
    double e = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) e = std::max(e, std::abs(got[i] - want[i]));
    return e;
  };
  const double e = std::max({max_err(cb.common_boundaries, {0, 3, 6}),
                             max_err(cb.overall(0).boundaries, {0, 1.5, 3, 4.5, 6}),
                             max_err(cb.overall(1).boundaries, {0, 1, 2, 3, 4, 5, 6})});
  const auto& r = row.record;
  const double red = 100.0 * r.transmit_reduction();
  const bool pass = e <= 1e-6 && std::abs(r.rate("12") - 1.0) <= 0.01 && std::abs(r.rate("1") - 1.0) <= 0.01 &&
                    std::abs(r.rate("2") - std::log2(3.0)) <= 0.01 && std::abs(red - 21.8) <= 0.5 && secs < 1.0;
  return {pass, "boundary error " + fmt("%.2g", e) + ", R12 " + fmt("%.4f", r.rate("12")) + ", R1 " +
                    fmt("%.4f", r.rate("1")) + ", R2 " + fmt("%.4f", r.rate("2")) + ", reduction " +
                    fmt("%.2f", red) + " %, " + fmt("%.2f", secs) + " s"};
}

// 2. Laplacian joint sweep at c = (2, 3).
Outcome laplacian_sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  cfg.source = laplacian();
  cfg.targets = {2.0, 3.0};
  cfg.r_common_grid = grid(0.0, 2.0, 0.1);
  cfg.restarts = 0;
  const auto res = sweep(cfg);
  const double secs = seconds_since(t0);
  const auto& end = res.rows.back();
  const bool a = end.ok && std::abs(end.record.excess_distortion_db - 0.8) <= 0.3;
  const auto* b = find_row(res, [](const SweepRow& row) {
    return row.record.common_rate() >= 0.6 && row.record.excess_distortion_db <= 0.15 &&
           row.record.transmit_rate <= 4.4;
  });
  std::size_t checked = 0, above = 0, failed = 0, common_off = 0;
  double worst = -kInf;
  for (std::size_t i = 1; i + 1 < res.rows.size(); ++i) {
    const auto& row = res.rows[i];
    if (!row.usable()) {
      ++failed;
      continue;
    }
    if (!row.ok) ++common_off;
    const double hull = res.hull_delta_d(row.record.transmit_rate);
    if (std::isnan(hull)) continue;
    ++checked;
    worst = std::max(worst, row.record.excess_distortion_db - hull);
    if (row.record.excess_distortion_db > hull + 1e-3) ++above;
  }
  const bool c = !res.hull.empty() && checked > 0 && above == 0;
  std::ostringstream os;
  os << "(a) " << (a ? "ok" : "FAIL") << " endpoint dD "
     << (end.ok ? fmt("%.3f", end.record.excess_distortion_db) : "n/a") << " dB vs 0.8 +- 0.3; (b) "
     << (b ? "ok " + describe(*b) : std::string("FAIL no qualifying point")) << "; (c) " << (c ? "ok" : "FAIL")
     << " " << checked << " intermediate points, " << above << " above the hull (max excess over hull "
     << fmt("%.3f", worst) << " dB), " << common_off << " with the common rate off its grid value, " << failed
     << " failed; " << fmt("%.1f", secs)
     << " s";
  return {a && b && c && secs < 120.0, os.str()};
}

// 3. Spot check at c = (2, 4).
Outcome spot_check() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  cfg.source = laplacian();
  cfg.targets = {2.0, 4.0};
  cfg.r_common_grid = grid(0.6, 1.2, 0.1);
  cfg.restarts = 0;
  const auto res = sweep(cfg);
  const auto* row = find_row(res, [](const SweepRow& r) {
    return r.record.common_rate() >= 0.6 && r.record.excess_distortion_db <= 0.15 &&
           r.record.transmit_reduction() >= 0.10;
  });
  return {row != nullptr, (row ? describe(*row) : std::string("no qualifying point")) + ", " +
                              fmt("%.1f", seconds_since(t0)) + " s"};
}

// 4. Low-complexity design at c = (1.6, 2.8).
Outcome fast_design() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto src = ScalarSource::laplacian(1.0);
  ScalarBaselineOptions bo;
  bo.max_rate = 3.8;
  const auto curve = scalar_baseline(src, bo);
  FastOptions fo;
  fo.r12_grid = grid(0.0, 1.6, 0.1);
  const auto fr = design_fast(src, 1.6, 2.8, curve, fo);
  const double secs = seconds_since(t0);
  const FastPoint* hit = nullptr;
  for (const auto& p : fr.points)
    if (p.feasible && p.record.common_rate() >= 0.3 && p.record.excess_distortion_db <= 0.15 &&
        p.record.transmit_reduction() >= 0.06 &&
        (!hit || p.record.transmit_reduction() > hit->record.transmit_reduction()))
      hit = &p;
  if (!hit) return {false, "no qualifying point, " + fmt("%.1f", secs) + " s"};
  // Joint design at the same weights, from its own starts only.
  const double j_fast = evaluate_layered(hit->codebook, src, hit->weights).cost;
  const double j_joint = joint_design_scalar(src, hit->weights, {}).record.cost;
  const bool dominated = j_fast >= j_joint - 1e-6;
  std::ostringstream os;
  os << "R12 " << fmt("%.3f", hit->record.common_rate()) << ", dD " << fmt("%.3f", hit->record.excess_distortion_db)
     << " dB, reduction " << fmt("%.1f", 100.0 * hit->record.transmit_reduction()) << " %; J fast "
     << fmt("%.6f", j_fast) << " vs joint " << fmt("%.6f", j_joint) << "; " << fmt("%.1f", secs) << " s";
  return {dominated && secs < 30.0, os.str()};
}

// 5. Two-level vector design on the correlated Gaussian.
Outcome vector_design() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  cfg.source = gaussian();
  cfg.targets = {3.1, 3.8};
  cfg.r_common_grid = {1.6};
  cfg.designer = DesignerKind::Vq;
  cfg.restarts = 0;
  const auto res = sweep(cfg);
  const double secs = seconds_since(t0);
  const auto* row = find_row(res, [](const SweepRow& r) {
    return r.record.common_rate() >= 1.2 && r.record.excess_distortion_db <= 0.3 &&
           r.record.transmit_reduction() >= 0.15;
  });
  std::string detail = row ? describe(*row) : "no qualifying point";
  if (!row && !res.rows.empty())
    detail += " (" + (res.rows[0].record.packet_rates.empty() ? res.rows[0].warning : describe(res.rows[0])) + " [" +
              res.rows[0].status() + "])";
  return {row != nullptr && secs < 600.0, detail + ", 1e5 samples, " + fmt("%.0f", secs) + " s"};
}

// 6. Three decoders at c = (3.3, 3.4, 3.6).
Outcome multilayer() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig cfg;
  cfg.source = gaussian();
  cfg.targets = {3.3, 3.4, 3.6};
  cfg.r_common_grid = {2.0, 2.4};
  cfg.designer = DesignerKind::MultilayerVq;
  cfg.restarts = 0;
  const auto res = sweep(cfg);
  const double secs = seconds_since(t0);
  const SweepRow* row = nullptr;
  for (const auto& r : res.rows)
    if (!r.record.packet_rates.empty() && r.usable() && r.record.transmit_reduction() >= 0.35 &&
        r.record.excess_distortion_db <= 0.5)
      row = &r;
  std::string detail;
  for (const auto& r : res.rows) {
    if (!detail.empty()) detail += "; ";
    detail += "target " + fmt("%.1f", r.r_common_target) + ": " +
              (r.record.packet_rates.empty() ? r.warning : describe(r) + " [" + r.status() + "]");
  }
  return {row != nullptr && secs < 1200.0, detail + ", " + fmt("%.0f", secs) + " s"};
}

// 7. Oracle equivalence.
Outcome oracle() {
  double worst = -kInf, lowest = kInf;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto inst = random_oracle_instance(k + 1, 4 + k % 5);
    const auto o = brute_force_layered_oracle(inst.source, inst.weights);
    JointScalarOptions opt;
    opt.restarts = 5;
    opt.seed = k + 1;
    const auto j = joint_design_scalar(inst.source, inst.weights, opt);
    const double gap = (j.record.cost - o.cost) / std::abs(o.cost);
    worst = std::max(worst, gap);
    lowest = std::min(lowest, j.record.cost - o.cost);
  }
  return {worst <= 0.01 && lowest >= -1e-9,
          "20 sources with 4-8 atoms, worst relative gap " + fmt("%.3g", worst) + ", lowest J - J_oracle " +
              fmt("%.3g", lowest)};
}

// 8. Monotone cost on randomized instances.
Outcome monotonicity() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_source = [&](int k) {
    switch (k % 3) {
      case 0: return ScalarSource::laplacian(0.3 + 2.0 * u(rng));
      case 1: return ScalarSource::uniform(-u(rng), 1.0 + 5.0 * u(rng));
      default: {
        const auto inst = random_oracle_instance(1000 + static_cast<std::uint64_t>(k), 3 + k % 10);
        return inst.source;
      }
    }
  };
  int ecsq_bad = 0, joint_bad = 0, vq_bad = 0;
  for (int k = 0; k < 50; ++k) {
    const auto src = random_source(k);
    EcsqTrace trace;
    design_ecsq(src, 1.0, src.variance() * std::pow(10.0, -2.5 * u(rng)), 2 + k % 30, std::nullopt, {}, &trace);
    if (!nonincreasing(trace.cost)) ++ecsq_bad;
  }
  for (int k = 0; k < 50; ++k) {
    const auto src = random_source(k);
    const double v = src.variance();
    const auto w = CostWeights::with_sharing({v * std::pow(10.0, -2.0 * u(rng)), v * std::pow(10.0, -2.5 * u(rng))},
                                             0.9 * u(rng) - 0.2);
    JointScalarOptions opt;
    opt.restarts = 1;
    opt.seed = static_cast<std::uint64_t>(k);
    const auto res = joint_design_scalar(src, w, opt);
    if (!nonincreasing(res.trace.cost)) ++joint_bad;
  }
  const auto gsrc = VectorSource::gaussian({0.0, 1.0}, {1.0, 1.0, 1.0, 2.0});
  for (int k = 0; k < 50; ++k) {
    const auto s = draw_training_set(gsrc, 2000, static_cast<std::uint64_t>(k + 1));
    const std::size_t L = 2 + k % 2;
    std::vector<double> lam;
    for (std::size_t l = 0; l < L; ++l) lam.push_back(std::pow(10.0, -0.5 - 1.5 * u(rng)));
    JointVqOptions opt;
    opt.restarts = 1;
    opt.m_init = 8;
    opt.seed = static_cast<std::uint64_t>(k + 1);
    const auto res = joint_design_vq(s, CostWeights::with_sharing(lam, 0.8 * u(rng)), PacketTopology::nested_chain(L),
                                     opt);
    if (!nonincreasing(res.trace.cost)) ++vq_bad;
  }
  return {ecsq_bad == 0 && joint_bad == 0 && vq_bad == 0,
          "violations: design_ecsq " + std::to_string(ecsq_bad) + "/50, joint_design_scalar " +
              std::to_string(joint_bad) + "/50, joint_design_vq " + std::to_string(vq_bad) + "/50"};
}

// 9. Connectivity audit of common regions.
Outcome audit() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto gsrc = VectorSource::gaussian({0.0, 1.0}, {1.0, 1.0, 1.0, 2.0});
  std::size_t unexplained = 0, disconnected = 0, inherited = 0, regions = 0;
  for (int k = 0; k < 20; ++k) {
    const auto s = draw_training_set(gsrc, 5000, static_cast<std::uint64_t>(100 + k));
    const auto w = CostWeights::with_sharing({std::pow(10.0, -0.7 - u(rng)), std::pow(10.0, -1.0 - u(rng))},
                                             0.7 * u(rng));
    JointVqOptions opt;
    opt.restarts = 1;
    opt.seed = static_cast<std::uint64_t>(k + 1);
    const auto res = joint_design_vq(s, w, PacketTopology::nested_chain(2), opt);
    const auto rep = regularity_audit(res.codebook, s, w);
    unexplained += rep.unexplained;
    disconnected += rep.disconnected;
    inherited += rep.inherited;
    regions += rep.regions.size();
  }
  // Constructed case: the two outer of three clusters share a common cell.
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<double> xs;
  std::vector<std::size_t> group;
  for (double cx : {-5.0, 0.0, 5.0})
    for (int i = 0; i < 400; ++i) {
      xs.push_back(cx + n(rng));
      xs.push_back(n(rng));
      group.push_back(cx > 0.0 ? 1 : 0);
    }
  const TrainingSet s(2, std::move(xs));
  LayeredVQCodebook cb;
  cb.dim = 2;
  cb.nodes.resize(2);
  for (auto& node : cb.nodes) node.leaves.resize(2);
  for (std::size_t d = 0; d < 2; ++d)
    for (auto [node, x] : {std::pair<std::size_t, double>{0, -5.0}, {0, 5.0}, {1, 0.0}}) {
      cb.nodes[node].leaves[d].push_back(cb.leaves.size());
      cb.leaves.push_back({d, node, 1.0 / 3.0, {x, 0.0}});
    }
  cb.nodes[0].prob = 2.0 / 3.0;
  cb.nodes[1].prob = 1.0 / 3.0;
  const auto w = CostWeights::with_sharing({0.05, 0.05}, 0.3);
  const auto obs = observed_codebook(cb, s, assign_all(s, cb, w));
  const auto split = split_common_region(obs.codebook, s, obs.assignment, 0, group);
  const auto before = evaluate_vq(s, obs.codebook, obs.assignment, w);
  const auto after = evaluate_vq(s, split.codebook, split.assignment, w);
  double dd = 0.0, dr = 0.0;
  for (std::size_t l = 0; l < 2; ++l) {
    dd = std::max(dd, std::abs(after.distortion[l] - before.distortion[l]));
    dr = std::max(dr, std::abs(after.receive_rates[l] - before.receive_rates[l]));
  }
  const bool lowered = after.cost < before.cost;
  const bool pass = unexplained == 0 && dd <= 1e-12 && dr <= 1e-12 && lowered;
  return {pass, "20 designs, " + std::to_string(regions) + " common regions, " + std::to_string(disconnected) +
                    " disconnected (" + std::to_string(inherited) + " through irregular overall cells), " + std::to_string(unexplained) + " unexplained; constructed split: |dD| " +
                    fmt("%.2g", dd) + ", |dRr| " + fmt("%.2g", dr) + ", J " + fmt("%.6f", before.cost) + " -> " +
                    fmt("%.6f", after.cost)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"uniform toy exactness", toy},
      {"laplacian joint sweep c=(2,3)", laplacian_sweep},
      {"spot check c=(2,4)", spot_check},
      {"low-complexity laplacian c=(1.6,2.8)", fast_design},
      {"vector gaussian c=(3.1,3.8)", vector_design},
      {"three decoders c=(3.3,3.4,3.6)", multilayer},
      {"oracle equivalence", oracle},
      {"monotone cost", monotonicity},
      {"common-region connectivity audit", audit},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
