#include "cilayer/rd_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cilayer/error.hpp"
#include "cilayer/laplacian_fast.hpp"

namespace cilayer {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(index);
}

double max_target(const std::vector<double>& c) { return *std::max_element(c.begin(), c.end()); }
double min_target(const std::vector<double>& c) { return *std::min_element(c.begin(), c.end()); }

void finish_row(SweepRow& row, const std::vector<RDCurve>& baselines) {
  std::vector<const RDCurve*> ptrs;
  for (const auto& b : baselines) ptrs.push_back(&b);
  try {
    row.record.excess_distortion_db = excess_distortion(row.record, ptrs);
  } catch (const Error& e) {
    row.record.excess_distortion_db = std::numeric_limits<double>::quiet_NaN();
    row.ok = row.rates_ok = false;
    if (!row.warning.empty()) row.warning += "; ";
    row.warning += std::string(error_code_name(e.code())) + ": " + e.what();
  }
}

CalibrationOptions calibration_options(const SweepConfig& cfg) {
  CalibrationOptions co;
  co.rate_tol = cfg.rate_tol;
  co.common_tol = cfg.rate_tol;
  return co;
}

void scalar_rows(const SweepConfig& cfg, SweepResult& res) {
  const ScalarSource src = cfg.source.scalar();
  ScalarBaselineOptions bo;
  bo.n_init.clear();
  bo.max_rate = max_target(cfg.targets) + 1.0;
  const RDCurve base = scalar_baseline(src, bo);
  res.baselines = {base, base};
  const double c1 = cfg.targets[0], c2 = cfg.targets[1];

  std::optional<FastResult> fast;
  if (src.kind() == ScalarKind::Laplacian) {
    FastOptions fo;
    fo.r12_grid = cfg.r_common_grid;
    fo.delta_d_budget = cfg.delta_d_budget;
    fo.rate_tol = cfg.rate_tol;
    fast = design_fast(src, c1, c2, base, fo);
  }
  if (cfg.designer == DesignerKind::LaplacianFast) {
    for (const auto& p : fast->points) {
      SweepRow row;
      row.r_common_target = p.r12_target;
      row.ok = row.rates_ok = p.feasible;
      row.warning = p.warning;
      row.weights = p.weights;
      row.record = p.record;
      if (cfg.keep_codebooks && p.codebook.intervals() > 0)
        row.scalar_codebook = std::make_shared<const LayeredScalarCodebook>(p.codebook);
      res.rows.push_back(std::move(row));
    }
    res.best_cost = fast->best_cost;
    res.best_budget = fast->best_budget;
    return;
  }

  const auto slopes = baseline_slopes(res.baselines, cfg.targets);
  for (std::size_t idx = 0; idx < cfg.r_common_grid.size(); ++idx) {
    const double r = cfg.r_common_grid[idx];
    SweepRow row;
    row.r_common_target = r;
    std::vector<LayeredScalarCodebook> seeds;
    std::vector<double> lambda_init = slopes;
    if (fast && fast->points[idx].codebook.intervals() > 0) {
      seeds.push_back(fast->points[idx].codebook);
      if (fast->points[idx].weights.decoders() == 2) lambda_init = fast->points[idx].weights.lambda_private;
    } else {
      seeds.push_back(scalar_seed(src, r, cfg.targets));
    }
    JointScalarOptions jo;
    jo.restarts = cfg.restarts;
    jo.seed = point_seed(cfg.seed, idx);
    jo.tol = cfg.tol;
    jo.inner.tol = cfg.tol;
    auto designer = [&](const CostWeights& w) { return joint_design_scalar(src, w, jo, seeds).record; };
    try {
      const auto cr = calibrate_weights(designer, cfg.targets, r, lambda_init, calibration_options(cfg));
      row.ok = cr.converged;
      row.rates_ok = cr.rates_met;
      row.weights = cr.weights;
      row.record = cr.record;
      if (!cr.converged) row.warning = "calibration-failed: " + cr.diagnostics;
      if (cfg.keep_codebooks)
        row.scalar_codebook = std::make_shared<const LayeredScalarCodebook>(
            joint_design_scalar(src, cr.weights, jo, seeds).codebook);
    } catch (const Error& e) {
      row.ok = false;
      row.warning = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    res.rows.push_back(std::move(row));
  }
}

void vector_rows(const SweepConfig& cfg, SweepResult& res) {
  const VectorSource src = cfg.source.vector();
  const std::size_t L = cfg.targets.size();
  const TrainingSet s = draw_training_set(src, cfg.source.training_size, cfg.seed);
  std::optional<TrainingSet> sub;
  if (cfg.calibration_size < s.size()) {
    const auto d = s.data();
    sub.emplace(s.dim(), std::vector<double>(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(
                                                             cfg.calibration_size * s.dim())));
  }
  VectorBaselineOptions bo;
  bo.max_rate = max_target(cfg.targets) + 0.5;
  bo.min_rate = 0.0;
  bo.restarts = std::max(cfg.restarts, 1);
  bo.seed = cfg.seed;
  bo.max_rounds = cfg.max_rounds;
  for (double r : cfg.r_common_grid) bo.min_rate = std::min(bo.min_rate, r);
  bo.min_rate = std::max(0.0, std::min(bo.min_rate, min_target(cfg.targets)) - 0.5);
  const VectorBaseline vb = vector_baseline_designs(s, bo);
  res.baselines.assign(L, vb.curve);
  const auto slopes = baseline_slopes(res.baselines, cfg.targets);
  const auto topo = PacketTopology::nested_chain(L);

  for (std::size_t idx = 0; idx < cfg.r_common_grid.size(); ++idx) {
    const double r = cfg.r_common_grid[idx];
    SweepRow row;
    row.r_common_target = r;
    // Seed: baseline codebooks nested from the common rate down to the
    // targets; deeper common packets sit halfway to their decoders' rates.
    std::vector<const EcvqCodebook*> levels, leaves;
    for (std::size_t k = 0; k + 1 < L; ++k) {
      double below = kInf;
      for (std::size_t l = k; l < L; ++l) below = std::min(below, cfg.targets[l]);
      levels.push_back(&vb.nearest(k == 0 ? r : r + 0.5 * (below - r)));
    }
    for (double c : cfg.targets) leaves.push_back(&vb.nearest(c));
    const LayeredVQCodebook seed = nested_vq_seed(topo, levels, leaves);
    JointVqOptions jo;
    jo.m_init = r > 0.0 ? cfg.m_init : 1;
    jo.m_sub = cfg.m_sub;
    jo.n_init = cfg.n_init;
    jo.restarts = cfg.restarts;
    jo.seed = point_seed(cfg.seed, idx);
    jo.tol = cfg.tol;
    jo.max_rounds = cfg.max_rounds;
    const std::vector<LayeredVQCodebook> starts{seed};
    CalibrationOptions co = calibration_options(cfg);
    co.theta_log = false;
    co.theta_init = 0.0;
    co.theta_min = -0.9;
    co.theta_max = 0.9;
    try {
      std::vector<double> lambda_init = slopes;
      if (sub) {
        auto coarse = [&](const CostWeights& w) { return joint_design_vq(*sub, w, topo, jo, starts).record; };
        const auto cr = calibrate_weights(coarse, cfg.targets, r, lambda_init, co);
        // The full set refines the receive rates at the subsample's theta.
        lambda_init = cr.weights.lambda_private;
        if (r > 0.0) co.theta_init = cr.weights.sharing();
        co.theta_fixed = true;
        co.max_iter = co.frozen_iter + 1;
      }
      auto full = [&](const CostWeights& w) { return joint_design_vq(s, w, topo, jo, starts).record; };
      const auto cr = calibrate_weights(full, cfg.targets, r, lambda_init, co);
      row.ok = cr.converged;
      row.rates_ok = cr.rates_met;
      row.weights = cr.weights;
      row.record = cr.record;
      if (!cr.converged) row.warning = "calibration-failed: " + cr.diagnostics;
      if (cfg.keep_codebooks)
        row.vq_codebook = std::make_shared<const LayeredVQCodebook>(
            joint_design_vq(s, cr.weights, topo, jo, starts).codebook);
    } catch (const Error& e) {
      row.ok = false;
      row.warning = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    res.rows.push_back(std::move(row));
  }
}

}  // namespace

const char* designer_name(DesignerKind d) noexcept {
  switch (d) {
    case DesignerKind::JointScalar: return "joint_scalar";
    case DesignerKind::LaplacianFast: return "laplacian_fast";
    case DesignerKind::Vq: return "vq";
    case DesignerKind::MultilayerVq: return "multilayer_vq";
  }
  return "unknown";
}

DesignerKind designer_from_name(const std::string& name) {
  for (auto d : {DesignerKind::JointScalar, DesignerKind::LaplacianFast, DesignerKind::Vq,
                 DesignerKind::MultilayerVq})
    if (name == designer_name(d)) return d;
  fail(ErrorCode::Config, "unknown designer '" + name + "'");
}

ScalarSource SourceSpec::scalar() const {
  if (kind == "laplacian") return ScalarSource::laplacian(lambda);
  if (kind == "uniform") return ScalarSource::uniform(a, b);
  if (kind == "discrete") return ScalarSource::discrete(values, masses);
  if (kind == "empirical") return ScalarSource::empirical(values);
  fail(ErrorCode::Config, "source kind '" + kind + "' is not a scalar source");
}

VectorSource SourceSpec::vector() const {
  if (kind == "gaussian") return VectorSource::gaussian(mu, sigma);
  fail(ErrorCode::Config, "source kind '" + kind + "' is not a vector source");
}

void SweepConfig::validate() const {
  if (targets.size() < 2) fail(ErrorCode::Config, "at least two receive-rate targets are required");
  for (double c : targets)
    if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorCode::Config, "receive-rate targets must be positive");
  if (r_common_grid.empty()) fail(ErrorCode::Config, "common-rate grid is empty");
  for (double r : r_common_grid)
    if (!(r >= 0.0) || r > min_target(targets) + 1e-12)
      fail(ErrorCode::Config, "common-rate grid must lie in [0, min target]");
  if (restarts < 0) fail(ErrorCode::Config, "restarts must be >= 0");
  if (!(rate_tol > 0.0) || !(tol > 0.0)) fail(ErrorCode::Config, "tolerances must be positive");
  const bool vec = source.is_vector();
  switch (designer) {
    case DesignerKind::JointScalar:
    case DesignerKind::LaplacianFast:
      if (vec) fail(ErrorCode::Config, "scalar designers need a scalar source");
      if (targets.size() != 2) fail(ErrorCode::Config, "scalar designers handle two decoders");
      if (designer == DesignerKind::LaplacianFast && source.kind != "laplacian")
        fail(ErrorCode::Config, "the fast designer needs a Laplacian source");
      break;
    case DesignerKind::Vq:
    case DesignerKind::MultilayerVq:
      if (!vec) fail(ErrorCode::Config, "vector designers need a vector source");
      if (designer == DesignerKind::Vq && targets.size() != 2)
        fail(ErrorCode::Config, "the vq designer handles two decoders; use multilayer_vq");
      if (source.mu.size() * source.mu.size() != source.sigma.size())
        fail(ErrorCode::Config, "gaussian sigma must be d x d");
      if (source.training_size < 2 || calibration_size == 0)
        fail(ErrorCode::Config, "training and calibration sizes must be positive");
      if (m_init == 0 || n_init == 0 || m_sub == 0 || max_rounds < 1)
        fail(ErrorCode::Config, "initial codebook sizes must be positive");
      break;
  }
}

double SweepResult::hull_delta_d(double rt) const {
  if (hull.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto& a = hull.front();
  const auto& b = hull.back();
  if (rt < a.rate - 1e-12 || rt > b.rate + 1e-12) return std::numeric_limits<double>::quiet_NaN();
  if (b.rate - a.rate <= 0.0) return std::min(a.distortion, b.distortion);
  const double t = (rt - a.rate) / (b.rate - a.rate);
  return a.distortion + t * (b.distortion - a.distortion);
}

SweepResult sweep(const SweepConfig& config) {
  config.validate();
  SweepResult res;
  res.config = config;
  std::sort(res.config.r_common_grid.begin(), res.config.r_common_grid.end());
  const SweepConfig& cfg = res.config;
  if (cfg.source.is_vector()) vector_rows(cfg, res);
  else scalar_rows(cfg, res);
  for (auto& row : res.rows) finish_row(row, res.baselines);
  for (std::size_t l = 0; l < cfg.targets.size(); ++l)
    res.baseline_distortion.push_back(res.baselines[l].distortion_at(cfg.targets[l]));

  // Time-sharing segment between the two ends of the grid.
  const auto& rows = res.rows;
  if (rows.size() >= 2 && rows.front().ok && rows.back().ok && rows.front().r_common_target == 0.0 &&
      rows.back().r_common_target >= min_target(cfg.targets) - 1e-12) {
    RDPoint a{rows.front().record.transmit_rate, rows.front().record.excess_distortion_db};
    RDPoint b{rows.back().record.transmit_rate, rows.back().record.excess_distortion_db};
    if (b.rate < a.rate) std::swap(a, b);
    res.hull = {a, b};
  }
  if (cfg.designer != DesignerKind::LaplacianFast) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].usable() && rows[i].record.excess_distortion_db <= cfg.delta_d_budget)
        res.best_budget = i;
  }
  return res;
}

std::vector<double> baseline_slopes(const std::vector<RDCurve>& baselines,
                                    const std::vector<double>& targets) {
  std::vector<double> out;
  for (std::size_t l = 0; l < targets.size(); ++l) {
    const RDCurve& c = baselines.at(l);
    const double h = 0.02;
    const double lo = std::max(c.min_rate(), targets[l] - h);
    const double hi = std::min(c.max_rate(), targets[l] + h);
    double slope = 1e-6;
    if (hi > lo) slope = std::max(slope, (c.distortion_at(lo) - c.distortion_at(hi)) / (hi - lo));
    out.push_back(slope);
  }
  return out;
}

LayeredScalarCodebook scalar_seed(const ScalarSource& src, double r,
                                  const std::vector<double>& targets) {
  std::vector<double> common{src.support_lo(), src.support_hi()};
  if (r > 0.0) {
    const auto n = static_cast<std::size_t>(std::exp2(std::ceil(r) + 2.0));
    common = design_ecsq_at_rate(src, r, std::max<std::size_t>(n, 4)).quantizer.boundaries;
  }
  std::vector<std::vector<double>> layers;
  for (double c : targets) {
    const auto cells = static_cast<std::size_t>(std::max(1.0, std::round(std::exp2(c - r))));
    std::vector<double> b{common.front()};
    for (std::size_t i = 0; i + 1 < common.size(); ++i) {
      auto part = equal_mass_boundaries(src, common[i], common[i + 1], cells);
      b.insert(b.end(), part.begin() + 1, part.end());
    }
    layers.push_back(std::move(b));
  }
  return layered_from_partitions(src, common, layers);
}

std::string format_csv(const SweepResult& result) {
  const auto& cfg = result.config;
  const std::size_t L = cfg.targets.size();
  const auto topo = PacketTopology::nested_chain(L);
  std::ostringstream os;
  os << "designer,seed";
  for (std::size_t l = 0; l < L; ++l) os << ",c" << l + 1;
  for (std::size_t p = L; p < topo.packet_count(); ++p) os << ",R_" << topo.label(p);
  for (std::size_t p = 0; p < L; ++p) os << ",R_" << topo.label(p);
  os << ",Rt";
  for (std::size_t l = 0; l < L; ++l) os << ",D_dB_" << l + 1;
  os << ",deltaD_dB,J,status,r_common_target";
  for (std::size_t l = 0; l < L; ++l) os << ",Rr_" << l + 1;
  os << ",reduction_pct,warning\n";
  for (const auto& row : result.rows) {
    const auto& rec = row.record;
    const bool have = rec.packet_rates.size() == topo.packet_count();
    auto field = [&](bool ok, double v) { os << ',' << (ok ? num(v) : ""); };
    os << designer_name(cfg.designer) << ',' << cfg.seed;
    for (double c : cfg.targets) os << ',' << num(c);
    for (std::size_t p = L; p < topo.packet_count(); ++p) field(have, have ? rec.packet_rates[p] : 0.0);
    for (std::size_t p = 0; p < L; ++p) field(have, have ? rec.packet_rates[p] : 0.0);
    field(have, rec.transmit_rate);
    for (std::size_t l = 0; l < L; ++l) field(have, have ? rec.distortion_db[l] : 0.0);
    field(have, rec.excess_distortion_db);
    field(have, rec.cost);
    os << ',' << row.status() << ',' << num(row.r_common_target);
    for (std::size_t l = 0; l < L; ++l) field(have, have ? rec.receive_rates[l] : 0.0);
    field(have, have ? 100.0 * rec.transmit_reduction() : 0.0);
    os << ',' << csv_quote(row.warning) << '\n';
  }
  return os.str();
}

std::string format_table(const SweepResult& result) {
  const auto& cfg = result.config;
  const std::size_t L = cfg.targets.size();
  const auto topo = PacketTopology::nested_chain(L);
  std::ostringstream os;
  os << "designer " << designer_name(cfg.designer) << ", seed " << cfg.seed << ", c =";
  for (double c : cfg.targets) os << ' ' << num(c);
  os << "\nD*(c) =";
  for (double d : result.baseline_distortion) os << ' ' << num(d);
  os << "\n\n";
  auto cell = [&](const std::string& s, int width) {
    os << std::string(static_cast<std::size_t>(std::max(1, width - static_cast<int>(s.size()))), ' ') << s;
  };
  cell("target", 8);
  for (std::size_t p = L; p < topo.packet_count(); ++p) cell("R" + topo.label(p), 10);
  for (std::size_t p = 0; p < L; ++p) cell("R" + topo.label(p), 10);
  cell("Rt_NS", 10);
  cell("Rt_P", 10);
  cell("red%", 10);
  cell("dD_dB", 12);
  cell("status", 12);
  os << '\n';
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& row = result.rows[i];
    const auto& rec = row.record;
    cell(num(row.r_common_target), 8);
    if (rec.packet_rates.size() == topo.packet_count()) {
      for (std::size_t p = L; p < topo.packet_count(); ++p) cell(num(rec.packet_rates[p]), 10);
      for (std::size_t p = 0; p < L; ++p) cell(num(rec.packet_rates[p]), 10);
      double ns = 0.0;
      for (double r : rec.receive_rates) ns += r;
      cell(num(ns), 10);
      cell(num(rec.transmit_rate), 10);
      cell(num(100.0 * rec.transmit_reduction()), 10);
      cell(num(rec.excess_distortion_db), 12);
    } else {
      os << "  (no record)";
    }
    std::string status = row.status();
    if (i == result.best_cost) status += " J";
    if (i == result.best_budget) status += " B";
    cell(status, 13);
    os << '\n';
  }
  os << "\nJ: minimum cost row, B: largest common rate within " << num(cfg.delta_d_budget) << " dB\n";
  bool warned = false;
  for (const auto& row : result.rows)
    if (!row.warning.empty()) {
      if (!warned) os << "\nwarnings:\n";
      warned = true;
      os << "  target " << num(row.r_common_target) << ": " << row.warning << '\n';
    }
  return os.str();
}

void emit_results(const SweepResult& result, const std::string& path) {
  if (result.rows.empty()) fail(ErrorCode::Config, "no sweep rows to write");
  std::ofstream csv(path, std::ios::binary);
  if (!csv) fail(ErrorCode::Io, "cannot write '" + path + "'");
  csv << format_csv(result);
  if (!csv) fail(ErrorCode::Io, "failed writing '" + path + "'");
  std::string table_path = path;
  const auto dot = table_path.find_last_of('.');
  const auto slash = table_path.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) table_path.resize(dot);
  table_path += ".txt";
  if (table_path == path) table_path += ".txt";
  std::ofstream txt(table_path, std::ios::binary);
  if (!txt) fail(ErrorCode::Io, "cannot write '" + table_path + "'");
  txt << format_table(result);
  if (!txt) fail(ErrorCode::Io, "failed writing '" + table_path + "'");
}

}  // namespace cilayer
