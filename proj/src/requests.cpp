#include "cilayer/requests.hpp"

#include <cstdio>
#include <sstream>

#include "cilayer/error.hpp"
#include "cilayer/oracle.hpp"

namespace cilayer {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

template <class T>
T opt(const Json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    fail(ErrorCode::Config, std::string("bad value for '") + key + "'");
  }
}

const Json& need(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::Config, std::string("missing key '") + key + "'");
  return j[key];
}

std::vector<double> vec(const Json& j) {
  std::vector<double> out;
  if (!j.is_array()) fail(ErrorCode::Config, "expected an array of numbers");
  for (const auto& v : j) out.push_back(number_from_json(v));
  return out;
}

std::string record_text(const RDRecord& r) {
  std::ostringstream os;
  for (std::size_t p = 0; p < r.packet_labels.size(); ++p)
    os << "R_" << r.packet_labels[p] << " = " << num(r.packet_rates[p]) << '\n';
  for (std::size_t l = 0; l < r.receive_rates.size(); ++l)
    os << "receive rate " << l + 1 << " = " << num(r.receive_rates[l]) << ", D = " << num(r.distortion[l])
       << " (" << num(r.distortion_db[l]) << " dB)\n";
  os << "transmit rate = " << num(r.transmit_rate) << ", reduction = " << num(100.0 * r.transmit_reduction())
     << " %\n";
  if (!std::isnan(r.excess_distortion_db)) os << "excess distortion = " << num(r.excess_distortion_db) << " dB\n";
  os << "J = " << num(r.cost) << '\n';
  return os.str();
}

double tolerance(const Json& req, double fallback) {
  const double t = opt(req, "tol", fallback);
  if (!(t >= 0.0)) fail(ErrorCode::Config, "tol must be nonnegative");
  return t;
}

SweepConfig single_point(const Json& req, DesignerKind d) {
  SweepConfig c;
  c.source = source_spec_from_json(need(req, "source"));
  c.targets = vec(need(req, "targets"));
  c.r_common_grid = {opt(req, "r_common", 0.0)};
  c.designer = d;
  c.restarts = opt(req, "restarts", c.restarts);
  c.seed = opt(req, "seed", c.seed);
  c.tol = tolerance(req, c.tol);
  c.rate_tol = opt(req, "rate_tol", c.rate_tol);
  c.m_init = opt(req, "m_init", c.m_init);
  c.m_sub = opt(req, "m_sub", c.m_sub);
  c.n_init = opt(req, "n_init", c.n_init);
  c.max_rounds = opt(req, "max_rounds", c.max_rounds);
  c.calibration_size = opt(req, "calibration_size", c.calibration_size);
  if (req.contains("training_size")) c.source.training_size = opt<std::size_t>(req, "training_size", 0);
  c.keep_codebooks = true;
  return c;
}

RequestOutput single_row_output(const SweepResult& res) {
  const auto& row = res.rows.at(0);
  RequestOutput out;
  out.json = {{"status", row.status()}, {"warning", row.warning},
              {"baseline_distortion", res.baseline_distortion}};
  if (!row.record.packet_rates.empty()) {
    out.json["record"] = to_json(row.record);
    out.json["weights"] = to_json(row.weights);
    out.text = record_text(row.record);
  }
  if (row.scalar_codebook) out.json["codebook"] = to_json(*row.scalar_codebook);
  if (row.vq_codebook) out.json["codebook"] = to_json(*row.vq_codebook);
  if (!row.ok) out.text += "warning: " + row.warning + '\n';
  return out;
}

}  // namespace

RequestOutput run_design_scalar(const Json& req) {
  if (req.contains("weights")) {
    const ScalarSource src = source_spec_from_json(need(req, "source")).scalar();
    const CostWeights w = weights_from_json(req["weights"]);
    JointScalarOptions jo;
    jo.restarts = opt(req, "restarts", jo.restarts);
    jo.seed = opt(req, "seed", jo.seed);
    jo.tol = tolerance(req, jo.tol);
    jo.inner.tol = jo.tol;
    jo.m_init = opt(req, "m_init", jo.m_init);
    jo.n_init = opt(req, "n_init", jo.n_init);
    const auto res = joint_design_scalar(src, w, jo);
    RequestOutput out;
    out.json = {{"status", "ok"}, {"record", to_json(res.record)}, {"weights", to_json(w)},
                {"codebook", to_json(res.codebook)}, {"restart_costs", res.trace.restart_costs}};
    out.text = record_text(res.record);
    return out;
  }
  return single_row_output(sweep(single_point(req, DesignerKind::JointScalar)));
}

RequestOutput run_design_fast(const Json& req) {
  SweepConfig c;
  c.source = source_spec_from_json(need(req, "source"));
  c.targets = vec(need(req, "targets"));
  c.designer = DesignerKind::LaplacianFast;
  if (req.contains("r12_grid")) {
    c.r_common_grid = vec(req["r12_grid"]);
  } else {
    const double top = std::min(c.targets.at(0), c.targets.at(1));
    for (int i = 0; i * 0.1 <= top + 1e-9; ++i) c.r_common_grid.push_back(i * 0.1);
  }
  c.delta_d_budget = opt(req, "delta_d_budget", c.delta_d_budget);
  c.rate_tol = opt(req, "rate_tol", c.rate_tol);
  c.keep_codebooks = opt(req, "keep_codebooks", false);
  const auto res = sweep(c);
  return {to_json(res), format_table(res), format_csv(res)};
}

RequestOutput run_design_vq(const Json& req) {
  if (req.contains("weights")) {
    const CostWeights w = weights_from_json(req["weights"]);
    const std::size_t L = opt<std::size_t>(req, "levels", w.decoders());
    if (L != w.decoders()) fail(ErrorCode::Config, "weights do not match the number of levels");
    const std::uint64_t seed = opt<std::uint64_t>(req, "seed", 1);
    std::optional<TrainingSet> s;
    if (req.contains("training_csv")) {
      s = read_training_csv(opt<std::string>(req, "training_csv", ""));
    } else {
      const SourceSpec spec = source_spec_from_json(need(req, "source"));
      s = draw_training_set(spec.vector(), opt<std::size_t>(req, "training_size", spec.training_size), seed);
    }
    if (req.contains("write_training")) write_training_csv(*s, opt<std::string>(req, "write_training", ""));
    JointVqOptions jo;
    jo.restarts = opt(req, "restarts", jo.restarts);
    jo.seed = seed;
    jo.tol = tolerance(req, jo.tol);
    jo.m_init = opt(req, "m_init", jo.m_init);
    jo.m_sub = opt(req, "m_sub", jo.m_sub);
    jo.n_init = opt(req, "n_init", jo.n_init);
    jo.max_rounds = opt(req, "max_rounds", jo.max_rounds);
    const auto res = joint_design_vq(*s, w, PacketTopology::nested_chain(L), jo);
    RequestOutput out;
    out.json = {{"status", "ok"}, {"record", to_json(res.record)}, {"weights", to_json(w)},
                {"codebook", to_json(res.codebook)}, {"rounds", res.trace.rounds},
                {"restart_costs", res.trace.restart_costs}};
    out.text = record_text(res.record);
    return out;
  }
  const std::size_t L = opt<std::size_t>(req, "levels", need(req, "targets").size());
  if (L != need(req, "targets").size()) fail(ErrorCode::Config, "targets do not match the number of levels");
  auto cfg = single_point(req, L == 2 ? DesignerKind::Vq : DesignerKind::MultilayerVq);
  if (req.contains("write_training")) {
    const auto s = draw_training_set(cfg.source.vector(), cfg.source.training_size, cfg.seed);
    write_training_csv(s, opt<std::string>(req, "write_training", ""));
  }
  return single_row_output(sweep(cfg));
}

RequestOutput run_sweep(const Json& config) {
  const SweepConfig cfg = sweep_config_from_json(config);
  const auto res = sweep(cfg);
  if (!cfg.output.empty()) emit_results(res, cfg.output);
  return {to_json(res), format_table(res), format_csv(res)};
}

RequestOutput run_oracle_check(const Json& req) {
  const auto atoms = opt<std::size_t>(req, "atoms", 6);
  const int count = opt(req, "count", 1);
  const std::uint64_t seed = opt<std::uint64_t>(req, "seed", 1);
  JointScalarOptions jo;
  jo.restarts = opt(req, "restarts", 5);
  jo.seed = seed;
  if (count < 1) fail(ErrorCode::Config, "count must be >= 1");
  RequestOutput out;
  Json cases = Json::array();
  std::ostringstream os;
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const auto inst = random_oracle_instance(seed + static_cast<std::uint64_t>(k), atoms);
    const auto oracle = brute_force_layered_oracle(inst.source, inst.weights);
    const auto joint = joint_design_scalar(inst.source, inst.weights, jo);
    const double gap = (joint.record.cost - oracle.cost) / std::abs(oracle.cost);
    worst = std::max(worst, gap);
    cases.push_back({{"seed", seed + static_cast<std::uint64_t>(k)}, {"oracle_cost", oracle.cost},
                     {"joint_cost", joint.record.cost}, {"gap", gap},
                     {"weights", to_json(inst.weights)}, {"oracle_codebook", to_json(oracle.codebook)}});
    os << "instance " << k << ": oracle J = " << num(oracle.cost) << ", joint J = " << num(joint.record.cost)
       << ", gap = " << num(100.0 * gap) << " %\n";
  }
  os << "worst gap = " << num(100.0 * worst) << " %\n";
  out.json = {{"atoms", atoms}, {"cases", cases}, {"worst_gap", worst}};
  out.text = os.str();
  return out;
}

RequestOutput run_audit(const Json& req) {
  // A saved design-vq result carries the codebook and its weights.
  Json doc = req.contains("codebook") ? req["codebook"] : read_json_file(need(req, "codebook_path").get<std::string>());
  Json weights = req.contains("weights") ? req["weights"] : Json();
  if (doc.contains("codebook")) {
    if (weights.is_null() && doc.contains("weights")) weights = doc["weights"];
    doc = Json(doc["codebook"]);
  }
  if (weights.is_null()) fail(ErrorCode::Config, "missing key 'weights'");
  const LayeredVQCodebook cb = layered_vq_from_json(doc);
  const TrainingSet s = read_training_csv(need(req, "training_csv").get<std::string>());
  const CostWeights w = weights_from_json(weights);
  AuditOptions ao;
  ao.k = opt<std::size_t>(req, "k", ao.k);
  ao.max_points = opt<std::size_t>(req, "max_points", ao.max_points);
  const auto rep = regularity_audit(cb, s, w, ao);
  RequestOutput out;
  out.json = to_json(rep);
  std::ostringstream os;
  os << rep.regions.size() << " common regions, " << rep.disconnected << " disconnected (" << rep.inherited
     << " through irregular overall cells), " << rep.unexplained
     << " unexplained\n";
  for (const auto& r : rep.regions)
    if (r.disconnected && r.cell_groups >= 2)
      os << "  region " << r.node << ": " << r.components << " components, J " << num(r.cost_before) << " -> "
         << num(r.cost_after) << (r.preserved ? "" : " (rates or distortion changed)") << '\n';
  out.text = os.str();
  return out;
}

}  // namespace cilayer
