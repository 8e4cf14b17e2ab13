#include "cilayer/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cilayer/error.hpp"

namespace cilayer {

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

std::vector<double> numbers(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::Config, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number_from_json(v));
  return out;
}

Json numbers_to_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

const Json& require(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::Config, std::string("missing key '") + key + "'");
  return *it;
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorCode::Config, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

Json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  fail(ErrorCode::Config, "expected a number");
}

Json to_json(const CostWeights& w) {
  Json j;
  j["a"] = w.a;
  j["lambda"] = w.lambda_private;
  Json c = Json::object();
  for (const auto& [label, v] : w.lambda_common) c[label] = v;
  j["lambda_common"] = c;
  return j;
}

CostWeights weights_from_json(const Json& j) {
  return guarded([&] {
    CostWeights w;
    w.lambda_private = numbers(require(j, "lambda"));
    w.a = j.contains("a") ? numbers(j["a"]) : std::vector<double>(w.lambda_private.size(), 1.0);
    if (j.contains("theta")) {
      auto s = CostWeights::with_sharing(w.lambda_private, number_from_json(j["theta"]));
      s.a = w.a;
      return s;
    }
    if (j.contains("lambda_common"))
      for (const auto& [label, v] : j["lambda_common"].items()) w.lambda_common[label] = number_from_json(v);
    return w;
  });
}

Json to_json(const RDRecord& r) {
  Json j;
  Json packets = Json::object();
  for (std::size_t p = 0; p < r.packet_labels.size(); ++p) packets[r.packet_labels[p]] = r.packet_rates[p];
  j["packet_rates"] = packets;
  j["receive_rates"] = r.receive_rates;
  j["transmit_rate"] = r.transmit_rate;
  j["distortion"] = numbers_to_json(r.distortion);
  j["distortion_db"] = numbers_to_json(r.distortion_db);
  j["excess_distortion_db"] = number_to_json(r.excess_distortion_db);
  j["cost"] = r.cost;
  j["transmit_reduction"] = r.receive_rates.empty() ? 0.0 : r.transmit_reduction();
  return j;
}

Json to_json(const ScalarQuantizer& q) {
  return {{"boundaries", numbers_to_json(q.boundaries)},
          {"reps", numbers_to_json(q.reps)},
          {"probs", q.probs}};
}

ScalarQuantizer scalar_quantizer_from_json(const Json& j) {
  return guarded([&] {
    ScalarQuantizer q;
    q.boundaries = numbers(require(j, "boundaries"));
    q.reps = numbers(require(j, "reps"));
    q.probs = numbers(require(j, "probs"));
    q.validate();
    return q;
  });
}

Json to_json(const LayeredScalarCodebook& cb) {
  Json layers = Json::array();
  for (const auto& layer : cb.layers) {
    Json a = Json::array();
    for (const auto& q : layer) a.push_back(to_json(q));
    layers.push_back(a);
  }
  Json overall = Json::array();
  for (std::size_t l = 0; l < cb.decoders(); ++l) overall.push_back(numbers_to_json(cb.overall(l).boundaries));
  std::vector<int> degenerate;
  for (bool b : cb.degenerate) degenerate.push_back(b ? 1 : 0);
  return {{"kind", "layered_scalar"},
          {"common_boundaries", numbers_to_json(cb.common_boundaries)},
          {"common_probs", cb.common_probs},
          {"layers", layers},
          {"degenerate", degenerate},
          {"overall_boundaries", overall}};
}

LayeredScalarCodebook layered_scalar_from_json(const Json& j) {
  return guarded([&] {
    LayeredScalarCodebook cb;
    cb.common_boundaries = numbers(require(j, "common_boundaries"));
    cb.common_probs = numbers(require(j, "common_probs"));
    for (const auto& layer : require(j, "layers")) {
      std::vector<ScalarQuantizer> qs;
      for (const auto& q : layer) qs.push_back(scalar_quantizer_from_json(q));
      cb.layers.push_back(std::move(qs));
    }
    cb.degenerate.assign(cb.common_probs.size(), false);
    if (j.contains("degenerate")) {
      const auto d = j["degenerate"].get<std::vector<int>>();
      for (std::size_t i = 0; i < d.size() && i < cb.degenerate.size(); ++i) cb.degenerate[i] = d[i] != 0;
    }
    cb.validate();
    return cb;
  });
}

Json to_json(const LayeredVQCodebook& cb) {
  const auto& topo = cb.topology;
  auto leaf_json = [&](std::size_t q) {
    const auto& lf = cb.leaves[q];
    return Json{{"prob", lf.prob}, {"rep", lf.rep}};
  };
  auto node_json = [&](auto&& self, std::size_t n) -> Json {
    const auto& nd = cb.nodes[n];
    Json j;
    j["packet"] = topo.label(topo.common_packet(nd.level));
    j["prob"] = nd.prob;
    const auto dec = cb.hosted(nd.level);
    Json leaves = Json::object();
    for (std::size_t h = 0; h < dec.size(); ++h) {
      Json a = Json::array();
      for (auto q : nd.leaves[h]) a.push_back(leaf_json(q));
      leaves[topo.label(dec[h])] = a;
    }
    j["leaves"] = leaves;
    if (!nd.children.empty()) {
      Json ch = Json::array();
      for (auto c : nd.children) ch.push_back(self(self, c));
      j["children"] = ch;
    }
    return j;
  };
  Json roots = Json::array();
  for (auto r : cb.roots()) roots.push_back(node_json(node_json, r));
  return {{"kind", "layered_vq"}, {"decoders", topo.decoders()}, {"dim", cb.dim},
          {"packets", topo.labels()}, {"nodes", roots}};
}

LayeredVQCodebook layered_vq_from_json(const Json& j) {
  return guarded([&] {
    LayeredVQCodebook cb;
    cb.topology = PacketTopology::nested_chain(require(j, "decoders").get<std::size_t>());
    cb.dim = require(j, "dim").get<std::size_t>();
    const auto& topo = cb.topology;
    auto add = [&](auto&& self, const Json& nj, std::size_t level, std::size_t parent) -> void {
      if (level + 1 >= topo.decoders()) fail(ErrorCode::Config, "codebook tree deeper than the topology");
      const std::size_t id = cb.nodes.size();
      VqCommonNode nd;
      nd.level = level;
      nd.parent = parent;
      nd.prob = require(nj, "prob").get<double>();
      const auto dec = cb.hosted(level);
      nd.leaves.resize(dec.size());
      cb.nodes.push_back(nd);
      if (parent != kNoNode) cb.nodes[parent].children.push_back(id);
      const auto& leaves = require(nj, "leaves");
      for (std::size_t h = 0; h < dec.size(); ++h) {
        const auto& arr = require(leaves, topo.label(dec[h]).c_str());
        for (const auto& lj : arr) {
          VqLeaf lf;
          lf.decoder = dec[h];
          lf.node = id;
          lf.prob = require(lj, "prob").get<double>();
          lf.rep = numbers(require(lj, "rep"));
          cb.nodes[id].leaves[h].push_back(cb.leaves.size());
          cb.leaves.push_back(std::move(lf));
        }
      }
      if (nj.contains("children"))
        for (const auto& c : nj["children"]) self(self, c, level + 1, id);
    };
    for (const auto& r : require(j, "nodes")) add(add, r, 0, kNoNode);
    cb.validate(1e-9);
    return cb;
  });
}

Json to_json(const SourceSpec& s) {
  Json j{{"kind", s.kind}};
  if (s.kind == "laplacian") j["lambda"] = s.lambda;
  if (s.kind == "uniform") {
    j["a"] = s.a;
    j["b"] = s.b;
  }
  if (s.kind == "discrete") {
    j["values"] = s.values;
    j["masses"] = s.masses;
  }
  if (s.kind == "empirical") j["values"] = s.values;
  if (s.kind == "gaussian") {
    j["mu"] = s.mu;
    j["sigma"] = s.sigma;
    j["training_size"] = s.training_size;
  }
  return j;
}

SourceSpec source_spec_from_json(const Json& j) {
  return guarded([&] {
    SourceSpec s;
    s.kind = require(j, "kind").get<std::string>();
    s.lambda = get_or(j, "lambda", s.lambda);
    s.a = get_or(j, "a", s.a);
    s.b = get_or(j, "b", s.b);
    if (j.contains("values")) s.values = numbers(j["values"]);
    if (j.contains("masses")) s.masses = numbers(j["masses"]);
    if (j.contains("mu")) s.mu = numbers(j["mu"]);
    if (j.contains("sigma")) {
      const auto& sg = j["sigma"];
      // Accept a flat row-major list or a list of rows.
      if (!sg.empty() && sg.front().is_array()) {
        for (const auto& row : sg)
          for (const auto& v : row) s.sigma.push_back(number_from_json(v));
      } else {
        s.sigma = numbers(sg);
      }
    }
    s.training_size = get_or(j, "training_size", s.training_size);
    static const char* kinds[] = {"laplacian", "uniform", "discrete", "empirical", "gaussian"};
    bool known = false;
    for (const char* k : kinds) known = known || s.kind == k;
    if (!known) fail(ErrorCode::Config, "unknown source kind '" + s.kind + "'");
    return s;
  });
}

SweepConfig sweep_config_from_json(const Json& j) {
  return guarded([&] {
    static const char* keys[] = {"source", "targets", "r_common_grid", "designer", "restarts", "seed",
                                 "delta_d_budget", "output", "rate_tol", "tol", "calibration_size",
                                 "m_init", "m_sub", "n_init", "max_rounds", "keep_codebooks", "comment"};
    for (const auto& [k, v] : j.items()) {
      bool known = false;
      for (const char* key : keys) known = known || k == key;
      if (!known) fail(ErrorCode::Config, "unknown config key '" + k + "'");
    }
    SweepConfig c;
    c.source = source_spec_from_json(require(j, "source"));
    c.targets = numbers(require(j, "targets"));
    const auto& grid = require(j, "r_common_grid");
    if (grid.is_object()) {
      // {"start": a, "stop": b, "step": h}
      const double a = require(grid, "start").get<double>(), b = require(grid, "stop").get<double>();
      const double h = require(grid, "step").get<double>();
      if (!(h > 0.0) || b < a) fail(ErrorCode::Config, "bad common-rate grid range");
      const auto n = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
      for (std::size_t i = 0; i <= n; ++i) c.r_common_grid.push_back(a + static_cast<double>(i) * h);
    } else {
      c.r_common_grid = numbers(grid);
    }
    c.designer = designer_from_name(require(j, "designer").get<std::string>());
    c.restarts = get_or(j, "restarts", c.restarts);
    c.seed = get_or(j, "seed", c.seed);
    c.delta_d_budget = get_or(j, "delta_d_budget", c.delta_d_budget);
    c.output = get_or(j, "output", c.output);
    c.rate_tol = get_or(j, "rate_tol", c.rate_tol);
    c.tol = get_or(j, "tol", c.tol);
    c.calibration_size = get_or(j, "calibration_size", c.calibration_size);
    c.m_init = get_or(j, "m_init", c.m_init);
    c.m_sub = get_or(j, "m_sub", c.m_sub);
    c.n_init = get_or(j, "n_init", c.n_init);
    c.max_rounds = get_or(j, "max_rounds", c.max_rounds);
    c.keep_codebooks = get_or(j, "keep_codebooks", c.keep_codebooks);
    c.validate();
    return c;
  });
}

Json to_json(const SweepConfig& c) {
  return {{"source", to_json(c.source)}, {"targets", c.targets}, {"r_common_grid", c.r_common_grid},
          {"designer", designer_name(c.designer)}, {"restarts", c.restarts}, {"seed", c.seed},
          {"delta_d_budget", c.delta_d_budget}, {"output", c.output}, {"rate_tol", c.rate_tol},
          {"tol", c.tol}, {"calibration_size", c.calibration_size}, {"m_init", c.m_init},
          {"m_sub", c.m_sub}, {"n_init", c.n_init}, {"max_rounds", c.max_rounds}};
}

Json to_json(const SweepResult& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j{{"r_common_target", row.r_common_target}, {"status", row.status()},
           {"warning", row.warning}};
    if (!row.record.packet_rates.empty()) {
      j["record"] = to_json(row.record);
      j["weights"] = to_json(row.weights);
    }
    if (row.scalar_codebook) j["codebook"] = to_json(*row.scalar_codebook);
    if (row.vq_codebook) j["codebook"] = to_json(*row.vq_codebook);
    rows.push_back(j);
  }
  Json hull = Json::array();
  for (const auto& p : r.hull) hull.push_back({{"transmit_rate", p.rate}, {"delta_d_db", p.distortion}});
  Json j{{"config", to_json(r.config)}, {"rows", rows}, {"baseline_distortion", r.baseline_distortion},
         {"hull", hull}};
  if (r.best_cost != SweepResult::kNoRow) j["best_cost"] = r.best_cost;
  if (r.best_budget != SweepResult::kNoRow) j["best_budget"] = r.best_budget;
  return j;
}

Json to_json(const AuditReport& r) {
  Json regions = Json::array();
  for (const auto& ra : r.regions) {
    Json j{{"node", ra.node}, {"samples", ra.samples}, {"components", ra.components},
           {"disconnected", ra.disconnected}};
    if (ra.disconnected) j["cell_groups"] = ra.cell_groups;
    if (ra.disconnected && ra.cell_groups >= 2) {
      j["cost_before"] = ra.cost_before;
      j["cost_after"] = ra.cost_after;
      j["distortion_change"] = ra.distortion_change;
      j["receive_change"] = ra.receive_change;
      j["preserved"] = ra.preserved;
      j["unexplained"] = ra.unexplained;
    }
    regions.push_back(j);
  }
  return {{"regions", regions}, {"disconnected", r.disconnected}, {"inherited", r.inherited}, {"unexplained", r.unexplained}};
}

TrainingSet read_training_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read '" + path + "'");
  std::vector<double> data;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        fail(ErrorCode::Config, path + ":" + std::to_string(lineno) + ": not a number");
      }
    }
    if (row.empty()) continue;
    if (dim == 0) dim = row.size();
    if (row.size() != dim) fail(ErrorCode::Config, path + ":" + std::to_string(lineno) + ": wrong column count");
    data.insert(data.end(), row.begin(), row.end());
  }
  if (dim == 0) fail(ErrorCode::Config, "training CSV '" + path + "' holds no points");
  return TrainingSet(dim, std::move(data));
}

void write_training_csv(const TrainingSet& s, const std::string& path) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto x = s.point(i);
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
    os << '\n';
  }
  write_text_file(path, os.str());
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::Config, std::string("invalid JSON: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace cilayer
