// Command-line front end. Talks to the library only through cilayer.h; the
// JSON header is used to assemble requests.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cilayer.h"
#include "json.hpp"

using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;

struct Globals {
  std::optional<unsigned long long> seed;
  std::optional<int> restarts;
  std::optional<double> tol;
  std::string out;
};

struct SourceFlags {
  std::string kind;
  std::optional<double> lambda;
  std::vector<double> range;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::optional<std::size_t> training_size;

  void add(CLI::App* app) {
    app->add_option("--source", kind, "Source kind: laplacian, uniform, gaussian")
        ->check(CLI::IsMember({"laplacian", "uniform", "gaussian"}));
    app->add_option("--lambda", lambda, "Laplacian rate parameter (default 1)");
    app->add_option("--range", range, "Uniform support endpoints a b")->expected(2);
    app->add_option("--mu", mu, "Gaussian mean vector");
    app->add_option("--sigma", sigma, "Gaussian covariance, row-major");
    app->add_option("--training-size", training_size, "Training samples drawn for vector sources");
  }

  void apply(Json& req) const {
    if (kind.empty()) return;
    Json s = {{"kind", kind}};
    if (lambda) s["lambda"] = *lambda;
    if (range.size() == 2) {
      s["a"] = range[0];
      s["b"] = range[1];
    }
    if (!mu.empty()) s["mu"] = mu;
    if (!sigma.empty()) s["sigma"] = sigma;
    if (training_size) s["training_size"] = *training_size;
    req["source"] = s;
  }
};

struct WeightFlags {
  std::vector<double> targets;
  std::optional<double> r_common;
  std::vector<double> lambdas;
  std::optional<double> theta;
  std::vector<double> a;

  void add(CLI::App* app) {
    app->add_option("--targets", targets, "Receive-rate targets c_1 .. c_L (bits)");
    app->add_option("--r-common", r_common, "Common-rate target (bits, default 0)");
    app->add_option("--lambdas", lambdas, "Fixed private-rate weights; skips calibration");
    app->add_option("--theta", theta, "Sharing parameter used with --lambdas");
    app->add_option("--a", a, "Per-decoder distortion weights used with --lambdas");
  }

  void apply(Json& req) const {
    if (!targets.empty()) req["targets"] = targets;
    if (r_common) req["r_common"] = *r_common;
    if (!lambdas.empty()) {
      Json w = {{"lambda", lambdas}, {"theta", theta.value_or(0.0)}};
      if (!a.empty()) w["a"] = a;
      req["weights"] = w;
    }
  }
};

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return Json::parse(ss.str());
}

void apply_globals(const Globals& g, Json& req) {
  if (g.seed) req["seed"] = *g.seed;
  if (g.restarts) req["restarts"] = *g.restarts;
  if (g.tol) req["tol"] = *g.tol;
}

int exit_code(cil_status s) {
  switch (s) {
    case CIL_OK: return kExitOk;
    case CIL_ERR_NUMERIC:
    case CIL_ERR_INTERNAL: return kExitNumeric;
    default: return kExitConfig;
  }
}

using Call = cil_status (*)(const char*, cil_result**);

// Runs one request. The text summary (or CSV) goes to stdout; the JSON result
// is written to json_out when set.
int dispatch(Call call, const Json& req, const std::string& json_out, bool print_csv,
             cil_result** keep = nullptr) {
  cil_result* res = nullptr;
  const cil_status s = call(req.dump().c_str(), &res);
  if (s != CIL_OK) {
    std::fprintf(stderr, "error: %s: %s\n", cil_status_string(s), cil_last_error());
    return exit_code(s);
  }
  std::fputs(print_csv ? cil_result_csv(res) : cil_result_text(res), stdout);
  int code = kExitOk;
  if (!json_out.empty()) {
    const cil_status w = cil_result_write_json(res, json_out.c_str());
    if (w != CIL_OK) {
      std::fprintf(stderr, "error: %s: %s\n", cil_status_string(w), cil_last_error());
      code = exit_code(w);
    }
  }
  // A design whose weights could not be calibrated is a numeric failure;
  // its best attempt has been printed and saved.
  const Json doc = Json::parse(cil_result_json(res));
  if (code == kExitOk && doc.is_object() && doc.value("status", "") == "failed") {
    std::fprintf(stderr, "error: design did not meet its targets\n");
    code = kExitNumeric;
  }
  if (keep != nullptr) {
    *keep = res;
  } else {
    cil_result_free(res);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered common-information quantizer design"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(cil_version()));

  Globals g;
  app.add_option("--seed", g.seed, "Random seed for initial codebooks and training data");
  app.add_option("--restarts", g.restarts, "Random restarts per design");
  app.add_option("--tol", g.tol, "Relative convergence tolerance on J");
  app.add_option("--out", g.out, "Output file (codebook/result JSON, or sweep CSV)");

  std::string config;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON request file; flags override its keys")->check(CLI::ExistingFile);
  };

  auto* scalar = app.add_subcommand("design-scalar", "Joint scalar design; prints the record, writes the codebook JSON");
  SourceFlags scalar_src;
  WeightFlags scalar_w;
  add_config(scalar);
  scalar_src.add(scalar);
  scalar_w.add(scalar);

  auto* fast = app.add_subcommand("design-fast", "Low-complexity Laplacian design over a common-rate grid");
  SourceFlags fast_src;
  std::vector<double> fast_targets, fast_grid;
  std::optional<double> fast_budget;
  add_config(fast);
  fast_src.add(fast);
  fast->add_option("--targets", fast_targets, "Receive-rate targets c_1 c_2 (bits)");
  fast->add_option("--r12-grid", fast_grid, "Common rates to try (default 0, 0.1, .., min c)");
  fast->add_option("--budget", fast_budget, "Excess-distortion budget in dB for the reported pick");

  auto* vq = app.add_subcommand("design-vq", "Joint vector design, two-level or --levels L");
  SourceFlags vq_src;
  WeightFlags vq_w;
  std::optional<int> levels;
  std::string training_csv, write_training;
  add_config(vq);
  vq_src.add(vq);
  vq_w.add(vq);
  vq->add_option("--levels", levels, "Number of decoders L")->check(CLI::Range(2, 8));
  vq->add_option("--training", training_csv, "Training CSV (fixed weights only)")->check(CLI::ExistingFile);
  vq->add_option("--write-training", write_training, "Save the drawn training set as CSV");

  auto* sw = app.add_subcommand("sweep", "Run a sweep configuration and write the CSV");
  sw->add_option("--config", config, "Sweep configuration JSON")->required()->check(CLI::ExistingFile);

  auto* oracle = app.add_subcommand("oracle-check", "Compare the joint design with the brute-force oracle");
  std::optional<int> atoms, count;
  add_config(oracle);
  oracle->add_option("--atoms", atoms, "Atoms per discrete source")->check(CLI::Range(2, 8));
  oracle->add_option("--count", count, "Number of seeded sources")->check(CLI::PositiveNumber);

  auto* audit = app.add_subcommand("audit", "Connectivity audit of the common regions of a saved vector codebook");
  std::string codebook_path, audit_training;
  std::optional<std::size_t> knn;
  add_config(audit);
  audit->add_option("--codebook", codebook_path, "Codebook or design-vq result JSON")->check(CLI::ExistingFile);
  audit->add_option("--training", audit_training, "Training CSV")->check(CLI::ExistingFile);
  audit->add_option("--k", knn, "Neighbours in the mutual kNN graph");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every parse error is a config error.
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  Json req;
  try {
    req = load_config(config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  if (!req.is_object()) {
    std::fprintf(stderr, "error: config must be a JSON object\n");
    return kExitConfig;
  }
  apply_globals(g, req);

  if (*scalar) {
    scalar_src.apply(req);
    scalar_w.apply(req);
    return dispatch(cil_design_scalar, req, g.out.empty() ? "codebook.json" : g.out, false);
  }
  if (*fast) {
    fast_src.apply(req);
    if (!req.contains("source")) req["source"] = {{"kind", "laplacian"}};
    if (!fast_targets.empty()) req["targets"] = fast_targets;
    if (!fast_grid.empty()) req["r12_grid"] = fast_grid;
    if (fast_budget) req["delta_d_budget"] = *fast_budget;
    req.erase("seed");
    req.erase("restarts");
    req.erase("tol");
    cil_result* res = nullptr;
    const int code = dispatch(cil_design_fast, req, "", false, &res);
    if (code == kExitOk && !g.out.empty()) {
      std::ofstream f(g.out, std::ios::binary);
      f << cil_result_csv(res);
      if (!f) {
        std::fprintf(stderr, "error: cannot write '%s'\n", g.out.c_str());
        cil_result_free(res);
        return kExitConfig;
      }
    }
    cil_result_free(res);
    return code;
  }
  if (*vq) {
    vq_src.apply(req);
    vq_w.apply(req);
    if (levels) req["levels"] = *levels;
    if (!training_csv.empty()) req["training_csv"] = training_csv;
    if (!write_training.empty()) req["write_training"] = write_training;
    return dispatch(cil_design_vq, req, g.out.empty() ? "codebook.json" : g.out, false);
  }
  if (*sw) {
    if (!g.out.empty()) req["output"] = g.out;
    // With no output file the CSV goes to stdout, otherwise the table does.
    const bool to_stdout = !req.contains("output") || req["output"].get<std::string>().empty();
    return dispatch(cil_sweep, req, "", to_stdout);
  }
  if (*oracle) {
    if (atoms) req["atoms"] = *atoms;
    if (count) req["count"] = *count;
    cil_result* res = nullptr;
    int code = dispatch(cil_oracle_check, req, g.out, false, &res);
    if (code == kExitOk) {
      const double worst = Json::parse(cil_result_json(res)).value("worst_gap", 0.0);
      if (worst > 0.01) {
        std::fprintf(stderr, "oracle gap above 1%%\n");
        code = kExitNumeric;
      }
    }
    cil_result_free(res);
    return code;
  }
  if (*audit) {
    if (!codebook_path.empty()) req["codebook_path"] = codebook_path;
    if (!audit_training.empty()) req["training_csv"] = audit_training;
    if (knn) req["k"] = *knn;
    return dispatch(cil_audit, req, g.out, false);
  }
  return kExitConfig;
}
