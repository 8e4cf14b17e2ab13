#pragma once

#include <string>

#include "cilayer/serialization.hpp"

namespace cilayer {

// JSON request handlers behind the C API and the CLI. Each returns a JSON
// document, a human-readable summary and (sweeps) the CSV table.
struct RequestOutput {
  Json json;
  std::string text;
  std::string csv;
};

// {"source", "weights"} designs at fixed weights; {"source", "targets",
// "r_common"} calibrates to the rates. Optional: restarts, seed, tol,
// m_init, n_init.
RequestOutput run_design_scalar(const Json& req);

// {"source" (Laplacian), "targets", optional "r12_grid", "delta_d_budget",
// "rate_tol"}.
RequestOutput run_design_fast(const Json& req);

// {"weights", "levels", and "source" (gaussian) or "training_csv"} designs
// at fixed weights; {"source", "targets", "r_common"} calibrates. Optional:
// restarts, seed, tol, m_init, m_sub, n_init, max_rounds, training_size,
// calibration_size, "write_training" (CSV path for the drawn samples).
RequestOutput run_design_vq(const Json& req);

RequestOutput run_sweep(const Json& config);

// {"atoms", "count", "seed", "restarts"}: brute-force oracle against the
// joint design on seeded random discrete sources.
RequestOutput run_oracle_check(const Json& req);

// {"codebook" (inline) or "codebook_path", "training_csv", "weights", "k"}.
// The codebook may be a saved design-vq result, whose weights are then used
// unless given.
RequestOutput run_audit(const Json& req);

}  // namespace cilayer
