#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cilayer/baseline.hpp"
#include "cilayer/calibration.hpp"
#include "cilayer/layered_scalar.hpp"
#include "cilayer/layered_vq.hpp"
#include "cilayer/sources.hpp"

namespace cilayer {

enum class DesignerKind { JointScalar, LaplacianFast, Vq, MultilayerVq };

const char* designer_name(DesignerKind d) noexcept;
DesignerKind designer_from_name(const std::string& name);

// Source description as written in experiment configs.
struct SourceSpec {
  std::string kind = "laplacian";  // laplacian | uniform | discrete | empirical | gaussian
  double lambda = 1.0;             // laplacian
  double a = 0.0, b = 1.0;         // uniform
  std::vector<double> values;      // discrete atoms or empirical samples
  std::vector<double> masses;      // discrete
  std::vector<double> mu;          // gaussian
  std::vector<double> sigma;       // gaussian, row-major
  std::size_t training_size = 100000;

  bool is_vector() const noexcept { return kind == "gaussian"; }
  ScalarSource scalar() const;
  VectorSource vector() const;
};

struct SweepConfig {
  SourceSpec source;
  std::vector<double> targets;        // receive rates c_1..c_L, bits
  std::vector<double> r_common_grid;  // rates of the all-decoder common packet
  DesignerKind designer = DesignerKind::JointScalar;
  int restarts = 5;                   // random restarts per design
  std::uint64_t seed = 1;
  double delta_d_budget = 0.1;        // dB
  std::string output;                 // CSV path; empty writes nothing
  double rate_tol = 0.05;
  double tol = 1e-9;
  // Vector designers.
  std::size_t calibration_size = 20000;  // leading training samples used to tune weights
  std::size_t m_init = 16;
  std::size_t m_sub = 4;
  std::size_t n_init = 8;
  int max_rounds = 200;
  bool keep_codebooks = false;  // store the codebook of every row (costs one design per row)

  // Targets positive, grid inside [0, min target], sizes consistent.
  void validate() const;
};

struct SweepRow {
  double r_common_target = 0.0;
  bool ok = false;        // receive and common rates on target
  bool rates_ok = false;  // receive rates on target; the common rate may miss
  std::string warning;    // reason when !ok
  // "ok", "common-off" (only the receive rates met) or "failed".
  const char* status() const noexcept { return ok ? "ok" : rates_ok ? "common-off" : "failed"; }
  bool usable() const noexcept { return ok || rates_ok; }
  CostWeights weights;
  RDRecord record;      // excess_distortion_db filled
  std::shared_ptr<const LayeredScalarCodebook> scalar_codebook;  // keep_codebooks only
  std::shared_ptr<const LayeredVQCodebook> vq_codebook;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;             // grid order (ascending target)
  std::vector<RDCurve> baselines;         // non-scalable curve per decoder
  std::vector<double> baseline_distortion;  // D*(c_l)
  // Time-sharing segment between the non-scalable and the fully shared
  // ends, as (transmit rate, excess distortion); empty without both ends.
  std::vector<RDPoint> hull;
  std::size_t best_cost = kNoRow;    // fast designer: minimum J under the reference weights
  std::size_t best_budget = kNoRow;  // largest common rate within the distortion budget
  static constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

  // Excess distortion of time sharing at transmit rate rt (NaN off the segment).
  double hull_delta_d(double rt) const;
};

SweepResult sweep(const SweepConfig& config);

// CSV with one row per grid point, failed points included with status
// "failed" and the warning.
std::string format_csv(const SweepResult& result);
// Table of c_l, packet rates, non-scalable and layered transmit rate and
// the reduction.
std::string format_table(const SweepResult& result);
// Writes the CSV to path and the table next to it (extension .txt).
void emit_results(const SweepResult& result, const std::string& path);

// Initial weights for calibration: slope of the baseline at each target.
std::vector<double> baseline_slopes(const std::vector<RDCurve>& baselines,
                                    const std::vector<double>& targets);

// Generic starting codebook for a common rate r: an ECSQ common layer at
// rate r refined by round(2^(c_l - r)) equal-mass cells per interval.
LayeredScalarCodebook scalar_seed(const ScalarSource& src, double r,
                                  const std::vector<double>& targets);

}  // namespace cilayer
