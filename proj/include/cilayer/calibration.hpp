#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cilayer/quantizer_core.hpp"

namespace cilayer {

// Runs one design at the given weights and returns its evaluated record.
using WeightedDesigner = std::function<RDRecord(const CostWeights&)>;

struct CalibrationOptions {
  double rate_tol = 0.05;    // receive rates, bits
  double common_tol = 0.05;  // rate of the packet shared by all decoders, bits
  double aim = 0.2;          // iterate until errors drop below aim * tolerance
  int max_iter = 40;
  double theta_init = 0.01;
  double theta_min = 1e-4;
  double theta_max = 0.95;
  double theta_off = -0.5;   // used when the common-rate target is 0
  bool theta_log = true;     // geometric search in theta; linear otherwise
  double theta_step = 0.1;   // first expansion step of the linear search
  int frozen_iter = 8;       // receive-rate refinements after theta is fixed
  bool theta_fixed = false;  // keep theta_init and refine only the receive rates
};

struct CalibrationResult {
  CostWeights weights;
  RDRecord record;
  bool converged = false;
  bool rates_met = false;  // receive rates within rate_tol (common rate may miss)
  int iterations = 0;
  std::string diagnostics;
};

// Weights with a_l = 1, lambda_common = -theta * sum lambda (one theta for
// every common packet) such that the designer's receive rates meet
// `targets` and its all-decoder common rate meets r_common. lambda_l is
// updated by per-decoder secant steps in log2 lambda; theta by bisection
// (geometric or linear) once the receive rates are roughly on target. A zero common
// target fixes theta = theta_off, which prices shared bits above private
// ones. The best design seen is returned; converged is false if it misses
// a tolerance. When no design meets every tolerance, the design with the
// nearest common rate among those meeting the receive rates is preferred
// (rates_met); this happens when the common rate jumps across theta.
CalibrationResult calibrate_weights(const WeightedDesigner& design,
                                    const std::vector<double>& targets, double r_common,
                                    std::vector<double> lambda_init,
                                    const CalibrationOptions& opt = {});

}  // namespace cilayer
