#include "cilayer/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "cilayer/error.hpp"

namespace cilayer {

CalibrationResult calibrate_weights(const WeightedDesigner& design,
                                    const std::vector<double>& targets, double r_common,
                                    std::vector<double> lambda_init,
                                    const CalibrationOptions& opt) {
  const std::size_t L = targets.size();
  if (L < 2 || lambda_init.size() != L)
    fail(ErrorCode::Config, "calibration needs one target and one initial lambda per decoder");
  for (double c : targets)
    if (!(c > 0.0)) fail(ErrorCode::Config, "receive-rate targets must be positive");
  if (r_common < 0.0 || r_common > *std::min_element(targets.begin(), targets.end()) + 1e-12)
    fail(ErrorCode::Config, "common-rate target must lie in [0, min target]");

  const bool sharing = r_common > 0.0;
  std::vector<double> log_lambda(L), prev_log(L), prev_rate(L), slope(L, -0.5);
  for (std::size_t l = 0; l < L; ++l) log_lambda[l] = std::log2(std::max(lambda_init[l], 1e-12));
  // theta is searched in u = log(theta) or u = theta.
  if (opt.theta_log && !(opt.theta_min > 0.0 && opt.theta_init > 0.0))
    fail(ErrorCode::Config, "logarithmic theta search needs a positive range");
  auto to_u = [&](double t) { return opt.theta_log ? std::log(t) : t; };
  auto from_u = [&](double u) { return opt.theta_log ? std::exp(u) : u; };
  const double u_min = to_u(opt.theta_min), u_max = to_u(opt.theta_max);
  const double u_step = opt.theta_log ? std::log(4.0) : opt.theta_step;
  const double u_jump = opt.theta_log ? std::log1p(1e-3) : 1e-4;
  double u = sharing ? to_u(opt.theta_init) : 0.0;
  std::optional<double> u_lo, u_hi;
  double common_lo = 0.0, common_hi = 0.0;
  int expansions = 0;
  bool frozen = !sharing || opt.theta_fixed;
  int frozen_iters = 0;
  bool have_prev = false;

  CalibrationResult best, on_rates;
  double best_score = kInf, on_rates_err = kInf;
  std::ostringstream diag;
  for (int it = 0; it < opt.max_iter; ++it) {
    std::vector<double> lambdas(L);
    for (std::size_t l = 0; l < L; ++l) lambdas[l] = std::exp2(log_lambda[l]);
    const double theta = sharing ? from_u(u) : opt.theta_off;
    const CostWeights w = CostWeights::with_sharing(lambdas, theta);
    const RDRecord rec = design(w);

    double rate_err = 0.0;
    for (std::size_t l = 0; l < L; ++l)
      rate_err = std::max(rate_err, std::abs(rec.receive_rates[l] - targets[l]));
    const double common_err = std::abs(rec.common_rate() - r_common);
    const double score = std::max(rate_err / opt.rate_tol, common_err / opt.common_tol);
    if (score < best_score) {
      best_score = score;
      best.weights = w;
      best.record = rec;
    }
    if (rate_err <= opt.rate_tol && common_err < on_rates_err) {
      on_rates_err = common_err;
      on_rates.weights = w;
      on_rates.record = rec;
    }
    best.iterations = it + 1;
    if (rate_err <= opt.aim * opt.rate_tol && common_err <= opt.aim * opt.common_tol) break;
    if (frozen && sharing && ++frozen_iters > opt.frozen_iter) break;

    // Common rate: bisect theta once the receive rates are close. When the
    // bracket collapses, theta stays at the side with the nearer common
    // rate and only the receive rates are refined.
    if (!frozen && rate_err <= 3.0 * opt.rate_tol && common_err > opt.aim * opt.common_tol) {
      if (rec.common_rate() < r_common) {
        u_lo = u;
        common_lo = rec.common_rate();
      } else {
        u_hi = u;
        common_hi = rec.common_rate();
      }
      if (u_lo && u_hi && *u_hi - *u_lo < u_jump) {
        diag << "common rate jumps across theta " << from_u(*u_lo) << ".." << from_u(*u_hi)
             << " (" << common_lo << " to " << common_hi << "); ";
        u = r_common - common_lo < common_hi - r_common ? *u_lo : *u_hi;
        frozen = true;
      } else if (u_lo && !u_hi) {
        if (*u_lo >= u_max) {
          diag << "common rate not bracketed within theta range; ";
          u = u_max;
          frozen = true;
        } else {
          u = std::min(u_max, *u_lo + u_step * std::exp2(expansions++));
        }
      } else if (u_hi && !u_lo) {
        if (*u_hi <= u_min) {
          diag << "common rate not bracketed within theta range; ";
          u = u_min;
          frozen = true;
        } else {
          u = std::max(u_min, *u_hi - u_step * std::exp2(expansions++));
        }
      } else {
        u = 0.5 * (*u_lo + *u_hi);
      }
    }
    // Receive rates: secant in log2 lambda.
    bool moved = !frozen;
    for (std::size_t l = 0; l < L; ++l) {
      const double err = rec.receive_rates[l] - targets[l];
      if (have_prev && std::abs(log_lambda[l] - prev_log[l]) > 1e-9) {
        const double s = (rec.receive_rates[l] - prev_rate[l]) / (log_lambda[l] - prev_log[l]);
        if (s < 0.0) slope[l] = std::clamp(s, -4.0, -0.05);
      }
      prev_log[l] = log_lambda[l];
      prev_rate[l] = rec.receive_rates[l];
      if (std::abs(err) > opt.aim * opt.rate_tol) {
        log_lambda[l] += std::clamp(-err / slope[l], -2.0, 2.0);
        moved = true;
      }
    }
    if (!moved) break;
    have_prev = true;
  }
  best.converged = best_score <= 1.0;
  if (!best.converged && on_rates_err < kInf) {
    on_rates.iterations = best.iterations;
    best = std::move(on_rates);
  }
  best.rates_met = best.converged || on_rates_err < kInf;
  if (!best.converged) {
    diag << (best.rates_met ? "receive rates met at" : "best receive rates");
    for (double r : best.record.receive_rates) diag << ' ' << r;
    diag << ", common rate " << best.record.common_rate();
  }
  best.diagnostics = diag.str();
  return best;
}

}  // namespace cilayer
