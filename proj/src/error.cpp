#include "cilayer/error.hpp"

namespace cilayer {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInterval: return "invalid-interval";
    case ErrorCode::EmptyCell: return "empty-cell";
    case ErrorCode::Model: return "model";
    case ErrorCode::Coverage: return "coverage";
    case ErrorCode::DegenerateDesign: return "degenerate-design";
    case ErrorCode::RateInfeasible: return "rate-infeasible";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Config: return "config";
    case ErrorCode::CalibrationFailed: return "calibration-failed";
    case ErrorCode::Assignment: return "assignment";
    case ErrorCode::Io: return "io";
    case ErrorCode::Domain: return "domain";
  }
  return "unknown";
}

bool is_numeric_failure(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyCell:
    case ErrorCode::DegenerateDesign:
    case ErrorCode::RateInfeasible:
    case ErrorCode::CalibrationFailed:
    case ErrorCode::Assignment:
    case ErrorCode::Domain:
      return true;
    default:
      return false;
  }
}

}  // namespace cilayer
