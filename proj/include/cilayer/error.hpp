#pragma once

#include <stdexcept>
#include <string>

namespace cilayer {

enum class ErrorCode {
  InvalidInterval,
  EmptyCell,
  Model,
  Coverage,
  DegenerateDesign,
  RateInfeasible,
  Shape,
  Config,
  CalibrationFailed,
  Assignment,
  Io,
  Domain,
};

const char* error_code_name(ErrorCode code) noexcept;

// Numeric failures (as opposed to bad input) map to a distinct CLI exit code.
bool is_numeric_failure(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace cilayer
