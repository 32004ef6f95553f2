#pragma once

#include <stdexcept>
#include <string>

namespace fiberpinn {

enum class ErrorCode {
  kInvalidParameter,
  kDegenerateDispersion,
  kInvalidGrid,
  kInvalidConfig,
  kCoverage,
  kDivergence,
  kInvalidArchitecture,
  kInvalidGradient,
  kInvalidCoefficients,
  kOutOfRange,
  kIo,
};

const char* to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code lets
/// front-ends map failures to exit statuses without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kDegenerateDispersion: return "degenerate-dispersion";
    case ErrorCode::kInvalidGrid: return "invalid-grid";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kCoverage: return "coverage";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kInvalidArchitecture: return "invalid-architecture";
    case ErrorCode::kInvalidGradient: return "invalid-gradient";
    case ErrorCode::kInvalidCoefficients: return "invalid-coefficients";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace fiberpinn
