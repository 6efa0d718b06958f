#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vortexlab {

enum class ErrorCode {
  DecoupledSystem,
  NotPositiveDefinite,
  NonPhysicalFilling,
  GridMismatch,
  InvalidGrid,
  InvalidVortex,
  NonFiniteValue,
  NonPositiveMu,
  NonPositiveShift,
  WrongDomainKind,
  InfeasibleDomain,
  Overflow,
  MaxIterationsExceeded,
  LineSearchStalled,
  NegativeCurvature,
  ConvergenceFailure,
  InsufficientDecayWindow,
  NotRadiallyReducible,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DecoupledSystem: return "DecoupledSystem";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonPhysicalFilling: return "NonPhysicalFilling";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::InvalidVortex: return "InvalidVortex";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonPositiveMu: return "NonPositiveMu";
    case ErrorCode::NonPositiveShift: return "NonPositiveShift";
    case ErrorCode::WrongDomainKind: return "WrongDomainKind";
    case ErrorCode::InfeasibleDomain: return "InfeasibleDomain";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::LineSearchStalled: return "LineSearchStalled";
    case ErrorCode::NegativeCurvature: return "NegativeCurvature";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InsufficientDecayWindow: return "InsufficientDecayWindow";
    case ErrorCode::NotRadiallyReducible: return "NotRadiallyReducible";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code; what() is "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vortexlab
