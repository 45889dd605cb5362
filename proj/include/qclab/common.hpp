#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qclab {

/// Points of the plane are complex numbers throughout the library.
using Point = std::complex<double>;
using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

enum class ErrorCode {
  NotElliptic,
  DegenerateDenominator,
  NotApplicable,
  NotSPD,
  PerturbationTooLarge,
  SingularJacobian,
  SupportTooLarge,
  NoConvergence,
  NotContractive,
  FoldDetected,
  NotSimplyConnected,
  CurlTooLarge,
  SolverDiverged,
  DisconnectedInterior,
  PartitionMismatch,
  EmptyK,
  NoInteriorPole,
  DomainError,
  BadR0,
  NotFound,
  InsufficientScales,
  BadDimension,
  LevelTooDeep,
  ConfigError,
  IncompleteBundle,
  IOError,
  MaxStepsExceeded,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. The code identifies the failure class named in the
/// operation contracts; the message carries the details.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qclab
