#pragma once

#include <stdexcept>
#include <string>

namespace h2hinf {

enum class ErrorKind {
  kDimensionMismatch,
  kNotSymmetric,
  kInvalidArgument,
  kSingularMatrix,
  kNotPositiveDefinite,
  kGammaInfeasible,
  kNonConvergence,
  kInsufficientExcitation,
  kDivergence,
  kZeroDisturbanceEnergy,
  kOracleFailure,
  kConfig,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind lets
/// callers (the CLI in particular) map failures onto exit statuses without
/// parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a state component leaves the finite range during simulation.
class DivergenceError : public Error {
 public:
  DivergenceError(long step, const std::string& what)
      : Error(ErrorKind::kDivergence, what), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace h2hinf
