#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace rescon {

// Caller-supplied data violates a documented precondition.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An internal guarantee failed; indicates a bug or an input outside the
// model the guarantees are proved for.
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// The LP solver gave up (iteration cap, numerical breakdown).
struct SolverError : std::runtime_error {
  int iterations;
  SolverError(const std::string& what, int iters)
      : std::runtime_error(what), iterations(iters) {}
};

// An iterative projection did not reach tolerance; carries the last iterate
// so callers can inspect how far it got.
struct NonConvergence : std::runtime_error {
  Eigen::VectorXd last;
  int iterations;
  NonConvergence(const std::string& what, Eigen::VectorXd last_iterate, int iters)
      : std::runtime_error(what), last(std::move(last_iterate)), iterations(iters) {}
};

// Problem size exceeds the exhaustive-enumeration budget of a checker.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Integer overflow in a counting formula.
struct ArithmeticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Not enough samples for a statistical fit.
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario / configuration file is malformed or inconsistent.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rescon
