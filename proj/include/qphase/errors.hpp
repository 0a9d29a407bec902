// errors.hpp — Exception types for numerically detectable failure modes.
//
// Plain precondition violations (bad dimensions, malformed parameters) throw
// std::invalid_argument with a "function: message" string.  The types below
// exist so callers can distinguish failures that are legitimate outcomes of a
// computation (no attractor, lost convergence, blown-up trajectory) from
// programming errors, and map them to process exit codes in the CLI.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qphase {

// Deterministic dynamics converged to a fixed point: there is no limit cycle.
struct NoCycleError : std::runtime_error {
  explicit NoCycleError(const std::string& msg) : std::runtime_error(msg) {}
};

// The first-return overlap scan never produced an acceptable maximum.
struct PeriodNotFoundError : std::runtime_error {
  explicit PeriodNotFoundError(const std::string& msg) : std::runtime_error(msg) {}
};

// An iterative procedure (relaxation, asymptotic phase, refinement) did not
// reach its required tolerance.
struct NotConvergedError : std::runtime_error {
  explicit NotConvergedError(const std::string& msg) : std::runtime_error(msg) {}
};

// A stochastic trajectory produced a non-finite or wildly out-of-range state.
// Records the step index at which the blow-up was detected.
struct DivergenceError : std::runtime_error {
  std::size_t step;
  DivergenceError(const std::string& msg, std::size_t step_index)
      : std::runtime_error(msg + " (step " + std::to_string(step_index) + ")"),
        step(step_index) {}
};

// Deterministic density-matrix propagation lost trace preservation, i.e. the
// step size is too large for the model's fastest rate.
struct StabilityError : std::runtime_error {
  explicit StabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qphase
