#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace multiridge {

/// Malformed arguments or data: dimension mismatches, empty datasets,
/// invalid hyperparameter combinations, unparsable configs.
class InvalidInputError : public std::invalid_argument {
 public:
  explicit InvalidInputError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// The regularized normal equations could not be solved to working
/// accuracy (e.g. lambda = 0 on a rank-deficient design). The message
/// names the offending fold / gamma when thrown from the CV engine.
class SingularSystemError : public std::runtime_error {
 public:
  explicit SingularSystemError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Gradient descent hit a non-finite criterion value or gradient.
/// Carries the epoch index and the last finite iterate.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, int epoch_index, std::vector<double> last_lambda)
      : std::runtime_error(msg), epoch(epoch_index), last_finite_lambda(std::move(last_lambda)) {}

  int epoch;
  std::vector<double> last_finite_lambda;
};

/// A simulated trajectory exceeded the overflow guard. Echoes the seed so
/// the run can be reproduced.
class SimulationDivergenceError : public std::runtime_error {
 public:
  SimulationDivergenceError(const std::string& msg, std::uint64_t run_seed)
      : std::runtime_error(msg), seed(run_seed) {}

  std::uint64_t seed;
};

/// Every candidate of a hyperparameter search failed or diverged.
class SearchFailureError : public std::runtime_error {
 public:
  explicit SearchFailureError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace multiridge
