#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace axiflow {

/// Argument outside the mathematical domain of a function (rho <= 0, B <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration or precondition on problem setup.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Momentum density beyond the sonic value of the subsonic branch.
class BranchError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite coefficient, breakdown or exhausted inner iteration.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Picard iteration failed to converge; carries the update history.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace axiflow
