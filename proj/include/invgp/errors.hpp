#pragma once

#include <stdexcept>
#include <string>

namespace invgp {

/// Argument outside the mathematical domain of an operation (|r| >= 1, z >= 1, tau = 0 on a lag grid, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure could not certify the requested accuracy. Carries the
/// best value obtained and the error estimate that failed the check.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double best_value, double error_estimate)
      : std::runtime_error(what), best_value_(best_value), error_estimate_(error_estimate) {}

  double best_value() const noexcept { return best_value_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_value_;
  double error_estimate_;
};

/// Series truncation left a tail above the allowed level.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violated a structural invariant (|r| > 1, non-Hermitian spectrum input, ...).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration for a simulation, estimator or CLI run.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested coefficient order has no closed form.
class UnsupportedOrderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Not enough data for a statistically meaningful estimate.
class QualityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace invgp
