#pragma once

#include <stdexcept>
#include <string>

namespace jaclab {

/// Base class for all jaclab failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration or input data: bad parameter ranges, malformed
/// specs, violated preconditions. Maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Numerical failure during a computation. Maps to CLI exit code 3.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// Quadrature did not reach the requested tolerance; carries the best
/// estimate obtained and its error bound.
class ToleranceNotMet : public NumericError {
 public:
  ToleranceNotMet(const std::string& msg, double best, double error)
      : NumericError(msg), best_estimate(best), error_estimate(error) {}
  double best_estimate;
  double error_estimate;
};

/// An integrand sample evaluated to NaN or infinity at an interior point.
class InvalidIntegrand : public NumericError {
 public:
  InvalidIntegrand(const std::string& msg, double at) : NumericError(msg), location(at) {}
  double location;
};

/// The graded-endpoint scheme detected a non-integrable singularity
/// (panel contributions do not decay); carries the partial sum.
class DivergentIntegral : public NumericError {
 public:
  DivergentIntegral(const std::string& msg, double partial) : NumericError(msg), partial_sum(partial) {}
  double partial_sum;
};

/// A q-th power exceeded the floating-point range; carries log(value).
class EnergyOverflow : public NumericError {
 public:
  EnergyOverflow(const std::string& msg, double log_val) : NumericError(msg), log_value(log_val) {}
  double log_value;
};

}  // namespace jaclab
