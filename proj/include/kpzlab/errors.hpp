#pragma once

#include <stdexcept>
#include <string>

namespace kpzlab {

// Failure categories. Callers catch by category; the message carries the detail.

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A truncated series could not be certified within the term budget.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, double partial_sum, double tail_bound)
      : std::runtime_error(what), partial_sum_(partial_sum), tail_bound_(tail_bound) {}
  double partial_sum() const noexcept { return partial_sum_; }
  double tail_bound() const noexcept { return tail_bound_; }

 private:
  double partial_sum_;
  double tail_bound_;
};

/// Rejection sampling kept too few paths to report an estimate.
class InsufficientAcceptance : public std::runtime_error {
 public:
  InsufficientAcceptance(const std::string& what, double acceptance_rate)
      : std::runtime_error(what), acceptance_rate_(acceptance_rate) {}
  double acceptance_rate() const noexcept { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};

/// The discretized path never reached the boundary.
class NoHit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration would exceed the configured compute budget.
class ResourceGuard : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace kpzlab
