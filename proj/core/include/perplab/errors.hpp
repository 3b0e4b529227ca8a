#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace perplab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A payoff was evaluated outside the set where it is defined
/// (e.g. log or fractional power of a non-positive price).
class PayoffDomainError : public Error {
 public:
  using Error::Error;
};

/// The discount rate is undefined: payoff not sign-definite, or |phi| fell
/// below the configured floor.
class DiscountRateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (CSV rows, timestamps, lengths).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The jump-hedge matrix is singular or too badly conditioned to invert.
class HedgeBasisSingular : public Error {
 public:
  HedgeBasisSingular(double condition_number, double threshold,
                     std::size_t step = npos);

  double condition_number() const noexcept { return condition_number_; }
  double threshold() const noexcept { return threshold_; }
  /// Grid step at which the failure occurred, or npos when not on a path.
  std::size_t step() const noexcept { return step_; }
  HedgeBasisSingular at_step(std::size_t step) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  double condition_number_;
  double threshold_;
  std::size_t step_;
};

}  // namespace perplab
