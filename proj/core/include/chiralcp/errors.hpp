#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace chiralcp {

/// Precondition violated by an argument (negative intensity, z outside the cavity, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure stopped before meeting its tolerance.
///
/// Carries the best estimate reached so that callers can decide whether a
/// slightly-too-loose answer is still usable.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<std::complex<double>> best_estimate,
                   double error_estimate)
      : std::runtime_error(what),
        best_estimate_(std::move(best_estimate)),
        error_estimate_(error_estimate) {}

  const std::vector<std::complex<double>>& best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  std::vector<std::complex<double>> best_estimate_;
  double error_estimate_;
};

/// Inconsistent inputs to an aggregation step (e.g. ensembles that cannot be compared).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace chiralcp
