#pragma once

#include <stdexcept>
#include <string>

namespace niscal {

// Quadrature or root finding failed to reach its tolerance budget. Carries
// the best estimate achieved and the associated error bound so callers can
// decide whether the partial result is still usable.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const { return estimate_; }
  double error_bound() const { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

// Malformed input files or configuration. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Nonlinear fit did not converge and the best-so-far result is not
// acceptable. Maps to CLI exit code 3.
class FitError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace niscal
