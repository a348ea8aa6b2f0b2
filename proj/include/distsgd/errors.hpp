#pragma once

#include <stdexcept>
#include <string>

namespace distsgd {

/// Thrown when an iterative numerical routine fails to converge. Carries the
/// last estimate and residual so callers can see how close it got.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double estimate, double residual)
      : std::runtime_error(what), estimate(estimate), residual(residual) {}

  double estimate;
  double residual;
};

}  // namespace distsgd
