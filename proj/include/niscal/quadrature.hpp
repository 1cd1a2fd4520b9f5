#pragma once

#include <functional>
#include <vector>

namespace niscal::quadrature {

struct Result {
  double value = 0.0;
  double error_bound = 0.0;
  bool converged = false;
  int segments = 0;
};

struct Options {
  double relative_tolerance = 1e-9;
  double absolute_tolerance = 0.0;  // floor; 0 means purely relative
  int max_segments = 4096;
};

// Globally adaptive Gauss7/Kronrod15 integration of f over [a, b].
// `breakpoints` are interior abscissae where the integrand has kinks or
// near-singular peaks; they become initial segment boundaries so the
// refinement never straddles them. Does not throw on non-convergence; the
// caller inspects Result::converged.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breakpoints = {}, const Options& options = {});

}  // namespace niscal::quadrature
