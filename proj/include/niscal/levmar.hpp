#pragma once

#include <Eigen/Dense>
#include <functional>

namespace niscal::levmar {

using ResidualFn = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals)>;

struct Options {
  int max_iterations = 200;
  double step_tolerance = 1e-10;  // relative step size below which we stop
  double initial_lambda = 1e-3;
  double min_cost_reduction = 1e-14;  // relative SSR change considered progress
};

struct Result {
  Eigen::VectorXd params;
  double rms = 0.0;  // sqrt(SSR / m)
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd jacobian;  // at the solution, scaled to raw parameters
};

// Damped Gauss-Newton (Levenberg-Marquardt) least squares with forward
// difference Jacobians. `scales` gives a characteristic magnitude per
// parameter; the optimization runs on x_j / scales_j so that mixed-unit
// problems (rates in rad/s next to dimensionless factors) stay conditioned.
Result fit(const ResidualFn& fn, const Eigen::VectorXd& initial, const Eigen::VectorXd& scales,
           const Options& options = {});

}  // namespace niscal::levmar
