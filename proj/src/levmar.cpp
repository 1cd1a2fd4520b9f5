#include "niscal/levmar.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace niscal::levmar {

namespace {

// Jacobian of the residual vector w.r.t. the scaled parameters.
void numeric_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& scales, const Eigen::VectorXd& r0,
                      Eigen::MatrixXd& jac) {
  const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  Eigen::VectorXd xp = x;
  Eigen::VectorXd rp(r0.size());
  for (int j = 0; j < x.size(); ++j) {
    const double h = sqrt_eps * std::max(std::abs(x[j]), scales[j]);
    xp[j] = x[j] + h;
    fn(xp, rp);
    jac.col(j) = (rp - r0) / h;
    xp[j] = x[j];
  }
}

}  // namespace

Result fit(const ResidualFn& fn, const Eigen::VectorXd& initial, const Eigen::VectorXd& scales,
           const Options& options) {
  if (initial.size() != scales.size()) {
    throw std::invalid_argument("levmar::fit: initial and scales size mismatch");
  }
  for (int j = 0; j < scales.size(); ++j) {
    if (!(scales[j] > 0)) throw std::invalid_argument("levmar::fit: scales must be > 0");
  }

  Eigen::VectorXd x = initial;
  Eigen::VectorXd r;
  fn(x, r);
  const int m = static_cast<int>(r.size());
  const int n = static_cast<int>(x.size());
  if (m < n) throw std::invalid_argument("levmar::fit: fewer residuals than parameters");

  double ssr = r.squaredNorm();
  double lambda = options.initial_lambda;
  Eigen::MatrixXd jac(m, n);
  Eigen::VectorXd r_trial(m);

  Result out;
  out.params = x;
  out.iterations = 0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    out.iterations = iter + 1;
    numeric_jacobian(fn, x, scales, r, jac);
    // Work in scaled parameters y_j = x_j / s_j: columns scaled by s_j.
    Eigen::MatrixXd js = jac;
    for (int j = 0; j < n; ++j) js.col(j) *= scales[j];

    const Eigen::MatrixXd jtj = js.transpose() * js;
    const Eigen::VectorXd jtr = js.transpose() * r;

    bool step_taken = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int j = 0; j < n; ++j) {
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-30);
      }
      const Eigen::VectorXd dy = damped.ldlt().solve(-jtr);
      Eigen::VectorXd x_trial = x;
      for (int j = 0; j < n; ++j) x_trial[j] += dy[j] * scales[j];

      fn(x_trial, r_trial);
      const double ssr_trial = r_trial.squaredNorm();
      if (ssr_trial < ssr) {
        const double max_step = dy.cwiseAbs().maxCoeff();
        const double rel_drop = (ssr - ssr_trial) / std::max(ssr, 1e-300);
        x = x_trial;
        r = r_trial;
        ssr = ssr_trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        step_taken = true;
        if (max_step < options.step_tolerance || rel_drop < options.min_cost_reduction) {
          out.converged = true;
        }
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }

    if (!step_taken) {
      // No downhill step found at any damping: treat the current point as
      // stationary.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }

  out.params = x;
  out.rms = std::sqrt(ssr / m);
  numeric_jacobian(fn, x, scales, r, jac);
  out.jacobian = jac;
  return out;
}

}  // namespace niscal::levmar
