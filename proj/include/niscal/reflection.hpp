#pragma once

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "niscal/levmar.hpp"
#include "niscal/params.hpp"

namespace niscal::reflection {

using Complex = std::complex<double>;

// One measured (or synthesized) reflection trace: complex Gamma versus probe
// frequency at a fixed full bias V_b.
struct ReflectionTrace {
  double bias_full = 0.0;            // V_b, V
  std::vector<double> frequency_Hz;  // strictly increasing probe grid
  std::vector<Complex> values;       // Gamma, or Gamma^N once normalized
  bool normalized = false;

  void validate() const;
};

// Parameters of one instance of the reflection coefficient.
struct ReflectionFitParams {
  double gamma_tr = 0.0;  // rad/s, bias independent
  double gamma_x = 0.0;   // rad/s, bias independent
  double gamma_T = 0.0;   // rad/s, per bias point
  Complex fano{1.0, 0.0};  // r
  double resonance = 0.0;  // omega_r, rad/s; absorbs the per-trace Lamb shift
};

// Voltage reflection coefficient
//   Gamma = [(2-r) g_tr - r (g_T + g_x) + 2 i r (w_p - w_r)] / [g_T + g_tr + g_x - 2 i (w_p - w_r)].
Complex reflection_model(double omega_p, const ReflectionFitParams& params);

// Model for a zero-bias-normalized trace: the ratio of a biased instance to
// the zero-bias instance. The zero-bias instance has its own resonance and
// Fano factor; its tunneling damping is pinned to zero because tunneling is
// gap-suppressed below the critical coupling point (and a free zero-bias
// gamma_T would be exactly degenerate with gamma_x).
struct NormalizedModelParams {
  ReflectionFitParams biased;
  double resonance_zero = 0.0;  // omega_r of the zero-bias trace
  Complex fano_zero{1.0, 0.0};  // r of the zero-bias trace
};

Complex normalized_reflection_model(double omega_p, const NormalizedModelParams& params);

// Pointwise Gamma^N = Gamma(V_b) / Gamma(0). Grids must match exactly.
ReflectionTrace normalize_trace(const ReflectionTrace& trace, const ReflectionTrace& zero_bias);

struct FitOptions {
  bool freeze_shared = false;  // hold gamma_tr, gamma_x, zero-bias instance fixed
  levmar::Options lm;
};

struct SingleTraceFit {
  NormalizedModelParams params;
  double rms_residual = 0.0;  // sqrt(mean |model - data|^2)
  bool converged = false;
  int iterations = 0;
  Eigen::MatrixXd jacobian;  // residual Jacobian at the solution
};

// Nonlinear least squares of the normalized model against one normalized
// trace, on stacked real and imaginary residuals.
SingleTraceFit fit_normalized_trace(const ReflectionTrace& trace,
                                    const NormalizedModelParams& init,
                                    const FitOptions& options = {});

// Data-driven starting point for fitting a single normalized trace: the
// biased resonance from the |Gamma^N| minimum, its linewidth from the dip
// width, the zero-bias resonance from the |Gamma^N| maximum, and the shared
// rates from a coarse grid search.
NormalizedModelParams initial_guess(const ReflectionTrace& trace);

struct JointTraceResult {
  double bias_full = 0.0;
  double gamma_T = 0.0;
  double resonance = 0.0;
  Complex fano{1.0, 0.0};
  double rms_residual = 0.0;
};

struct JointFitResult {
  double gamma_tr = 0.0;
  double gamma_x = 0.0;
  double resonance_zero = 0.0;
  Complex fano_zero{1.0, 0.0};
  std::vector<JointTraceResult> traces;
  double rms_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct JointFitOptions {
  bool share_fano = false;  // single r for all biased traces
  levmar::Options lm;
};

// Joint fit over all normalized traces: gamma_tr, gamma_x and the zero-bias
// instance are common; gamma_T, resonance and (optionally) the Fano factor
// are per trace.
JointFitResult fit_joint(std::span<const ReflectionTrace> traces,
                         const NormalizedModelParams& init,
                         const JointFitOptions& options = {});

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool bounded = true;
  double half_width() const { return 0.5 * (upper - lower); }
};

// Error-circle confidence intervals. A circle of radius equal to the RMS fit
// error is drawn around the fitted on-resonance point in the complex
// Gamma^N plane; each parameter is bisected outward (others held fixed)
// until the on-resonance model prediction leaves the circle. Keys:
// gamma_T, gamma_tr, gamma_x, resonance, fano_re, fano_im.
std::map<std::string, ConfidenceInterval> error_circle_confidence(
    const NormalizedModelParams& fitted, const ReflectionTrace& trace);

struct AsymptoticDampingFit {
  double gamma_bar = 0.0;
  double sigma = 0.0;
  int n_points = 0;
};

// One-parameter least squares of gamma_T(V) = gamma_bar [1 + Delta^2/(2 (eV)^2)]
// to fitted per-bias damping rates; biases are full V_b values. Optional
// per-point sigmas switch to a weighted fit.
AsymptoticDampingFit extract_asymptotic_damping(
    std::span<const std::pair<double, double>> bias_and_gamma, double gap_energy,
    std::span<const double> sigmas = {});

// Final characterization of the three damping rates with 1-sigma errors.
struct RateEstimates {
  double gamma_tr = 0.0;
  double gamma_tr_sigma = 0.0;
  double gamma_bar_T = 0.0;
  double gamma_bar_T_sigma = 0.0;
  double gamma_x = 0.0;
  double gamma_x_sigma = 0.0;  // NaN when not estimable (single bias point)
};

}  // namespace niscal::reflection
