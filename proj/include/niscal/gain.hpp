#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "niscal/reflection.hpp"

namespace niscal::gain {

// Output power versus full bias voltage, optionally with per-point noise.
struct PowerTrace {
  std::vector<double> bias_full;  // V_b, strictly increasing
  std::vector<double> power;      // P_out, W
  std::vector<double> sigma;      // per-point 1-sigma, W; empty = unweighted

  void validate() const;
};

// Power spectral density trace with the integration band.
struct SpectrumTrace {
  std::vector<double> frequency_Hz;
  std::vector<double> psd;  // W/Hz, >= 0
  double band_lo_Hz = 0.0;
  double band_hi_Hz = 0.0;

  void validate() const;
};

// Trapezoidal integral of the spectral density over the band; band edges
// falling between grid points are handled by linear interpolation.
double integrate_spectrum(const SpectrumTrace& spectrum);

// Linear least squares of P_out(V) = a V + b + c/V in the single-junction
// voltage V = V_b/2, over points with V_b inside `window_bias_full`.
struct PowerFit {
  double a = 0.0;  // W/V
  double b = 0.0;  // W
  double c = 0.0;  // W V
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double rms_residual = 0.0;
  int n_used = 0;
  std::pair<double, double> window{0.0, 0.0};

  double sigma_a() const { return std::sqrt(covariance(0, 0)); }
};

PowerFit fit_power_curve(const PowerTrace& trace, std::pair<double, double> window_bias_full);

struct GainEstimate {
  double linear = 0.0;
  double dB = 0.0;
};

// Total chain gain from the leading coefficient:
//   G = (2a/e) (gamma_bar + gamma_tr + gamma_x) / (gamma_bar gamma_tr).
GainEstimate extract_gain(double a, const reflection::RateEstimates& rates);

// Inverse of extract_gain: the coefficient a produced by a chain of gain G.
double expected_coefficient_for_gain(double gain_linear, const reflection::RateEstimates& rates);

// Noise temperature of the chain from the zero-bias output power:
//   T_amp = P_out(0) / (G kB Delta_f).
double noise_temperature(double zero_bias_power, double gain_linear, double bandwidth_Hz);

// First-order propagation of the independent uncertainties of
// {a, gamma_bar, gamma_tr, gamma_x} through the gain formula; returns the
// 1-sigma gain uncertainty in dB.
double propagate_gain_uncertainty(double a, double sigma_a,
                                  const reflection::RateEstimates& rates);

}  // namespace niscal::gain
