#include "niscal/gain.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "niscal/constants.hpp"
#include "niscal/errors.hpp"

namespace niscal::gain {

void PowerTrace::validate() const {
  if (bias_full.size() != power.size()) {
    throw std::invalid_argument("PowerTrace: bias/power length mismatch");
  }
  if (!sigma.empty() && sigma.size() != power.size()) {
    throw std::invalid_argument("PowerTrace: sigma length mismatch");
  }
  if (bias_full.empty()) throw std::invalid_argument("PowerTrace: empty trace");
  for (size_t i = 0; i + 1 < bias_full.size(); ++i) {
    if (!(bias_full[i] < bias_full[i + 1])) {
      throw std::invalid_argument("PowerTrace: biases must be strictly increasing");
    }
  }
  for (double p : power) {
    if (!std::isfinite(p)) throw std::invalid_argument("PowerTrace: non-finite power");
  }
}

void SpectrumTrace::validate() const {
  if (frequency_Hz.size() != psd.size()) {
    throw std::invalid_argument("SpectrumTrace: frequency/psd length mismatch");
  }
  if (frequency_Hz.size() < 2) throw std::invalid_argument("SpectrumTrace: need >= 2 points");
  for (size_t i = 0; i + 1 < frequency_Hz.size(); ++i) {
    if (!(frequency_Hz[i] < frequency_Hz[i + 1])) {
      throw std::invalid_argument("SpectrumTrace: frequencies must be strictly increasing");
    }
  }
  for (double d : psd) {
    if (!(d >= 0)) throw std::invalid_argument("SpectrumTrace: density must be >= 0");
  }
  if (!(band_lo_Hz < band_hi_Hz)) throw std::invalid_argument("SpectrumTrace: empty band");
}

double integrate_spectrum(const SpectrumTrace& spectrum) {
  spectrum.validate();
  const auto& f = spectrum.frequency_Hz;
  if (spectrum.band_lo_Hz < f.front() || spectrum.band_hi_Hz > f.back()) {
    throw std::domain_error("integrate_spectrum: band outside frequency grid");
  }

  auto interp = [&](double x) {
    const auto it = std::upper_bound(f.begin(), f.end(), x);
    const size_t hi = std::min<size_t>(std::max<ptrdiff_t>(it - f.begin(), 1), f.size() - 1);
    const size_t lo = hi - 1;
    const double t = (x - f[lo]) / (f[hi] - f[lo]);
    return spectrum.psd[lo] + t * (spectrum.psd[hi] - spectrum.psd[lo]);
  };

  // Trapezoid over interior grid points plus interpolated partial cells at
  // the band edges.
  double total = 0.0;
  double prev_x = spectrum.band_lo_Hz;
  double prev_y = interp(prev_x);
  for (size_t i = 0; i < f.size(); ++i) {
    if (f[i] <= spectrum.band_lo_Hz) continue;
    if (f[i] >= spectrum.band_hi_Hz) break;
    total += 0.5 * (prev_y + spectrum.psd[i]) * (f[i] - prev_x);
    prev_x = f[i];
    prev_y = spectrum.psd[i];
  }
  const double end_y = interp(spectrum.band_hi_Hz);
  total += 0.5 * (prev_y + end_y) * (spectrum.band_hi_Hz - prev_x);
  return total;
}

PowerFit fit_power_curve(const PowerTrace& trace, std::pair<double, double> window_bias_full) {
  trace.validate();
  std::vector<size_t> idx;
  for (size_t i = 0; i < trace.bias_full.size(); ++i) {
    if (trace.bias_full[i] >= window_bias_full.first &&
        trace.bias_full[i] <= window_bias_full.second) {
      idx.push_back(i);
    }
  }
  const int n = static_cast<int>(idx.size());
  if (n < 3) throw FitError("fit_power_curve: fewer than 3 points inside the fit window");

  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  Eigen::VectorXd weight = Eigen::VectorXd::Ones(n);
  for (int k = 0; k < n; ++k) {
    const double v = single_junction_voltage(trace.bias_full[idx[k]]);
    if (v == 0.0) throw FitError("fit_power_curve: zero bias inside the fit window");
    design(k, 0) = v;
    design(k, 1) = 1.0;
    design(k, 2) = 1.0 / v;
    y[k] = trace.power[idx[k]];
    if (!trace.sigma.empty()) {
      if (!(trace.sigma[idx[k]] > 0)) {
        throw FitError("fit_power_curve: non-positive sigma inside the fit window");
      }
      weight[k] = 1.0 / trace.sigma[idx[k]];
    }
  }

  const Eigen::MatrixXd xw = weight.asDiagonal() * design;
  const Eigen::VectorXd yw = weight.asDiagonal() * y;
  const Eigen::Matrix3d normal = xw.transpose() * xw;
  const auto qr = xw.colPivHouseholderQr();
  if (qr.rank() < 3) throw FitError("fit_power_curve: singular design matrix");
  const Eigen::Vector3d coeff = qr.solve(yw);

  PowerFit out;
  out.a = coeff[0];
  out.b = coeff[1];
  out.c = coeff[2];
  out.n_used = n;
  out.window = window_bias_full;

  const Eigen::VectorXd resid = y - design * coeff;
  out.rms_residual = std::sqrt(resid.squaredNorm() / n);
  const Eigen::Matrix3d inv_normal = normal.inverse();
  if (trace.sigma.empty()) {
    // Covariance from the residual variance.
    const double dof = std::max(n - 3, 1);
    const double s2 = resid.squaredNorm() / dof;
    out.covariance = s2 * inv_normal;
  } else {
    out.covariance = inv_normal;
  }
  return out;
}

GainEstimate extract_gain(double a, const reflection::RateEstimates& rates) {
  if (!(a > 0)) throw std::domain_error("extract_gain: coefficient a must be > 0");
  if (!(rates.gamma_bar_T > 0) || !(rates.gamma_tr > 0) || !(rates.gamma_x >= 0)) {
    throw std::domain_error("extract_gain: rates must be positive");
  }
  const double sum = rates.gamma_bar_T + rates.gamma_tr + rates.gamma_x;
  GainEstimate g;
  g.linear = 2.0 * a / constants::electron_charge * sum / (rates.gamma_bar_T * rates.gamma_tr);
  g.dB = 10.0 * std::log10(g.linear);
  return g;
}

double expected_coefficient_for_gain(double gain_linear, const reflection::RateEstimates& rates) {
  const double sum = rates.gamma_bar_T + rates.gamma_tr + rates.gamma_x;
  return gain_linear * constants::electron_charge / 2.0 * rates.gamma_bar_T * rates.gamma_tr /
         sum;
}

double noise_temperature(double zero_bias_power, double gain_linear, double bandwidth_Hz) {
  if (!(gain_linear > 0)) throw std::domain_error("noise_temperature: gain must be > 0");
  if (!(bandwidth_Hz > 0)) throw std::domain_error("noise_temperature: bandwidth must be > 0");
  return zero_bias_power / (gain_linear * constants::boltzmann * bandwidth_Hz);
}

double propagate_gain_uncertainty(double a, double sigma_a,
                                  const reflection::RateEstimates& rates) {
  if (!(a > 0)) throw std::domain_error("propagate_gain_uncertainty: a must be > 0");
  if (!(sigma_a >= 0) || !(rates.gamma_tr_sigma >= 0) || !(rates.gamma_bar_T_sigma >= 0)) {
    throw std::domain_error("propagate_gain_uncertainty: sigmas must be >= 0");
  }
  const double sum = rates.gamma_bar_T + rates.gamma_tr + rates.gamma_x;
  // d ln G / d gamma_i for G = a (sum) / (gamma_bar gamma_tr), treating the
  // inputs as independent.
  const double d_bar = 1.0 / sum - 1.0 / rates.gamma_bar_T;
  const double d_tr = 1.0 / sum - 1.0 / rates.gamma_tr;
  const double d_x = 1.0 / sum;
  const double gx_sigma = std::isfinite(rates.gamma_x_sigma) ? rates.gamma_x_sigma : 0.0;
  const double rel2 = (sigma_a / a) * (sigma_a / a) +
                      std::pow(rates.gamma_bar_T_sigma * d_bar, 2) +
                      std::pow(rates.gamma_tr_sigma * d_tr, 2) + std::pow(gx_sigma * d_x, 2);
  return 10.0 / std::log(10.0) * std::sqrt(rel2);
}

}  // namespace niscal::gain
