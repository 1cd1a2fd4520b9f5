#pragma once

// Test-only reference implementations, independent of the library's
// quadrature path. The forward-rate oracle evaluates the tunneling integral
// with a fixed-step trapezoid rule over the full truncated support.

#include <cmath>
#include <complex>
#include <cstddef>

#include "niscal/params.hpp"

namespace oracles {

inline double fermi(double energy, double kT) {
  const double x = energy / kT;
  if (x >= 0) {
    const double ex = std::exp(-x);
    return ex / (1.0 + ex);
  }
  return 1.0 / (1.0 + std::exp(x));
}

inline double dynes(double energy, double gap, double gamma_d) {
  const std::complex<double> z(energy, gamma_d * gap);
  return std::abs((z / std::sqrt(z * z - gap * gap)).real());
}

// Fixed-step trapezoid evaluation of the forward tunneling rate over
// [-(|E| + Delta + 40 kB T), |E| + Delta + 40 kB T], Kahan-compensated.
inline double trapezoid_forward_rate(double energy_gain, const niscal::JunctionParams& p,
                                     std::size_t points = 1'000'001) {
  const double kT = niscal::constants::boltzmann * p.normal_temperature;
  const double window = std::abs(energy_gain) + p.gap_energy + 40.0 * kT;
  const double h = 2.0 * window / static_cast<double>(points - 1);

  auto integrand = [&](double eps) {
    const double dos = dynes(eps, p.gap_energy, p.dynes_parameter);
    const double f_eps = fermi(eps, kT);
    if (energy_gain == 0.0) return dos * f_eps * (1.0 - f_eps);
    const double f_shift = fermi(eps - energy_gain, kT);
    return dos * (f_shift - f_eps) / -std::expm1(-energy_gain / kT);
  };

  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double eps = -window + h * static_cast<double>(i);
    double term = integrand(eps);
    if (i == 0 || i + 1 == points) term *= 0.5;
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum * h / (niscal::constants::two_pi * niscal::constants::reduced_planck);
}

}  // namespace oracles
