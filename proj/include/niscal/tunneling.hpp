#pragma once

#include "niscal/params.hpp"

namespace niscal::tunneling {

// Fermi-Dirac occupation 1/(exp(energy/kT) + 1). Throws std::domain_error
// for non-positive temperature.
double fermi_occupation(double energy, double temperature);

// Dynes-broadened BCS density of states,
//   n_S(eps) = | Re[(eps + i*gamma_D*Delta) / sqrt((eps + i*gamma_D*Delta)^2 - Delta^2)] |,
// even in eps and -> 1 for |eps| -> inf. For gamma_D = 0 the points
// |eps| = Delta are true singularities and raise std::domain_error.
double dynes_dos(double energy, const JunctionParams& params);

// Normalized forward tunneling rate
//   F(E) = 1/(2 pi hbar) * Int n_S(eps) [f(eps - E) - f(eps)] / [1 - exp(-E/(kB T_N))] deps,
// for an electron gaining energy E, in 1/s. E = 0 is evaluated through the
// analytic limit of the bias window. Throws NumericalError when the adaptive
// quadrature cannot reach its tolerance budget.
double forward_tunneling_rate(double energy_gain, const JunctionParams& params);

// Tunneling damping rate in the infinite-bias limit,
//   gamma_bar_T = 2 C_c^2 Z_r omega_r / [(C_c + C_j + C_m)^2 R_T].
double asymptotic_damping(const CircuitParams& circuit, const JunctionParams& junction);

// Tunneling resistance that realizes a target asymptotic damping rate for an
// otherwise fixed circuit. R_T only enters the model through gamma_bar_T, so
// this is the natural knob for matching a measured rate.
double tunneling_resistance_for_damping(const CircuitParams& circuit, double gamma_bar_target);

// Resonator damping rate by photon-assisted tunneling at single-junction
// bias V:
//   gamma_T = gamma_bar * (pi/omega_r) * sum_{l,tau=+-1} l * F(tau e V + l hbar omega_r).
double damping_rate_exact(double bias_per_junction, double gamma_bar,
                          const JunctionParams& junction, double omega_r);

// Effective temperature of the tunneling environment, Eq.
//   T_T = hbar omega_r / kB / ln[ sum_tau F(tau eV + hbar omega_r) / sum_tau F(tau eV - hbar omega_r) ].
// Throws std::domain_error if the rate ratio is not > 1 (unphysical input).
double effective_temperature(double bias_per_junction, const JunctionParams& junction,
                             double omega_r);

// Bose-Einstein occupation of the mode omega_r at the given temperature.
double photon_number_from_temperature(double temperature, double omega_r);

// Damping rate and effective photon number of the tunneling environment,
// sharing one set of tunneling-rate evaluations.
struct TunnelingEnvironment {
  double damping_rate;           // gamma_T, rad/s
  double effective_temperature;  // T_T, K
  double photon_number;          // N_T
};
TunnelingEnvironment tunneling_environment(double bias_per_junction, double gamma_bar,
                                           const JunctionParams& junction, double omega_r);

// High-bias (Sommerfeld) approximations, valid for eV >> Delta; the Dynes
// parameter is dropped here by construction. Throw std::domain_error at V = 0.
double damping_rate_highbias(double bias_per_junction, double gap_energy, double gamma_bar);
// eV/(2 hbar omega_r) - 1/2 - Delta^2/(2 hbar omega_r eV). May go negative
// outside the validity domain; returned as-is.
double photon_number_highbias(double bias_per_junction, double gap_energy, double omega_r);

}  // namespace niscal::tunneling
