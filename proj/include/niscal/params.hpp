#pragma once

#include <stdexcept>

#include "niscal/constants.hpp"

namespace niscal {

// Physics of a single NIS junction. The quasiparticle temperature is assumed
// equal in both electrodes.
struct JunctionParams {
  double gap_energy = units::ueV_to_joule(200.0);  // Delta, J
  double dynes_parameter = 1e-4;                   // gamma_D, dimensionless
  double tunneling_resistance = 12e3;              // R_T of one junction, Ohm
  double normal_temperature = 0.1;                 // T_N, K

  void validate() const {
    if (!(gap_energy > 0)) throw std::invalid_argument("JunctionParams: gap_energy must be > 0");
    if (!(dynes_parameter >= 0)) throw std::invalid_argument("JunctionParams: dynes_parameter must be >= 0");
    if (!(tunneling_resistance > 0)) throw std::invalid_argument("JunctionParams: tunneling_resistance must be > 0");
    if (!(normal_temperature > 0)) throw std::invalid_argument("JunctionParams: normal_temperature must be > 0");
  }
};

// Lumped-element description of the coupled junction-resonator circuit.
struct CircuitParams {
  double coupling_capacitance = 800e-15;   // C_c, F
  double junction_capacitance = 80e-15;    // C_j, F
  double stray_capacitance = 120e-15;      // C_m, F
  double resonator_impedance = 35.0;       // Z_r = sqrt(L/C), Ohm
  double resonator_frequency = units::ghz_to_rad(4.67);  // omega_r, rad/s
  double line_impedance = 50.0;            // Z_tr, Ohm

  void validate() const {
    if (!(coupling_capacitance > 0)) throw std::invalid_argument("CircuitParams: coupling_capacitance must be > 0");
    if (!(junction_capacitance >= 0)) throw std::invalid_argument("CircuitParams: junction_capacitance must be >= 0");
    if (!(stray_capacitance >= 0)) throw std::invalid_argument("CircuitParams: stray_capacitance must be >= 0");
    if (!(resonator_impedance > 0)) throw std::invalid_argument("CircuitParams: resonator_impedance must be > 0");
    if (!(resonator_frequency > 0)) throw std::invalid_argument("CircuitParams: resonator_frequency must be > 0");
    if (!(line_impedance > 0)) throw std::invalid_argument("CircuitParams: line_impedance must be > 0");
  }
};

// The device is biased across the SINIS pair; each junction sees half the
// applied voltage. Every V_b -> V conversion in the code base goes through
// this helper.
inline constexpr double single_junction_voltage(double bias_full) { return 0.5 * bias_full; }

}  // namespace niscal
