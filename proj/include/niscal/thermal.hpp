#pragma once

#include <span>
#include <vector>

#include "niscal/params.hpp"
#include "niscal/tunneling.hpp"

namespace niscal::thermal {

enum class ReservoirLabel { transmission_line, tunneling_env, excess };

// One dissipative bath coupled to the resonator: damping rate gamma_i and
// effective photon number N_i.
struct Reservoir {
  ReservoirLabel label = ReservoirLabel::excess;
  double damping_rate = 0.0;   // rad/s
  double photon_number = 0.0;  // dimensionless

  void validate() const;
};

// Full device plus amplification chain. The transmission-line and excess
// reservoirs are fixed; the tunneling reservoir is evaluated per bias point.
struct SystemModel {
  JunctionParams junction;
  CircuitParams circuit;
  Reservoir transmission_line{ReservoirLabel::transmission_line, 0.0, 0.0};
  Reservoir excess{ReservoirLabel::excess, 0.0, 0.0};
  double gain_linear = 1.0;  // G
  double noise_power = 0.0;  // P_noise, W

  void validate() const;
  double asymptotic_damping() const {
    return tunneling::asymptotic_damping(circuit, junction);
  }
};

// Net power flowing from a reservoir into the resonator,
//   P_i = hbar omega_r gamma_i (N_i - N_r).
double reservoir_power(const Reservoir& reservoir, double resonator_occupation, double omega_r);

// Steady-state occupation from power balance: N_r = sum(gamma_i N_i) / sum(gamma_i).
double steady_state_occupation(std::span<const Reservoir> reservoirs);

// Net power emitted into the transmission line at full bias V_b, using the
// exact tunneling damping rate and photon number. Positive = into the line.
double transmitted_power_exact(double bias_full, const SystemModel& model);

// High-bias closed form of the transmitted power (valid for e V_b/2 >> Delta).
double transmitted_power_highbias(double bias_full, const SystemModel& model);

// Output of the amplification chain, P_out = G P_tr + P_noise.
double output_power(double transmitted, const SystemModel& model);

}  // namespace niscal::thermal
