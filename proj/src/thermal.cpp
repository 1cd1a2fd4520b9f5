#include "niscal/thermal.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace niscal::thermal {

namespace {
constexpr double kHbar = constants::reduced_planck;
}

void Reservoir::validate() const {
  if (!(damping_rate >= 0)) throw std::invalid_argument("Reservoir: damping_rate must be >= 0");
  if (!(photon_number >= 0)) throw std::invalid_argument("Reservoir: photon_number must be >= 0");
}

void SystemModel::validate() const {
  junction.validate();
  circuit.validate();
  transmission_line.validate();
  excess.validate();
  if (transmission_line.label != ReservoirLabel::transmission_line ||
      excess.label != ReservoirLabel::excess) {
    throw std::invalid_argument("SystemModel: mislabeled reservoirs");
  }
  if (!(gain_linear > 0)) throw std::invalid_argument("SystemModel: gain_linear must be > 0");
  if (!(noise_power >= 0)) throw std::invalid_argument("SystemModel: noise_power must be >= 0");
}

double reservoir_power(const Reservoir& reservoir, double resonator_occupation, double omega_r) {
  return kHbar * omega_r * reservoir.damping_rate *
         (reservoir.photon_number - resonator_occupation);
}

double steady_state_occupation(std::span<const Reservoir> reservoirs) {
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& r : reservoirs) {
    weighted += r.damping_rate * r.photon_number;
    total += r.damping_rate;
  }
  if (!(total > 0)) {
    throw std::domain_error("steady_state_occupation: all damping rates are zero");
  }
  return weighted / total;
}

double transmitted_power_exact(double bias_full, const SystemModel& model) {
  model.validate();
  const double omega_r = model.circuit.resonator_frequency;
  const double v = single_junction_voltage(bias_full);
  const auto env = tunneling::tunneling_environment(v, model.asymptotic_damping(),
                                                    model.junction, omega_r);
  const std::array<Reservoir, 3> reservoirs{
      model.transmission_line,
      model.excess,
      Reservoir{ReservoirLabel::tunneling_env, env.damping_rate, env.photon_number},
  };
  const double n_r = steady_state_occupation(reservoirs);
  // reservoir_power is positive into the resonator; transmitted power is
  // reported with the opposite sign (into the line).
  return -reservoir_power(model.transmission_line, n_r, omega_r);
}

double transmitted_power_highbias(double bias_full, const SystemModel& model) {
  model.validate();
  if (bias_full == 0.0) throw std::domain_error("transmitted_power_highbias: V_b = 0");
  const double omega_r = model.circuit.resonator_frequency;
  const double quantum = kHbar * omega_r;
  const double ev = constants::electron_charge * single_junction_voltage(bias_full);
  const double gap = model.junction.gap_energy;

  const double g_tr = model.transmission_line.damping_rate;
  const double g_x = model.excess.damping_rate;
  const double g_bar = model.asymptotic_damping();
  const double g_sum = g_tr + g_bar + g_x;
  const double n_tr = model.transmission_line.photon_number;
  const double n_x = model.excess.photon_number;

  const double bracket = 0.5 * ev +
                         quantum * (g_x * (n_x - n_tr) / g_bar - n_tr - 0.5) -
                         0.25 * gap * gap / ev * (1.0 + g_bar / g_sum);
  return g_tr * g_bar / g_sum * bracket;
}

double output_power(double transmitted, const SystemModel& model) {
  return model.gain_linear * transmitted + model.noise_power;
}

}  // namespace niscal::thermal
