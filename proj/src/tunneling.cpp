#include "niscal/tunneling.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "niscal/errors.hpp"
#include "niscal/quadrature.hpp"

namespace niscal::tunneling {

namespace {
constexpr double kHbar = constants::reduced_planck;
constexpr double kB = constants::boltzmann;
constexpr double kTwoPi = constants::two_pi;
}  // namespace

double fermi_occupation(double energy, double temperature) {
  if (!(temperature > 0)) throw std::domain_error("fermi_occupation: temperature must be > 0");
  const double x = energy / (kB * temperature);
  // Evaluate through exp(-|x|) so large |x| underflows instead of overflowing.
  if (x >= 0) {
    const double ex = std::exp(-x);
    return ex / (1.0 + ex);
  }
  return 1.0 / (1.0 + std::exp(x));
}

double dynes_dos(double energy, const JunctionParams& params) {
  const double gap = params.gap_energy;
  const double gd = params.dynes_parameter;
  if (gd == 0.0 && std::abs(std::abs(energy) - gap) == 0.0) {
    throw std::domain_error("dynes_dos: singular at |energy| = gap for zero Dynes parameter");
  }
  const std::complex<double> z(energy, gd * gap);
  const std::complex<double> w = z / std::sqrt(z * z - gap * gap);
  return std::abs(w.real());
}

namespace {

// Integrand of the forward-tunneling integral at fixed energy gain E. The
// E = 0 case uses the analytic limit [f(e-E) - f(e)]/[1 - exp(-E/kT)] ->
// kT (-df/de) = f(1-f).
struct RateIntegrand {
  double energy_gain;
  const JunctionParams& junction;
  double kT;

  double operator()(double eps) const {
    const double dos = dynes_dos(eps, junction);
    const double f_eps = fermi_occupation(eps, junction.normal_temperature);
    if (energy_gain == 0.0) {
      return dos * f_eps * (1.0 - f_eps);
    }
    const double f_shift = fermi_occupation(eps - energy_gain, junction.normal_temperature);
    const double denom = -std::expm1(-energy_gain / kT);
    return dos * (f_shift - f_eps) / denom;
  }
};

}  // namespace

double forward_tunneling_rate(double energy_gain, const JunctionParams& params) {
  params.validate();
  const double kT = kB * params.normal_temperature;
  const double gap = params.gap_energy;
  const double window = std::abs(energy_gain) + gap + 40.0 * kT;

  // The integrand has gap-edge peaks at +-Delta and kinks where the shifted
  // Fermi window meets them; seed the subdivision there.
  const double e_abs = std::abs(energy_gain);
  std::vector<double> breaks = {
      -gap - e_abs, -gap, -gap + e_abs, gap - e_abs, gap, gap + e_abs,
      0.0,          energy_gain,        -energy_gain};

  RateIntegrand integrand{energy_gain, params, kT};
  quadrature::Options opt;
  opt.relative_tolerance = 1e-9;
  auto res = quadrature::integrate([&](double eps) { return integrand(eps); }, -window, window,
                                   breaks, opt);
  if (!res.converged) {
    throw NumericalError("forward_tunneling_rate: quadrature did not converge",
                         res.value / (kTwoPi * kHbar), res.error_bound / (kTwoPi * kHbar));
  }
  double rate = res.value / (kTwoPi * kHbar);
  if (rate < 0) {
    // The exact integral is non-negative; tolerate only roundoff-level dips.
    if (-rate <= res.error_bound / (kTwoPi * kHbar) + 1e-300) return 0.0;
    throw NumericalError("forward_tunneling_rate: negative rate beyond error bound", rate,
                         res.error_bound / (kTwoPi * kHbar));
  }
  return rate;
}

double asymptotic_damping(const CircuitParams& circuit, const JunctionParams& junction) {
  circuit.validate();
  junction.validate();
  const double c_total =
      circuit.coupling_capacitance + circuit.junction_capacitance + circuit.stray_capacitance;
  if (!(c_total > 0)) throw std::domain_error("asymptotic_damping: zero total capacitance");
  const double ratio = circuit.coupling_capacitance / c_total;
  return 2.0 * ratio * ratio * circuit.resonator_impedance * circuit.resonator_frequency /
         junction.tunneling_resistance;
}

double tunneling_resistance_for_damping(const CircuitParams& circuit, double gamma_bar_target) {
  circuit.validate();
  if (!(gamma_bar_target > 0)) {
    throw std::domain_error("tunneling_resistance_for_damping: target must be > 0");
  }
  const double c_total =
      circuit.coupling_capacitance + circuit.junction_capacitance + circuit.stray_capacitance;
  const double ratio = circuit.coupling_capacitance / c_total;
  return 2.0 * ratio * ratio * circuit.resonator_impedance * circuit.resonator_frequency /
         gamma_bar_target;
}

namespace {

// F(tau eV + l hbar omega_r) for l, tau in {+1, -1}.
struct FourRates {
  double plus_up;     // tau=+1, l=+1
  double plus_down;   // tau=+1, l=-1
  double minus_up;    // tau=-1, l=+1
  double minus_down;  // tau=-1, l=-1
};

FourRates evaluate_four_rates(double bias_per_junction, const JunctionParams& junction,
                              double omega_r) {
  const double ev = constants::electron_charge * bias_per_junction;
  const double quantum = kHbar * omega_r;
  return {
      forward_tunneling_rate(ev + quantum, junction),
      forward_tunneling_rate(ev - quantum, junction),
      forward_tunneling_rate(-ev + quantum, junction),
      forward_tunneling_rate(-ev - quantum, junction),
  };
}

double damping_from(const FourRates& f, double gamma_bar, double omega_r) {
  const double sum = (f.plus_up + f.minus_up) - (f.plus_down + f.minus_down);
  return gamma_bar * std::numbers::pi / omega_r * sum;
}

double temperature_from(const FourRates& f, double omega_r) {
  const double up = f.plus_up + f.minus_up;      // photon absorption by electrons
  const double down = f.plus_down + f.minus_down;  // photon emission
  if (!(up > 0) || !(down > 0)) {
    throw std::domain_error("effective_temperature: vanishing tunneling rate sum");
  }
  const double ratio = up / down;
  if (!(ratio > 1.0)) {
    throw std::domain_error("effective_temperature: non-positive log argument");
  }
  return kHbar * omega_r / (kB * std::log(ratio));
}

}  // namespace

double damping_rate_exact(double bias_per_junction, double gamma_bar,
                          const JunctionParams& junction, double omega_r) {
  if (!(gamma_bar > 0)) throw std::domain_error("damping_rate_exact: gamma_bar must be > 0");
  const FourRates f = evaluate_four_rates(bias_per_junction, junction, omega_r);
  return damping_from(f, gamma_bar, omega_r);
}

double effective_temperature(double bias_per_junction, const JunctionParams& junction,
                             double omega_r) {
  const FourRates f = evaluate_four_rates(bias_per_junction, junction, omega_r);
  return temperature_from(f, omega_r);
}

double photon_number_from_temperature(double temperature, double omega_r) {
  if (!(temperature > 0)) {
    throw std::domain_error("photon_number_from_temperature: temperature must be > 0");
  }
  return 1.0 / std::expm1(kHbar * omega_r / (kB * temperature));
}

TunnelingEnvironment tunneling_environment(double bias_per_junction, double gamma_bar,
                                           const JunctionParams& junction, double omega_r) {
  if (!(gamma_bar > 0)) throw std::domain_error("tunneling_environment: gamma_bar must be > 0");
  const FourRates f = evaluate_four_rates(bias_per_junction, junction, omega_r);
  TunnelingEnvironment env;
  env.damping_rate = damping_from(f, gamma_bar, omega_r);
  env.effective_temperature = temperature_from(f, omega_r);
  env.photon_number = photon_number_from_temperature(env.effective_temperature, omega_r);
  return env;
}

double damping_rate_highbias(double bias_per_junction, double gap_energy, double gamma_bar) {
  const double ev = constants::electron_charge * bias_per_junction;
  if (ev == 0.0) throw std::domain_error("damping_rate_highbias: V = 0");
  const double x = gap_energy / ev;
  return gamma_bar * (1.0 + 0.5 * x * x);
}

double photon_number_highbias(double bias_per_junction, double gap_energy, double omega_r) {
  const double ev = constants::electron_charge * bias_per_junction;
  if (ev == 0.0) throw std::domain_error("photon_number_highbias: V = 0");
  const double quantum = kHbar * omega_r;
  return ev / (2.0 * quantum) - 0.5 - gap_energy * gap_energy / (2.0 * quantum * ev);
}

}  // namespace niscal::tunneling
