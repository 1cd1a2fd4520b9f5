#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "niscal/quadrature.hpp"
#include "niscal/tunneling.hpp"
#include "oracles.hpp"

using namespace niscal;
using namespace niscal::tunneling;

namespace {

JunctionParams default_junction() {
  JunctionParams p;
  p.gap_energy = units::ueV_to_joule(200.0);
  p.dynes_parameter = 1e-4;
  p.tunneling_resistance = 12e3;
  p.normal_temperature = 0.1;
  return p;
}

constexpr double kOmegaR = constants::two_pi * 4.67e9;
constexpr double kB = constants::boltzmann;

}  // namespace

TEST_CASE("fermi occupation basics") {
  CHECK(fermi_occupation(0.0, 0.05) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fermi_occupation(0.0, 300.0) == doctest::Approx(0.5).epsilon(1e-15));

  // particle-hole symmetry f(e) + f(-e) = 1
  for (double e : {1e-25, 3e-23, 5e-22}) {
    for (double T : {0.01, 0.1, 1.0}) {
      CHECK(fermi_occupation(e, T) + fermi_occupation(-e, T) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  // deep tail: f(50 kT) = 1/(exp(50)+1) ~ 1.93e-22
  const double T = 0.1;
  const double tail = fermi_occupation(50.0 * kB * T, T);
  CHECK(tail < 1e-20);
  CHECK(tail == doctest::Approx(1.928749847963918e-22).epsilon(1e-12));

  CHECK(fermi_occupation(1e-22, 0.2) < fermi_occupation(0.5e-22, 0.2));  // decreasing
  CHECK_THROWS_AS(fermi_occupation(1e-22, 0.0), std::domain_error);
  CHECK_THROWS_AS(fermi_occupation(1e-22, -1.0), std::domain_error);
}

TEST_CASE("dynes density of states") {
  auto p = default_junction();
  const double gap = p.gap_energy;

  SUBCASE("closed form above the gap at gamma_D = 0") {
    p.dynes_parameter = 0.0;
    CHECK(dynes_dos(2.0 * gap, p) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(dynes_dos(gap, p), std::domain_error);
    CHECK_THROWS_AS(dynes_dos(-gap, p), std::domain_error);
    CHECK(dynes_dos(0.5 * gap, p) == 0.0);  // inside the gap
  }

  SUBCASE("zero-energy value equals gamma_D/sqrt(1+gamma_D^2)") {
    const double v = dynes_dos(0.0, p);
    CHECK(v == doctest::Approx(1e-4 / std::sqrt(1.0 + 1e-8)).epsilon(1e-10));
    CHECK(v == doctest::Approx(1.0e-4).epsilon(1e-6));
  }

  SUBCASE("asymptotic normalization") {
    CHECK(dynes_dos(100.0 * gap, p) == doctest::Approx(1.0).epsilon(1e-3));
  }

  SUBCASE("even in energy") {
    for (double x : {0.1, 0.7, 0.999, 1.0, 1.001, 1.5, 4.0, 20.0}) {
      CHECK(dynes_dos(x * gap, p) == doctest::Approx(dynes_dos(-x * gap, p)).epsilon(1e-13));
    }
  }

  SUBCASE("DOS deficit integral converges with window size") {
    // integral of (n_S - 1) over [-W, W] shrinks as W grows
    std::vector<double> deficits;
    for (double w : {5.0, 10.0, 20.0, 40.0}) {
      auto res = quadrature::integrate([&](double e) { return dynes_dos(e, p) - 1.0; },
                                       -w * gap, w * gap,
                                       {-gap, 0.0, gap}, {});
      REQUIRE(res.converged);
      deficits.push_back(std::abs(res.value));
    }
    CHECK(deficits[1] < deficits[0]);
    CHECK(deficits[2] < deficits[1]);
    CHECK(deficits[3] < deficits[2]);
    CHECK(deficits[3] < 0.01 * gap);
  }
}

TEST_CASE("forward tunneling rate against the trapezoid oracle") {
  const auto p = default_junction();
  const double gap = p.gap_energy;
  for (double x : {0.5, 2.0, 10.0}) {
    const double adaptive = forward_tunneling_rate(x * gap, p);
    const double trapezoid = oracles::trapezoid_forward_rate(x * gap, p);
    CHECK(adaptive == doctest::Approx(trapezoid).epsilon(1e-6));
  }
}

TEST_CASE("detailed balance identity") {
  auto p = default_junction();
  const double gap = p.gap_energy;

  SUBCASE("spot check at 3 Delta, both sides evaluated independently") {
    const double kT = kB * p.normal_temperature;
    const double lhs = forward_tunneling_rate(-3.0 * gap, p);
    const double rhs = std::exp(-3.0 * gap / kT) * forward_tunneling_rate(3.0 * gap, p);
    CHECK(std::abs(lhs - rhs) / forward_tunneling_rate(3.0 * gap, p) < 1e-6);
  }

  SUBCASE("log grid of energies and temperatures") {
    for (double t_mk : {10.0, 100.0, 300.0}) {
      p.normal_temperature = t_mk * 1e-3;
      const double kT = kB * p.normal_temperature;
      for (int i = 0; i <= 12; ++i) {
        const double e = 0.01 * gap * std::pow(2000.0, i / 12.0);  // 0.01..20 Delta
        const double f_pos = forward_tunneling_rate(e, p);
        const double f_neg = forward_tunneling_rate(-e, p);
        const double boltz = std::exp(-e / kT);
        CHECK(std::abs(f_neg - boltz * f_pos) / f_pos < 1e-6);
      }
    }
  }
}

TEST_CASE("forward rate asymptotics") {
  const auto p = default_junction();
  const double gap = p.gap_energy;

  SUBCASE("Sommerfeld limit 2 pi hbar F(E)/E -> 1") {
    const double e = 50.0 * gap;
    const double f_adaptive = forward_tunneling_rate(e, p);
    CHECK(f_adaptive ==
          doctest::Approx(oracles::trapezoid_forward_rate(e, p)).epsilon(1e-6));
    const double ratio = constants::two_pi * constants::reduced_planck * f_adaptive / e;
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.01));
  }

  SUBCASE("gap suppression at low energy") {
    auto cold = p;
    cold.normal_temperature = 0.010;
    const double f_low = forward_tunneling_rate(constants::reduced_planck * kOmegaR, cold);
    const double f_high = forward_tunneling_rate(2.0 * gap, cold);
    CHECK(f_low == doctest::Approx(oracles::trapezoid_forward_rate(
                       constants::reduced_planck * kOmegaR, cold)).epsilon(1e-6));
    CHECK(f_low < 1e-3 * f_high);
  }

  SUBCASE("E = 0 analytic limit is the small-bias limit") {
    const double e_small = 1e-7 * gap;
    const double f0 = forward_tunneling_rate(0.0, p);
    const double f_eps = forward_tunneling_rate(e_small, p);
    CHECK(f0 == doctest::Approx(f_eps).epsilon(1e-4));
    CHECK(f0 >= 0.0);
  }
}

TEST_CASE("asymptotic damping rate") {
  CircuitParams circuit;
  JunctionParams junction = default_junction();

  SUBCASE("1/R_T scaling") {
    const double g1 = asymptotic_damping(circuit, junction);
    junction.tunneling_resistance *= 2.0;
    CHECK(asymptotic_damping(circuit, junction) == doctest::Approx(0.5 * g1).epsilon(1e-14));
  }

  SUBCASE("no parasitics limit") {
    circuit.junction_capacitance = 0.0;
    circuit.stray_capacitance = 0.0;
    const double expected = 2.0 * circuit.resonator_impedance * circuit.resonator_frequency /
                            junction.tunneling_resistance;
    CHECK(asymptotic_damping(circuit, junction) == doctest::Approx(expected).epsilon(1e-14));
  }

  SUBCASE("solving R_T reproduces the measured rate") {
    const double target = units::mhz_to_rad(17.39);
    junction.tunneling_resistance = tunneling_resistance_for_damping(circuit, target);
    CHECK(asymptotic_damping(circuit, junction) == doctest::Approx(target).epsilon(1e-12));
    CHECK(junction.tunneling_resistance > 1e3);  // sanity: kOhm scale
    CHECK(junction.tunneling_resistance < 1e6);
  }
}

TEST_CASE("exact damping rate") {
  const auto p = default_junction();
  const double gap = p.gap_energy;
  const double gamma_bar = units::mhz_to_rad(17.39);
  const double e = constants::electron_charge;

  SUBCASE("matches direct evaluation with trapezoid rates") {
    const double v = 3.0 * gap / e;
    const double got = damping_rate_exact(v, gamma_bar, p, kOmegaR);
    const double quantum = constants::reduced_planck * kOmegaR;
    const double ev = e * v;
    const double oracle =
        gamma_bar * std::numbers::pi / kOmegaR *
        (oracles::trapezoid_forward_rate(ev + quantum, p) -
         oracles::trapezoid_forward_rate(ev - quantum, p) +
         oracles::trapezoid_forward_rate(-ev + quantum, p) -
         oracles::trapezoid_forward_rate(-ev - quantum, p));
    CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
  }

  SUBCASE("zero-bias suppression at 10 mK") {
    auto cold = p;
    cold.normal_temperature = 0.010;
    CHECK(damping_rate_exact(0.0, gamma_bar, cold, kOmegaR) / gamma_bar < 1e-2);
  }

  SUBCASE("high-bias agreement at eV = 10 Delta") {
    const double v = 10.0 * gap / e;
    const double exact = damping_rate_exact(v, gamma_bar, p, kOmegaR);
    const double approx = damping_rate_highbias(v, gap, gamma_bar);
    CHECK(std::abs(exact - approx) / exact < 1e-3);
  }

  SUBCASE("even in bias") {
    for (double x : {0.7, 1.3, 4.0}) {
      const double v = x * gap / e;
      CHECK(damping_rate_exact(v, gamma_bar, p, kOmegaR) ==
            damping_rate_exact(-v, gamma_bar, p, kOmegaR));
    }
  }
}

TEST_CASE("effective temperature") {
  const auto p = default_junction();
  const double gap = p.gap_energy;
  const double e = constants::electron_charge;

  SUBCASE("equilibrium at zero bias") {
    CHECK(effective_temperature(0.0, p, kOmegaR) ==
          doctest::Approx(p.normal_temperature).epsilon(0.01));
  }

  SUBCASE("photon number matches the high-bias form at eV = 10 Delta") {
    const double v = 10.0 * gap / e;
    const double n_exact =
        photon_number_from_temperature(effective_temperature(v, p, kOmegaR), kOmegaR);
    const double n_approx = photon_number_highbias(v, gap, kOmegaR);
    CHECK(std::abs(n_exact - n_approx) / n_exact < 0.01);
  }

  SUBCASE("even in bias") {
    const double v = 2.5 * gap / e;
    CHECK(effective_temperature(v, p, kOmegaR) == effective_temperature(-v, p, kOmegaR));
  }
}

TEST_CASE("exact vs high-bias approximations converge") {
  const auto p = default_junction();
  const double gap = p.gap_energy;
  const double gamma_bar = units::mhz_to_rad(17.39);
  const double e = constants::electron_charge;

  double prev_gamma_dev = 1.0, prev_n_dev = 1.0;
  for (double x : {5.0, 7.0, 10.0, 20.0}) {
    const double v = x * gap / e;
    const double g_exact = damping_rate_exact(v, gamma_bar, p, kOmegaR);
    const double g_approx = damping_rate_highbias(v, gap, gamma_bar);
    const double g_dev = std::abs(g_exact - g_approx) / g_exact;

    const double n_exact =
        photon_number_from_temperature(effective_temperature(v, p, kOmegaR), kOmegaR);
    const double n_approx = photon_number_highbias(v, gap, kOmegaR);
    const double n_dev = std::abs(n_exact - n_approx) / n_exact;

    CHECK(g_dev < prev_gamma_dev);
    CHECK(n_dev < prev_n_dev);
    if (x == 10.0) {
      CHECK(g_dev < 0.01);
      CHECK(n_dev < 0.01);
    }
    prev_gamma_dev = g_dev;
    prev_n_dev = n_dev;
  }
}

TEST_CASE("photon number from temperature") {
  const double quantum = constants::reduced_planck * kOmegaR;

  CHECK(photon_number_from_temperature(quantum / (kB * std::log(2.0)), kOmegaR) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(photon_number_from_temperature(1e-6, kOmegaR) < 1e-30);  // T -> 0
  CHECK(photon_number_from_temperature(10.0 * quantum / kB, kOmegaR) ==
        doctest::Approx(9.50833194477505).epsilon(1e-12));
  CHECK_THROWS_AS(photon_number_from_temperature(0.0, kOmegaR), std::domain_error);

  // strictly increasing in temperature
  double prev = 0.0;
  for (double t = 0.01; t < 1.0; t += 0.1) {
    const double n = photon_number_from_temperature(t, kOmegaR);
    CHECK(n > prev);
    prev = n;
  }
}

TEST_CASE("high-bias closed forms") {
  const double gap = units::ueV_to_joule(200.0);
  const double e = constants::electron_charge;
  const double gamma_bar = units::mhz_to_rad(17.39);

  SUBCASE("damping approaches gamma_bar and hits algebraic points") {
    CHECK(damping_rate_highbias(1e6 * gap / e, gap, gamma_bar) ==
          doctest::Approx(gamma_bar).epsilon(1e-10));
    // eV = Delta: 1 + 1/2 exactly
    CHECK(damping_rate_highbias(gap / e, gap, gamma_bar) ==
          doctest::Approx(1.5 * gamma_bar).epsilon(1e-14));
    CHECK(damping_rate_highbias(9.0 * gap / e, gap, gamma_bar) ==
          doctest::Approx(gamma_bar * (1.0 + 1.0 / 162.0)).epsilon(1e-14));
    CHECK_THROWS_AS(damping_rate_highbias(0.0, gap, gamma_bar), std::domain_error);
  }

  SUBCASE("photon number slope and algebraic points") {
    const double quantum = constants::reduced_planck * kOmegaR;
    const double gap10 = 10.0 * quantum;  // Delta = 10 hbar omega_r
    // d N/d(eV) -> 1/(2 hbar omega_r): finite difference at large eV
    const double v1 = 1000.0 * quantum / e, v2 = 1001.0 * quantum / e;
    const double slope = (photon_number_highbias(v2, gap10, kOmegaR) -
                          photon_number_highbias(v1, gap10, kOmegaR)) /
                         (e * (v2 - v1));
    CHECK(slope == doctest::Approx(1.0 / (2.0 * quantum)).epsilon(1e-6));

    // eV = Delta = 10 hbar omega_r: 5 - 0.5 - 5 = -0.5 (outside validity, not clamped)
    CHECK(photon_number_highbias(gap10 / e, gap10, kOmegaR) ==
          doctest::Approx(-0.5).epsilon(1e-12));
    // eV = 10 Delta, Delta = 10 hbar omega_r: 50 - 0.5 - 0.5 = 49
    CHECK(photon_number_highbias(10.0 * gap10 / e, gap10, kOmegaR) ==
          doctest::Approx(49.0).epsilon(1e-12));
    CHECK_THROWS_AS(photon_number_highbias(0.0, gap10, kOmegaR), std::domain_error);
  }
}

TEST_CASE("tunneling environment bundles the pieces consistently") {
  const auto p = default_junction();
  const double gamma_bar = units::mhz_to_rad(17.39);
  const double v = 4.0 * p.gap_energy / constants::electron_charge;
  const auto env = tunneling_environment(v, gamma_bar, p, kOmegaR);
  CHECK(env.damping_rate == doctest::Approx(damping_rate_exact(v, gamma_bar, p, kOmegaR)));
  CHECK(env.effective_temperature == doctest::Approx(effective_temperature(v, p, kOmegaR)));
  CHECK(env.photon_number ==
        doctest::Approx(photon_number_from_temperature(env.effective_temperature, kOmegaR)));
}
