#pragma once

#include <numbers>

namespace niscal::constants {

// CODATA 2018 exact/recommended values. Fixed by definition; nothing in the
// configuration layer may override them.
inline constexpr double reduced_planck = 1.054571817e-34;  // J s
inline constexpr double boltzmann = 1.380649e-23;          // J/K
inline constexpr double electron_charge = 1.602176634e-19; // C

inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace niscal::constants

namespace niscal::units {

// Conversions between the SI quantities used internally (J, rad/s, V, W)
// and the human-facing units of the configuration and report layers.
inline constexpr double ueV_to_joule(double ueV) {
  return ueV * 1e-6 * constants::electron_charge;
}
inline constexpr double joule_to_ueV(double joule) {
  return joule / (1e-6 * constants::electron_charge);
}
inline constexpr double mhz_to_rad(double mhz) { return constants::two_pi * mhz * 1e6; }
inline constexpr double rad_to_mhz(double rad) { return rad / (constants::two_pi * 1e6); }
inline constexpr double ghz_to_rad(double ghz) { return constants::two_pi * ghz * 1e9; }
inline constexpr double rad_to_ghz(double rad) { return rad / (constants::two_pi * 1e9); }

}  // namespace niscal::units
