#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "niscal/gain.hpp"
#include "niscal/thermal.hpp"

namespace niscal::montecarlo {

struct MonteCarloConfig {
  thermal::SystemModel model;
  double noise_sigma = 2.5e-12;    // W
  std::vector<double> bias_grid;   // full bias V_b, strictly increasing
  int repetitions = 100;
  std::uint64_t seed = 1;
  double window_lower = 0.0;           // V_b lower edge of every fit window
  std::vector<double> upper_sweep;     // V_b upper edges to scan

  void validate() const;
};

// Exact theoretical output-power curve on the bias grid (no noise). The
// tunneling environment is evaluated through the exact rate integrals, not
// the high-bias closed form.
std::vector<double> exact_output_curve(const thermal::SystemModel& model,
                                       const std::vector<double>& bias_grid);

// Exact curve plus i.i.d. Gaussian noise; bit-deterministic given
// (seed, replicate_index).
gain::PowerTrace synthesize_power_data(const MonteCarloConfig& config, int replicate_index);

// Expected leading coefficient a_exp = G (e/2) gamma_bar gamma_tr / sum.
double expected_coefficient(const thermal::SystemModel& model);

struct RangeStudyRow {
  double upper_bound = 0.0;          // V_b
  double mean_rel_error = 0.0;       // mean |a - a_exp| / a_exp
  double median_rel_error = 0.0;
  double mean_reported_sigma = 0.0;  // mean fit 1-sigma / a_exp
  double spread = 0.0;               // std of rel errors across replicates
  int n_failed = 0;
};

struct RangeStudyResult {
  std::vector<RangeStudyRow> rows;
  double expected_a = 0.0;
  std::uint64_t seed = 0;
  std::string generator;
};

// Fitting-range study: for every upper bound, fit the power curve to each
// replicate over [window_lower, upper] and aggregate the error statistics.
// The same `repetitions` synthetic data sets are reused across upper bounds.
RangeStudyResult range_sweep_study(const MonteCarloConfig& config);

}  // namespace niscal::montecarlo
