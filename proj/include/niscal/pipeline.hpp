#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "niscal/gain.hpp"
#include "niscal/montecarlo.hpp"
#include "niscal/reflection.hpp"
#include "niscal/thermal.hpp"

namespace niscal::pipeline {

struct FitSettings {
  double window_lower_2delta = 1.07;  // fit window edges in units of 2*Delta/e
  double window_upper_2delta = 8.83;
  bool share_fano = false;
};

struct SynthesisSettings {
  std::vector<double> reflection_bias_2delta = {1.2, 1.6, 2.0, 3.0, 4.0,
                                                5.0, 6.0, 7.0, 8.0, 9.0};
  double frequency_span_MHz = 60.0;
  int frequency_points = 241;
  double reflection_noise_sigma = 0.005;  // absolute, per quadrature
  double power_bias_max_2delta = 10.0;
  double power_bias_spacing_2delta = 0.5;
  double power_noise_sigma = 2.5e-12;  // W
  std::complex<double> fano{0.98, 0.05};
  double resonance_jitter = 0.0;  // rad/s, max per-trace resonance offset
};

struct MonteCarloSettings {
  double noise_sigma = 2.5e-12;  // W
  int repetitions = 100;
  double bias_spacing_2delta = 0.5;
  double window_lower_2delta = 1.07;
  std::vector<double> upper_sweep_2delta = {3, 4, 5, 6, 7, 8, 9};
};

struct SpectrumInput {
  double bias_full = 0.0;
  std::string csv;
};

struct RunConfig {
  JunctionParams junction;
  CircuitParams circuit;
  double gamma_tr = units::mhz_to_rad(1.78);
  double gamma_x = units::mhz_to_rad(0.46);
  double bath_temperature = 0.010;  // K, sets N_tr and N_x
  double gain_dB = 51.84;
  double noise_temperature_K = 11.0;
  double band_lo_Hz = 4.60e9;
  double band_hi_Hz = 4.75e9;
  FitSettings fit;
  SynthesisSettings synthesis;
  MonteCarloSettings montecarlo;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  std::string reflection_csv;
  std::string power_csv;
  std::string rates_json;
  std::vector<SpectrumInput> spectra;

  std::string config_hash;  // FNV-1a of the canonical merged config

  double bandwidth_Hz() const { return band_hi_Hz - band_lo_Hz; }
  double two_delta_volts() const {
    return 2.0 * junction.gap_energy / constants::electron_charge;
  }
  thermal::SystemModel system_model() const;
};

// Parses and validates the JSON configuration. Unknown keys and missing
// units in key names are rejected up front. Throws InputError.
RunConfig load_run_config(const std::string& path);

// CLI-style overrides applied after loading.
struct Overrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::pair<double, double>> window_2delta;
  std::optional<std::pair<double, double>> band_GHz;
};
void apply_overrides(RunConfig& config, const Overrides& overrides);

// synthesize: writes reflection.csv and power.csv into output_dir.
struct SynthesisOutput {
  std::string reflection_csv;
  std::string power_csv;
};
SynthesisOutput cmd_synthesize(const RunConfig& config);

// fit-reflection: normalizes by the zero-bias trace, jointly fits all traces
// above the critical coupling point, extracts gamma_bar_T, and derives the
// error-circle uncertainties. Writes rates.json and per-trace residual CSVs.
struct TraceSummary {
  double bias_full = 0.0;
  double gamma_T = 0.0;
  double gamma_T_sigma = 0.0;
  double resonance = 0.0;
  std::complex<double> fano{1.0, 0.0};
  double rms_residual = 0.0;
  double gamma_x_refit = 0.0;
};
struct ReflectionPipelineResult {
  reflection::RateEstimates rates;
  std::vector<TraceSummary> traces;
  double rms_residual = 0.0;
  bool converged = false;
  std::string rates_json_path;
};
ReflectionPipelineResult cmd_fit_reflection(const RunConfig& config);

// calibrate: fits the power curve, extracts gain and noise temperature with
// propagated uncertainties. Writes report.json and power_fit.csv.
struct CalibrationReport {
  gain::PowerFit fit;
  reflection::RateEstimates rates;
  double gain_linear = 0.0;
  double gain_dB = 0.0;
  double gain_sigma_dB = 0.0;
  double noise_temperature_K = 0.0;
  double zero_bias_power_W = 0.0;
  bool zero_bias_assumption_ok = true;  // |G P_tr(0)| < 1% of P_out(0)
  std::string report_json_path;
};
CalibrationReport cmd_calibrate(const RunConfig& config);

// range-study: the fitting-range Monte Carlo. Writes range_study.csv and
// range_study_meta.json.
montecarlo::RangeStudyResult cmd_range_study(const RunConfig& config);

// Helpers shared with tests.
reflection::RateEstimates read_rates_json(const std::string& path);
std::uint64_t fnv1a64(const std::string& data);

}  // namespace niscal::pipeline
