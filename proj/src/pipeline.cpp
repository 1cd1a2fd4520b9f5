#include "niscal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "niscal/csv.hpp"
#include "niscal/errors.hpp"
#include "niscal/rng.hpp"

namespace niscal::pipeline {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "niscal 0.1.0";

[[noreturn]] void config_error(const std::string& message) {
  throw InputError("config: " + message);
}

void check_keys(const Json& section, const std::string& name,
                const std::vector<std::string>& allowed) {
  if (!section.is_object()) config_error("section '" + name + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in section '" + name + "'");
    }
  }
}

double get_number(const Json& section, const std::string& key, double fallback) {
  if (!section.contains(key)) return fallback;
  if (!section[key].is_number()) config_error("'" + key + "' must be a number");
  return section[key].get<double>();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

thermal::SystemModel RunConfig::system_model() const {
  thermal::SystemModel model;
  model.junction = junction;
  model.circuit = circuit;
  const double omega_r = circuit.resonator_frequency;
  const double n_bath = tunneling::photon_number_from_temperature(bath_temperature, omega_r);
  model.transmission_line = {thermal::ReservoirLabel::transmission_line, gamma_tr, n_bath};
  model.excess = {thermal::ReservoirLabel::excess, gamma_x, n_bath};
  model.gain_linear = std::pow(10.0, gain_dB / 10.0);
  model.noise_power =
      model.gain_linear * constants::boltzmann * bandwidth_Hz() * noise_temperature_K;
  model.validate();
  return model;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    config_error(std::string("JSON parse failure: ") + e.what());
  }
  check_keys(doc, "(root)",
             {"junction", "circuit", "reservoirs", "chain", "fit", "synthesis", "montecarlo",
              "inputs", "seed", "output_dir"});

  RunConfig cfg;

  if (doc.contains("junction")) {
    const auto& j = doc["junction"];
    check_keys(j, "junction",
               {"gap_energy_ueV", "dynes_parameter", "tunneling_resistance_kohm",
                "normal_temperature_mK"});
    cfg.junction.gap_energy =
        units::ueV_to_joule(get_number(j, "gap_energy_ueV", 200.0));
    cfg.junction.dynes_parameter = get_number(j, "dynes_parameter", 1e-4);
    cfg.junction.tunneling_resistance =
        get_number(j, "tunneling_resistance_kohm", 12.0) * 1e3;
    cfg.junction.normal_temperature = get_number(j, "normal_temperature_mK", 100.0) * 1e-3;
  }

  double target_damping_MHz = 17.39;
  bool explicit_target = false;
  if (doc.contains("circuit")) {
    const auto& c = doc["circuit"];
    check_keys(c, "circuit",
               {"coupling_capacitance_fF", "junction_capacitance_fF", "stray_capacitance_fF",
                "resonator_impedance_ohm", "resonator_frequency_GHz", "line_impedance_ohm",
                "target_asymptotic_damping_MHz"});
    cfg.circuit.coupling_capacitance = get_number(c, "coupling_capacitance_fF", 800.0) * 1e-15;
    cfg.circuit.junction_capacitance = get_number(c, "junction_capacitance_fF", 80.0) * 1e-15;
    cfg.circuit.stray_capacitance = get_number(c, "stray_capacitance_fF", 120.0) * 1e-15;
    cfg.circuit.resonator_impedance = get_number(c, "resonator_impedance_ohm", 35.0);
    cfg.circuit.resonator_frequency = units::ghz_to_rad(get_number(c, "resonator_frequency_GHz", 4.67));
    cfg.circuit.line_impedance = get_number(c, "line_impedance_ohm", 50.0);
    if (c.contains("target_asymptotic_damping_MHz")) {
      explicit_target = true;
      target_damping_MHz = get_number(c, "target_asymptotic_damping_MHz", 17.39);
    }
  }
  const bool explicit_rt =
      doc.contains("junction") && doc["junction"].contains("tunneling_resistance_kohm");
  if (explicit_target && explicit_rt) {
    config_error("give either junction.tunneling_resistance_kohm or "
                 "circuit.target_asymptotic_damping_MHz, not both");
  }
  if (!explicit_rt) {
    // R_T only enters the model through gamma_bar_T; solve it so the circuit
    // realizes the requested (or default) asymptotic damping rate.
    cfg.junction.tunneling_resistance = tunneling::tunneling_resistance_for_damping(
        cfg.circuit, units::mhz_to_rad(target_damping_MHz));
  }

  if (doc.contains("reservoirs")) {
    const auto& r = doc["reservoirs"];
    check_keys(r, "reservoirs", {"gamma_tr_MHz", "gamma_x_MHz", "bath_temperature_mK"});
    cfg.gamma_tr = units::mhz_to_rad(get_number(r, "gamma_tr_MHz", 1.78));
    cfg.gamma_x = units::mhz_to_rad(get_number(r, "gamma_x_MHz", 0.46));
    cfg.bath_temperature = get_number(r, "bath_temperature_mK", 10.0) * 1e-3;
  }

  if (doc.contains("chain")) {
    const auto& ch = doc["chain"];
    check_keys(ch, "chain", {"gain_dB", "noise_temperature_K", "band_lo_GHz", "band_hi_GHz"});
    cfg.gain_dB = get_number(ch, "gain_dB", 51.84);
    cfg.noise_temperature_K = get_number(ch, "noise_temperature_K", 11.0);
    cfg.band_lo_Hz = get_number(ch, "band_lo_GHz", 4.60) * 1e9;
    cfg.band_hi_Hz = get_number(ch, "band_hi_GHz", 4.75) * 1e9;
  }

  if (doc.contains("fit")) {
    const auto& f = doc["fit"];
    check_keys(f, "fit", {"window_lower_2Delta", "window_upper_2Delta", "share_fano"});
    cfg.fit.window_lower_2delta = get_number(f, "window_lower_2Delta", 1.07);
    cfg.fit.window_upper_2delta = get_number(f, "window_upper_2Delta", 8.83);
    if (f.contains("share_fano")) {
      if (!f["share_fano"].is_boolean()) config_error("'share_fano' must be a boolean");
      cfg.fit.share_fano = f["share_fano"].get<bool>();
    }
  }

  if (doc.contains("synthesis")) {
    const auto& s = doc["synthesis"];
    check_keys(s, "synthesis",
               {"reflection_bias_2Delta", "frequency_span_MHz", "frequency_points",
                "reflection_noise_sigma", "power_bias_max_2Delta", "power_bias_spacing_2Delta",
                "power_noise_sigma_pW", "fano_re", "fano_im", "resonance_jitter_kHz"});
    if (s.contains("reflection_bias_2Delta")) {
      if (!s["reflection_bias_2Delta"].is_array()) {
        config_error("'reflection_bias_2Delta' must be an array");
      }
      cfg.synthesis.reflection_bias_2delta.clear();
      for (const auto& v : s["reflection_bias_2Delta"]) {
        cfg.synthesis.reflection_bias_2delta.push_back(v.get<double>());
      }
    }
    cfg.synthesis.frequency_span_MHz = get_number(s, "frequency_span_MHz", 60.0);
    cfg.synthesis.frequency_points =
        static_cast<int>(get_number(s, "frequency_points", 241));
    cfg.synthesis.reflection_noise_sigma = get_number(s, "reflection_noise_sigma", 0.005);
    cfg.synthesis.power_bias_max_2delta = get_number(s, "power_bias_max_2Delta", 10.0);
    cfg.synthesis.power_bias_spacing_2delta = get_number(s, "power_bias_spacing_2Delta", 0.5);
    cfg.synthesis.power_noise_sigma = get_number(s, "power_noise_sigma_pW", 2.5) * 1e-12;
    cfg.synthesis.fano = {get_number(s, "fano_re", 0.98), get_number(s, "fano_im", 0.05)};
    cfg.synthesis.resonance_jitter =
        constants::two_pi * get_number(s, "resonance_jitter_kHz", 0.0) * 1e3;
  }

  if (doc.contains("montecarlo")) {
    const auto& m = doc["montecarlo"];
    check_keys(m, "montecarlo",
               {"noise_sigma_pW", "repetitions", "bias_spacing_2Delta", "window_lower_2Delta",
                "upper_sweep_2Delta"});
    cfg.montecarlo.noise_sigma = get_number(m, "noise_sigma_pW", 2.5) * 1e-12;
    cfg.montecarlo.repetitions = static_cast<int>(get_number(m, "repetitions", 100));
    cfg.montecarlo.bias_spacing_2delta = get_number(m, "bias_spacing_2Delta", 0.5);
    cfg.montecarlo.window_lower_2delta = get_number(m, "window_lower_2Delta", 1.07);
    if (m.contains("upper_sweep_2Delta")) {
      if (!m["upper_sweep_2Delta"].is_array()) config_error("'upper_sweep_2Delta' must be an array");
      cfg.montecarlo.upper_sweep_2delta.clear();
      for (const auto& v : m["upper_sweep_2Delta"]) {
        cfg.montecarlo.upper_sweep_2delta.push_back(v.get<double>());
      }
    }
  }

  if (doc.contains("inputs")) {
    const auto& i = doc["inputs"];
    check_keys(i, "inputs", {"reflection_csv", "power_csv", "rates_json", "spectra"});
    if (i.contains("reflection_csv")) cfg.reflection_csv = i["reflection_csv"].get<std::string>();
    if (i.contains("power_csv")) cfg.power_csv = i["power_csv"].get<std::string>();
    if (i.contains("rates_json")) cfg.rates_json = i["rates_json"].get<std::string>();
    if (i.contains("spectra")) {
      if (!i["spectra"].is_array()) config_error("'spectra' must be an array");
      for (const auto& s : i["spectra"]) {
        check_keys(s, "spectra[]", {"bias_voltage_V", "csv"});
        if (!s.contains("bias_voltage_V") || !s.contains("csv")) {
          config_error("spectra entries need 'bias_voltage_V' and 'csv'");
        }
        cfg.spectra.push_back({s["bias_voltage_V"].get<double>(), s["csv"].get<std::string>()});
      }
    }
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      config_error("'seed' must be an integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();

  // Validate physics parameters before any computation starts.
  try {
    cfg.junction.validate();
    cfg.circuit.validate();
  } catch (const std::invalid_argument& e) {
    config_error(e.what());
  }
  if (!(cfg.gamma_tr > 0)) config_error("gamma_tr_MHz must be > 0");
  if (!(cfg.gamma_x >= 0)) config_error("gamma_x_MHz must be >= 0");
  if (!(cfg.bath_temperature > 0)) config_error("bath_temperature_mK must be > 0");
  if (!(cfg.band_lo_Hz < cfg.band_hi_Hz)) config_error("band_lo_GHz must be below band_hi_GHz");
  if (!(cfg.fit.window_lower_2delta < cfg.fit.window_upper_2delta)) {
    config_error("fit window is empty");
  }
  if (cfg.montecarlo.repetitions < 1) config_error("montecarlo repetitions must be >= 1");
  if (cfg.synthesis.frequency_points < 8) config_error("frequency_points must be >= 8");

  cfg.config_hash = [&] {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(doc.dump())));
    return std::string(buf);
  }();
  return cfg;
}

void apply_overrides(RunConfig& config, const Overrides& overrides) {
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.window_2delta) {
    config.fit.window_lower_2delta = overrides.window_2delta->first;
    config.fit.window_upper_2delta = overrides.window_2delta->second;
    if (!(config.fit.window_lower_2delta < config.fit.window_upper_2delta)) {
      config_error("--window is empty");
    }
  }
  if (overrides.band_GHz) {
    config.band_lo_Hz = overrides.band_GHz->first * 1e9;
    config.band_hi_Hz = overrides.band_GHz->second * 1e9;
    if (!(config.band_lo_Hz < config.band_hi_Hz)) config_error("--band is empty");
  }
}

namespace {

void ensure_output_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw InputError("cannot create output directory '" + config.output_dir + "'");
}

std::string out_path(const RunConfig& config, const std::string& name) {
  return (fs::path(config.output_dir) / name).string();
}

Json provenance(const RunConfig& config) {
  Json p;
  p["tool"] = kToolVersion;
  p["config_hash"] = config.config_hash;
  p["generator"] = rng::kGeneratorName;
  p["seed"] = config.seed;
  return p;
}

void write_json(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace

SynthesisOutput cmd_synthesize(const RunConfig& config) {
  ensure_output_dir(config);
  const thermal::SystemModel model = config.system_model();
  const double two_delta = config.two_delta_volts();
  const double omega_r = config.circuit.resonator_frequency;
  const double gamma_bar = model.asymptotic_damping();

  // Reflection traces: zero bias first, then the requested bias points.
  std::vector<double> biases{0.0};
  for (double x : config.synthesis.reflection_bias_2delta) biases.push_back(x * two_delta);
  std::sort(biases.begin(), biases.end());

  const double f_r = omega_r / constants::two_pi;
  const double span = config.synthesis.frequency_span_MHz * 1e6;
  const int n_freq = config.synthesis.frequency_points;
  std::vector<double> grid(n_freq);
  for (int i = 0; i < n_freq; ++i) {
    grid[i] = f_r - 0.5 * span + span * i / (n_freq - 1);
  }

  std::vector<reflection::ReflectionTrace> traces;
  for (size_t k = 0; k < biases.size(); ++k) {
    const double v = single_junction_voltage(biases[k]);
    reflection::ReflectionFitParams p;
    p.gamma_tr = config.gamma_tr;
    p.gamma_x = config.gamma_x;
    p.gamma_T = tunneling::damping_rate_exact(v, gamma_bar, config.junction, omega_r);
    p.fano = config.synthesis.fano;

    // Per-trace resonance offset standing in for the bias-dependent Lamb
    // shift; deterministic in (seed, trace index).
    rng::GaussianStream shift_stream(config.seed, 1000 + k);
    p.resonance = omega_r + (shift_stream.uniform() - 0.5) * 2.0 * config.synthesis.resonance_jitter;

    reflection::ReflectionTrace t;
    t.bias_full = biases[k];
    t.frequency_Hz = grid;
    t.values.resize(grid.size());
    rng::GaussianStream noise(config.seed, 2000 + k);
    for (size_t i = 0; i < grid.size(); ++i) {
      const auto clean = reflection::reflection_model(constants::two_pi * grid[i], p);
      t.values[i] = clean + config.synthesis.reflection_noise_sigma *
                                reflection::Complex(noise.normal(), noise.normal());
    }
    traces.push_back(std::move(t));
  }

  // Power sweep: below-gap points from zero, then the fit-window ladder.
  std::vector<double> power_bias{0.0};
  const double spacing = config.synthesis.power_bias_spacing_2delta;
  for (double x = spacing; x < config.fit.window_lower_2delta; x += spacing) {
    power_bias.push_back(x * two_delta);
  }
  for (double x = config.fit.window_lower_2delta; x <= config.synthesis.power_bias_max_2delta;
       x += spacing) {
    power_bias.push_back(x * two_delta);
  }

  gain::PowerTrace power;
  power.bias_full = power_bias;
  power.power.resize(power_bias.size());
  rng::GaussianStream noise(config.seed, 3000);
  for (size_t i = 0; i < power_bias.size(); ++i) {
    const double p_tr = thermal::transmitted_power_exact(power_bias[i], model);
    power.power[i] = thermal::output_power(p_tr, model) +
                     config.synthesis.power_noise_sigma * noise.normal();
  }

  SynthesisOutput out;
  out.reflection_csv = out_path(config, "reflection.csv");
  out.power_csv = out_path(config, "power.csv");
  csv::write_reflection_traces(out.reflection_csv, traces);
  csv::write_power_trace(out.power_csv, power);
  return out;
}

namespace {

Json rates_to_json(const reflection::RateEstimates& rates) {
  Json j;
  j["gamma_tr_rad_per_s"] = rates.gamma_tr;
  j["gamma_tr_sigma_rad_per_s"] = rates.gamma_tr_sigma;
  j["gamma_bar_T_rad_per_s"] = rates.gamma_bar_T;
  j["gamma_bar_T_sigma_rad_per_s"] = rates.gamma_bar_T_sigma;
  j["gamma_x_rad_per_s"] = rates.gamma_x;
  if (std::isfinite(rates.gamma_x_sigma)) {
    j["gamma_x_sigma_rad_per_s"] = rates.gamma_x_sigma;
  } else {
    j["gamma_x_sigma_rad_per_s"] = nullptr;
  }
  j["gamma_tr_MHz"] = units::rad_to_mhz(rates.gamma_tr);
  j["gamma_bar_T_MHz"] = units::rad_to_mhz(rates.gamma_bar_T);
  j["gamma_x_MHz"] = units::rad_to_mhz(rates.gamma_x);
  return j;
}

}  // namespace

reflection::RateEstimates read_rates_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open rates file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("rates file '" + path + "': " + e.what());
  }
  if (!doc.contains("rates")) throw InputError("rates file '" + path + "' missing 'rates'");
  const auto& r = doc["rates"];
  reflection::RateEstimates rates;
  rates.gamma_tr = r.at("gamma_tr_rad_per_s").get<double>();
  rates.gamma_tr_sigma = r.at("gamma_tr_sigma_rad_per_s").get<double>();
  rates.gamma_bar_T = r.at("gamma_bar_T_rad_per_s").get<double>();
  rates.gamma_bar_T_sigma = r.at("gamma_bar_T_sigma_rad_per_s").get<double>();
  rates.gamma_x = r.at("gamma_x_rad_per_s").get<double>();
  rates.gamma_x_sigma = r.at("gamma_x_sigma_rad_per_s").is_null()
                            ? std::numeric_limits<double>::quiet_NaN()
                            : r.at("gamma_x_sigma_rad_per_s").get<double>();
  return rates;
}

ReflectionPipelineResult cmd_fit_reflection(const RunConfig& config) {
  if (config.reflection_csv.empty()) {
    throw InputError("fit-reflection requires inputs.reflection_csv");
  }
  ensure_output_dir(config);
  const auto traces = csv::read_reflection_traces(config.reflection_csv);

  const reflection::ReflectionTrace* zero_bias = nullptr;
  for (const auto& t : traces) {
    if (t.bias_full == 0.0) zero_bias = &t;
  }
  if (!zero_bias) {
    throw InputError("fit-reflection: normalization requires V_b = 0 trace");
  }

  const double critical = 2.0 * config.junction.gap_energy / constants::electron_charge;
  std::vector<reflection::ReflectionTrace> normalized;
  for (const auto& t : traces) {
    if (t.bias_full == 0.0) continue;
    if (std::abs(t.bias_full) <= critical) {
      std::cout << "fit-reflection: skipping trace at V_b = " << t.bias_full
                << " V (below the critical coupling point)\n";
      continue;
    }
    normalized.push_back(reflection::normalize_trace(t, *zero_bias));
  }
  if (normalized.empty()) {
    throw InputError("fit-reflection: no traces above the critical coupling point");
  }

  // Shared-parameter starting point: nominal rates from the configuration,
  // zero-bias resonance from the raw zero-bias dip.
  reflection::NormalizedModelParams init;
  init.biased.gamma_tr = config.gamma_tr;
  init.biased.gamma_x = config.gamma_x;
  init.biased.gamma_T = units::mhz_to_rad(17.0);
  init.biased.fano = {1.0, 0.0};
  init.fano_zero = {1.0, 0.0};
  size_t zmin = 0;
  for (size_t i = 1; i < zero_bias->values.size(); ++i) {
    if (std::abs(zero_bias->values[i]) < std::abs(zero_bias->values[zmin])) zmin = i;
  }
  init.resonance_zero = constants::two_pi * zero_bias->frequency_Hz[zmin];
  init.biased.resonance = init.resonance_zero;

  reflection::JointFitOptions joint_options;
  joint_options.share_fano = config.fit.share_fano;
  const auto joint = reflection::fit_joint(normalized, init, joint_options);
  if (!joint.converged) {
    throw FitError("fit-reflection: joint fit did not converge");
  }

  ReflectionPipelineResult result;
  result.rms_residual = joint.rms_residual;
  result.converged = joint.converged;

  // Per-trace error circles on the joint solution, and independent per-trace
  // refits for the spread of gamma_x across the bias range.
  std::vector<std::pair<double, double>> gamma_points;
  std::vector<double> gamma_sigmas;
  std::vector<double> gamma_tr_widths;
  std::vector<double> gamma_x_refits;
  for (size_t k = 0; k < normalized.size(); ++k) {
    const auto& jt = joint.traces[k];
    reflection::NormalizedModelParams p;
    p.biased.gamma_tr = joint.gamma_tr;
    p.biased.gamma_x = joint.gamma_x;
    p.biased.gamma_T = jt.gamma_T;
    p.biased.fano = jt.fano;
    p.biased.resonance = jt.resonance;
    p.resonance_zero = joint.resonance_zero;
    p.fano_zero = joint.fano_zero;

    const auto intervals = reflection::error_circle_confidence(p, normalized[k]);
    TraceSummary summary;
    summary.bias_full = jt.bias_full;
    summary.gamma_T = jt.gamma_T;
    summary.gamma_T_sigma = intervals.at("gamma_T").half_width();
    summary.resonance = jt.resonance;
    summary.fano = jt.fano;
    summary.rms_residual = jt.rms_residual;
    gamma_tr_widths.push_back(intervals.at("gamma_tr").half_width());

    reflection::FitOptions refit_options;
    const auto refit = reflection::fit_normalized_trace(normalized[k], p, refit_options);
    summary.gamma_x_refit = refit.params.biased.gamma_x;
    if (refit.converged) gamma_x_refits.push_back(refit.params.biased.gamma_x);

    gamma_points.emplace_back(jt.bias_full, jt.gamma_T);
    gamma_sigmas.push_back(summary.gamma_T_sigma);
    result.traces.push_back(summary);
  }

  // gamma_bar_T from the high-bias damping law, weighted by the per-trace
  // error-circle widths when they are all positive.
  const bool weighted = std::all_of(gamma_sigmas.begin(), gamma_sigmas.end(),
                                    [](double s) { return s > 0; });
  const auto bar_fit = reflection::extract_asymptotic_damping(
      gamma_points, config.junction.gap_energy,
      weighted ? std::span<const double>(gamma_sigmas) : std::span<const double>());

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  };

  result.rates.gamma_tr = joint.gamma_tr;
  result.rates.gamma_tr_sigma = gamma_tr_widths.empty() ? 0.0 : median(gamma_tr_widths);
  result.rates.gamma_bar_T = bar_fit.gamma_bar;
  result.rates.gamma_bar_T_sigma = bar_fit.sigma;
  result.rates.gamma_x = joint.gamma_x;
  if (gamma_x_refits.size() >= 2) {
    double mean = 0.0;
    for (double g : gamma_x_refits) mean += g;
    mean /= static_cast<double>(gamma_x_refits.size());
    double var = 0.0;
    for (double g : gamma_x_refits) var += (g - mean) * (g - mean);
    result.rates.gamma_x_sigma =
        std::sqrt(var / (static_cast<double>(gamma_x_refits.size()) - 1.0));
  } else {
    result.rates.gamma_x_sigma = std::numeric_limits<double>::quiet_NaN();
  }

  // Residual CSVs, one per fitted trace.
  for (size_t k = 0; k < normalized.size(); ++k) {
    const auto& jt = joint.traces[k];
    reflection::NormalizedModelParams p;
    p.biased.gamma_tr = joint.gamma_tr;
    p.biased.gamma_x = joint.gamma_x;
    p.biased.gamma_T = jt.gamma_T;
    p.biased.fano = jt.fano;
    p.biased.resonance = jt.resonance;
    p.resonance_zero = joint.resonance_zero;
    p.fano_zero = joint.fano_zero;

    char name[64];
    std::snprintf(name, sizeof name, "reflection_residuals_%02zu.csv", k);
    std::ofstream res_out(out_path(config, name));
    res_out << "# bias_voltage_V, frequency_Hz, re_data, im_data, re_model, im_model\n";
    for (size_t i = 0; i < normalized[k].frequency_Hz.size(); ++i) {
      const auto model = reflection::normalized_reflection_model(
          constants::two_pi * normalized[k].frequency_Hz[i], p);
      res_out << csv::format_double(normalized[k].bias_full) << ','
              << csv::format_double(normalized[k].frequency_Hz[i]) << ','
              << csv::format_double(normalized[k].values[i].real()) << ','
              << csv::format_double(normalized[k].values[i].imag()) << ','
              << csv::format_double(model.real()) << ',' << csv::format_double(model.imag())
              << '\n';
    }
  }

  Json doc;
  doc["rates"] = rates_to_json(result.rates);
  Json per_trace = Json::array();
  for (const auto& t : result.traces) {
    Json j;
    j["bias_voltage_V"] = t.bias_full;
    j["gamma_T_rad_per_s"] = t.gamma_T;
    j["gamma_T_sigma_rad_per_s"] = t.gamma_T_sigma;
    j["gamma_T_MHz"] = units::rad_to_mhz(t.gamma_T);
    j["resonance_rad_per_s"] = t.resonance;
    j["fano_re"] = t.fano.real();
    j["fano_im"] = t.fano.imag();
    j["rms_residual"] = t.rms_residual;
    per_trace.push_back(j);
  }
  doc["per_trace"] = per_trace;
  doc["fit"] = {{"rms_residual", result.rms_residual},
                {"converged", result.converged},
                {"n_traces", result.traces.size()}};
  doc["provenance"] = provenance(config);
  result.rates_json_path = out_path(config, "rates.json");
  write_json(result.rates_json_path, doc);

  std::cout << "gamma_tr/2pi    = " << units::rad_to_mhz(result.rates.gamma_tr) << " +- "
            << units::rad_to_mhz(result.rates.gamma_tr_sigma) << " MHz\n"
            << "gamma_bar_T/2pi = " << units::rad_to_mhz(result.rates.gamma_bar_T) << " +- "
            << units::rad_to_mhz(result.rates.gamma_bar_T_sigma) << " MHz\n"
            << "gamma_x/2pi     = " << units::rad_to_mhz(result.rates.gamma_x) << " +- "
            << (std::isfinite(result.rates.gamma_x_sigma)
                    ? std::to_string(units::rad_to_mhz(result.rates.gamma_x_sigma))
                    : std::string("(not estimable)"))
            << " MHz\n";
  return result;
}

CalibrationReport cmd_calibrate(const RunConfig& config) {
  ensure_output_dir(config);

  gain::PowerTrace power;
  if (!config.power_csv.empty()) {
    power = csv::read_power_trace(config.power_csv);
  } else if (!config.spectra.empty()) {
    std::vector<std::pair<double, double>> points;
    for (const auto& s : config.spectra) {
      auto spectrum = csv::read_spectrum(s.csv);
      spectrum.band_lo_Hz = config.band_lo_Hz;
      spectrum.band_hi_Hz = config.band_hi_Hz;
      points.emplace_back(s.bias_full, gain::integrate_spectrum(spectrum));
    }
    std::sort(points.begin(), points.end());
    for (const auto& [bias, p] : points) {
      power.bias_full.push_back(bias);
      power.power.push_back(p);
    }
    power.validate();
  } else {
    throw InputError("calibrate requires inputs.power_csv or inputs.spectra");
  }

  if (config.rates_json.empty()) {
    throw InputError("calibrate requires inputs.rates_json (run fit-reflection first)");
  }
  const auto rates = read_rates_json(config.rates_json);

  const double two_delta = config.two_delta_volts();
  const std::pair<double, double> window{config.fit.window_lower_2delta * two_delta,
                                         config.fit.window_upper_2delta * two_delta};
  const auto fit = gain::fit_power_curve(power, window);
  const auto gain_est = gain::extract_gain(fit.a, rates);
  const double sigma_dB = gain::propagate_gain_uncertainty(fit.a, fit.sigma_a(), rates);

  // Zero-bias output power for the noise temperature.
  double p0 = std::numeric_limits<double>::quiet_NaN();
  for (size_t i = 0; i < power.bias_full.size(); ++i) {
    if (power.bias_full[i] == 0.0) p0 = power.power[i];
  }
  if (!std::isfinite(p0)) {
    throw InputError("calibrate: power trace has no V_b = 0 point for the noise temperature");
  }
  const double t_amp = gain::noise_temperature(p0, gain_est.linear, config.bandwidth_Hz());

  // The zero-bias transmitted power must be negligible for the noise
  // temperature formula; warn when the configured model says otherwise.
  CalibrationReport report;
  thermal::SystemModel model = config.system_model();
  const double gp0 = gain_est.linear * thermal::transmitted_power_exact(0.0, model);
  report.zero_bias_assumption_ok = std::abs(gp0) < 0.01 * std::abs(p0);
  if (!report.zero_bias_assumption_ok) {
    std::cout << "calibrate: warning: G*P_tr(0) = " << gp0
              << " W is not negligible against P_out(0) = " << p0 << " W\n";
  }

  report.fit = fit;
  report.rates = rates;
  report.gain_linear = gain_est.linear;
  report.gain_dB = gain_est.dB;
  report.gain_sigma_dB = sigma_dB;
  report.noise_temperature_K = t_amp;
  report.zero_bias_power_W = p0;

  // Plot data: measurement, the fitted curve inside the window, and the
  // exact-theory prediction rescaled by the fitted gain.
  model.gain_linear = gain_est.linear;
  model.noise_power = p0;
  std::ofstream plot(out_path(config, "power_fit.csv"));
  plot << "# bias_voltage_V, power_measured_W, power_fit_W, power_theory_W\n";
  for (size_t i = 0; i < power.bias_full.size(); ++i) {
    const double vb = power.bias_full[i];
    std::string fit_col = "nan";
    if (vb >= window.first && vb <= window.second) {
      const double v = single_junction_voltage(vb);
      fit_col = csv::format_double(fit.a * v + fit.b + fit.c / v);
    }
    const double theory =
        thermal::output_power(thermal::transmitted_power_exact(vb, model), model);
    plot << csv::format_double(vb) << ',' << csv::format_double(power.power[i]) << ','
         << fit_col << ',' << csv::format_double(theory) << '\n';
  }

  Json doc;
  doc["calibration"] = {
      {"a_W_per_V", fit.a},
      {"a_sigma_W_per_V", fit.sigma_a()},
      {"a_W_per_V_full_bias", 0.5 * fit.a},
      {"b_W", fit.b},
      {"c_W_V", fit.c},
      {"covariance_row_major",
       {fit.covariance(0, 0), fit.covariance(0, 1), fit.covariance(0, 2), fit.covariance(1, 0),
        fit.covariance(1, 1), fit.covariance(1, 2), fit.covariance(2, 0), fit.covariance(2, 1),
        fit.covariance(2, 2)}},
      {"gain_linear", report.gain_linear},
      {"gain_dB", report.gain_dB},
      {"gain_sigma_dB", report.gain_sigma_dB},
      {"noise_temperature_K", report.noise_temperature_K},
      {"zero_bias_power_W", report.zero_bias_power_W},
      {"bandwidth_Hz", config.bandwidth_Hz()},
      {"fit_window_V", {window.first, window.second}},
      {"n_points_used", fit.n_used},
      {"rms_residual_W", fit.rms_residual},
      {"zero_bias_assumption_ok", report.zero_bias_assumption_ok},
  };
  doc["rates"] = rates_to_json(rates);
  doc["provenance"] = provenance(config);
  report.report_json_path = out_path(config, "report.json");
  write_json(report.report_json_path, doc);

  std::cout << "G     = " << report.gain_dB << " +- " << report.gain_sigma_dB << " dB\n"
            << "T_amp = " << report.noise_temperature_K << " K\n";
  return report;
}

montecarlo::RangeStudyResult cmd_range_study(const RunConfig& config) {
  ensure_output_dir(config);
  const double two_delta = config.two_delta_volts();

  montecarlo::MonteCarloConfig mc;
  mc.model = config.system_model();
  mc.noise_sigma = config.montecarlo.noise_sigma;
  mc.repetitions = config.montecarlo.repetitions;
  mc.seed = config.seed;
  mc.window_lower = config.montecarlo.window_lower_2delta * two_delta;
  for (double u : config.montecarlo.upper_sweep_2delta) {
    mc.upper_sweep.push_back(u * two_delta);
  }
  const double upper_max =
      *std::max_element(mc.upper_sweep.begin(), mc.upper_sweep.end());
  for (double x = config.montecarlo.window_lower_2delta;
       x * two_delta <= upper_max + 1e-12; x += config.montecarlo.bias_spacing_2delta) {
    mc.bias_grid.push_back(x * two_delta);
  }

  const auto result = montecarlo::range_sweep_study(mc);
  csv::write_range_study(out_path(config, "range_study.csv"), result);

  Json meta;
  meta["expected_a_W_per_V"] = result.expected_a;
  meta["noise_sigma_W"] = mc.noise_sigma;
  meta["repetitions"] = mc.repetitions;
  meta["bias_spacing_V"] = config.montecarlo.bias_spacing_2delta * two_delta;
  meta["window_lower_V"] = mc.window_lower;
  meta["n_grid_points"] = mc.bias_grid.size();
  meta["provenance"] = provenance(config);
  write_json(out_path(config, "range_study_meta.json"), meta);

  for (const auto& row : result.rows) {
    std::cout << "upper " << row.upper_bound / two_delta << " *2Delta/e: mean|da|/a = "
              << row.mean_rel_error << ", mean sigma/a = " << row.mean_reported_sigma
              << ", failed " << row.n_failed << "\n";
  }
  return result;
}

}  // namespace niscal::pipeline
