#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "niscal/errors.hpp"
#include "niscal/pipeline.hpp"

namespace {

// Parses "lo:hi" into a pair of doubles.
std::pair<double, double> parse_range(const std::string& text, const std::string& flag) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw niscal::InputError(flag + " expects lo:hi, got '" + text + "'");
  }
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw niscal::InputError(flag + " expects numeric lo:hi, got '" + text + "'");
  }
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string window;
  std::string band;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Path to the JSON run configuration")
      ->required();
  cmd->add_option("--out", flags.out_dir, "Output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "Random seed (overrides config)");
  cmd->add_option("--window", flags.window,
                  "Power fit window lo:hi in units of 2*Delta/e (overrides config)");
  cmd->add_option("--band", flags.band, "Spectrum band lo:hi in GHz (overrides config)");
}

niscal::pipeline::RunConfig load(const CommonFlags& flags) {
  auto config = niscal::pipeline::load_run_config(flags.config_path);
  niscal::pipeline::Overrides overrides;
  if (!flags.out_dir.empty()) overrides.output_dir = flags.out_dir;
  if (flags.seed) overrides.seed = *flags.seed;
  if (!flags.window.empty()) overrides.window_2delta = parse_range(flags.window, "--window");
  if (!flags.band.empty()) overrides.band_GHz = parse_range(flags.band, "--band");
  niscal::pipeline::apply_overrides(config, overrides);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NIS-junction calibration of a cryogenic amplification chain"};
  app.require_subcommand(1);

  CommonFlags synth_flags, refl_flags, calib_flags, range_flags;
  auto* synth = app.add_subcommand(
      "synthesize", "Generate synthetic reflection and power CSVs from the configured model");
  add_common(synth, synth_flags);
  auto* refl = app.add_subcommand(
      "fit-reflection", "Fit normalized reflection traces and extract the damping rates");
  add_common(refl, refl_flags);
  auto* calib = app.add_subcommand(
      "calibrate", "Fit the power curve and report total gain and noise temperature");
  add_common(calib, calib_flags);
  auto* range = app.add_subcommand(
      "range-study", "Monte Carlo study of the fit error vs the upper bias bound");
  add_common(range, range_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto out = niscal::pipeline::cmd_synthesize(load(synth_flags));
      std::cout << "wrote " << out.reflection_csv << "\nwrote " << out.power_csv << "\n";
    } else if (refl->parsed()) {
      niscal::pipeline::cmd_fit_reflection(load(refl_flags));
    } else if (calib->parsed()) {
      niscal::pipeline::cmd_calibrate(load(calib_flags));
    } else if (range->parsed()) {
      niscal::pipeline::cmd_range_study(load(range_flags));
    }
  } catch (const niscal::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const niscal::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const niscal::FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
