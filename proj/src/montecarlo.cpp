#include "niscal/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "niscal/errors.hpp"
#include "niscal/rng.hpp"

namespace niscal::montecarlo {

void MonteCarloConfig::validate() const {
  model.validate();
  if (!(noise_sigma >= 0)) throw std::invalid_argument("MonteCarloConfig: noise_sigma must be >= 0");
  if (repetitions < 1) throw std::invalid_argument("MonteCarloConfig: repetitions must be >= 1");
  if (bias_grid.empty()) throw std::invalid_argument("MonteCarloConfig: empty bias grid");
  for (size_t i = 0; i + 1 < bias_grid.size(); ++i) {
    if (!(bias_grid[i] < bias_grid[i + 1])) {
      throw std::invalid_argument("MonteCarloConfig: bias grid must be strictly increasing");
    }
  }
  for (double u : upper_sweep) {
    if (!(u > window_lower)) {
      throw std::invalid_argument("MonteCarloConfig: upper bound not above window_lower");
    }
  }
}

std::vector<double> exact_output_curve(const thermal::SystemModel& model,
                                       const std::vector<double>& bias_grid) {
  std::vector<double> out(bias_grid.size());
  for (size_t i = 0; i < bias_grid.size(); ++i) {
    out[i] = thermal::output_power(thermal::transmitted_power_exact(bias_grid[i], model), model);
  }
  return out;
}

gain::PowerTrace synthesize_power_data(const MonteCarloConfig& config, int replicate_index) {
  config.validate();
  const std::vector<double> exact = exact_output_curve(config.model, config.bias_grid);

  gain::PowerTrace trace;
  trace.bias_full = config.bias_grid;
  trace.power.resize(exact.size());
  rng::GaussianStream noise(config.seed, static_cast<std::uint64_t>(replicate_index));
  for (size_t i = 0; i < exact.size(); ++i) {
    trace.power[i] = exact[i] + config.noise_sigma * noise.normal();
  }
  return trace;
}

double expected_coefficient(const thermal::SystemModel& model) {
  model.validate();
  const double g_bar = model.asymptotic_damping();
  const double g_tr = model.transmission_line.damping_rate;
  const double g_x = model.excess.damping_rate;
  return model.gain_linear * constants::electron_charge / 2.0 * g_bar * g_tr /
         (g_bar + g_tr + g_x);
}

RangeStudyResult range_sweep_study(const MonteCarloConfig& config) {
  config.validate();
  if (config.upper_sweep.empty()) {
    throw std::invalid_argument("range_sweep_study: empty upper_sweep");
  }

  const std::vector<double> exact = exact_output_curve(config.model, config.bias_grid);
  const double a_exp = expected_coefficient(config.model);

  // Generate every replicate once; each upper bound refits the same data.
  std::vector<gain::PowerTrace> replicates(config.repetitions);
  for (int rep = 0; rep < config.repetitions; ++rep) {
    auto& trace = replicates[rep];
    trace.bias_full = config.bias_grid;
    trace.power.resize(exact.size());
    rng::GaussianStream noise(config.seed, static_cast<std::uint64_t>(rep));
    for (size_t i = 0; i < exact.size(); ++i) {
      trace.power[i] = exact[i] + config.noise_sigma * noise.normal();
    }
  }

  RangeStudyResult result;
  result.expected_a = a_exp;
  result.seed = config.seed;
  result.generator = rng::kGeneratorName;

  for (double upper : config.upper_sweep) {
    RangeStudyRow row;
    row.upper_bound = upper;
    std::vector<double> rel_errors;
    std::vector<double> reported;
    for (const auto& trace : replicates) {
      try {
        const auto fit = gain::fit_power_curve(trace, {config.window_lower, upper});
        rel_errors.push_back(std::abs(fit.a - a_exp) / a_exp);
        reported.push_back(fit.sigma_a() / a_exp);
      } catch (const FitError&) {
        ++row.n_failed;
      }
    }
    if (!rel_errors.empty()) {
      double sum = 0.0;
      for (double r : rel_errors) sum += r;
      row.mean_rel_error = sum / static_cast<double>(rel_errors.size());
      double sum_sig = 0.0;
      for (double s : reported) sum_sig += s;
      row.mean_reported_sigma = sum_sig / static_cast<double>(reported.size());

      std::vector<double> sorted = rel_errors;
      std::sort(sorted.begin(), sorted.end());
      const size_t mid = sorted.size() / 2;
      row.median_rel_error = sorted.size() % 2 ? sorted[mid]
                                               : 0.5 * (sorted[mid - 1] + sorted[mid]);
      double var = 0.0;
      for (double r : rel_errors) var += (r - row.mean_rel_error) * (r - row.mean_rel_error);
      row.spread = rel_errors.size() > 1
                       ? std::sqrt(var / static_cast<double>(rel_errors.size() - 1))
                       : 0.0;
    }
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace niscal::montecarlo
