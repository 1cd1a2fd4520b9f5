#include "niscal/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "niscal/constants.hpp"
#include "niscal/errors.hpp"

namespace niscal::reflection {

namespace {
constexpr double kTwoPi = constants::two_pi;
}

void ReflectionTrace::validate() const {
  if (frequency_Hz.size() != values.size()) {
    throw std::invalid_argument("ReflectionTrace: frequency/value length mismatch");
  }
  if (frequency_Hz.empty()) throw std::invalid_argument("ReflectionTrace: empty trace");
  for (size_t i = 0; i + 1 < frequency_Hz.size(); ++i) {
    if (!(frequency_Hz[i] < frequency_Hz[i + 1])) {
      throw std::invalid_argument("ReflectionTrace: frequencies must be strictly increasing");
    }
  }
  for (const auto& v : values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw std::invalid_argument("ReflectionTrace: non-finite value");
    }
  }
}

Complex reflection_model(double omega_p, const ReflectionFitParams& p) {
  const double g_sum = p.gamma_T + p.gamma_tr + p.gamma_x;
  const double detuning = omega_p - p.resonance;
  const Complex denom(g_sum, -2.0 * detuning);
  if (denom == Complex(0.0, 0.0)) {
    throw std::domain_error("reflection_model: zero total damping at zero detuning");
  }
  const Complex numer = (2.0 - p.fano) * p.gamma_tr - p.fano * (p.gamma_T + p.gamma_x) +
                        Complex(0.0, 2.0) * p.fano * detuning;
  return numer / denom;
}

Complex normalized_reflection_model(double omega_p, const NormalizedModelParams& p) {
  ReflectionFitParams zero;
  zero.gamma_tr = p.biased.gamma_tr;
  zero.gamma_x = p.biased.gamma_x;
  zero.gamma_T = 0.0;  // gap-suppressed below the critical coupling point
  zero.fano = p.fano_zero;
  zero.resonance = p.resonance_zero;
  return reflection_model(omega_p, p.biased) / reflection_model(omega_p, zero);
}

ReflectionTrace normalize_trace(const ReflectionTrace& trace, const ReflectionTrace& zero_bias) {
  trace.validate();
  zero_bias.validate();
  if (trace.frequency_Hz.size() != zero_bias.frequency_Hz.size()) {
    throw std::invalid_argument("normalize_trace: frequency grids differ in length");
  }
  for (size_t i = 0; i < trace.frequency_Hz.size(); ++i) {
    if (trace.frequency_Hz[i] != zero_bias.frequency_Hz[i]) {
      throw std::invalid_argument("normalize_trace: frequency grids differ");
    }
  }
  ReflectionTrace out = trace;
  for (size_t i = 0; i < out.values.size(); ++i) {
    const Complex z = zero_bias.values[i];
    if (std::abs(z) < 1e-12) {
      throw NumericalError("normalize_trace: zero-bias trace vanishes at a grid point",
                           std::abs(z), 1e-12);
    }
    out.values[i] = trace.values[i] / z;
  }
  out.normalized = true;
  return out;
}

namespace {

// Parameter packing for the single-trace fit.
// Free-shared layout: [gamma_T, resonance, re r, im r, gamma_tr, gamma_x,
// resonance_zero, re r0, im r0]; frozen-shared keeps only the first four.
NormalizedModelParams unpack_single(const Eigen::VectorXd& x, const NormalizedModelParams& base,
                                    bool freeze_shared) {
  NormalizedModelParams p = base;
  p.biased.gamma_T = x[0];
  p.biased.resonance = x[1];
  p.biased.fano = Complex(x[2], x[3]);
  if (!freeze_shared) {
    p.biased.gamma_tr = x[4];
    p.biased.gamma_x = x[5];
    p.resonance_zero = x[6];
    p.fano_zero = Complex(x[7], x[8]);
  }
  return p;
}

void stack_residuals(const ReflectionTrace& trace, const NormalizedModelParams& p,
                     Eigen::VectorXd& r) {
  const size_t n = trace.frequency_Hz.size();
  for (size_t i = 0; i < n; ++i) {
    const Complex model = normalized_reflection_model(kTwoPi * trace.frequency_Hz[i], p);
    const Complex diff = model - trace.values[i];
    r[2 * i] = diff.real();
    r[2 * i + 1] = diff.imag();
  }
}

double trace_rms(const ReflectionTrace& trace, const NormalizedModelParams& p) {
  double ssr = 0.0;
  for (size_t i = 0; i < trace.frequency_Hz.size(); ++i) {
    const Complex model = normalized_reflection_model(kTwoPi * trace.frequency_Hz[i], p);
    ssr += std::norm(model - trace.values[i]);
  }
  return std::sqrt(ssr / static_cast<double>(trace.frequency_Hz.size()));
}

}  // namespace

SingleTraceFit fit_normalized_trace(const ReflectionTrace& trace,
                                    const NormalizedModelParams& init,
                                    const FitOptions& options) {
  trace.validate();
  if (!trace.normalized) {
    throw std::invalid_argument("fit_normalized_trace: trace is not normalized");
  }

  const int n_params = options.freeze_shared ? 4 : 9;
  Eigen::VectorXd x0(n_params), scales(n_params);
  const double rate_scale =
      std::max(init.biased.gamma_T + init.biased.gamma_tr + init.biased.gamma_x, 1e6);
  x0[0] = init.biased.gamma_T;
  x0[1] = init.biased.resonance;
  x0[2] = init.biased.fano.real();
  x0[3] = init.biased.fano.imag();
  scales[0] = rate_scale;
  scales[1] = rate_scale;  // resonance moves on the linewidth scale
  scales[2] = 1.0;
  scales[3] = 1.0;
  if (!options.freeze_shared) {
    x0[4] = init.biased.gamma_tr;
    x0[5] = init.biased.gamma_x;
    x0[6] = init.resonance_zero;
    x0[7] = init.fano_zero.real();
    x0[8] = init.fano_zero.imag();
    scales[4] = rate_scale;
    scales[5] = rate_scale;
    scales[6] = rate_scale;
    scales[7] = 1.0;
    scales[8] = 1.0;
  }

  auto residual_fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    r.resize(2 * static_cast<Eigen::Index>(trace.frequency_Hz.size()));
    stack_residuals(trace, unpack_single(x, init, options.freeze_shared), r);
  };

  const auto lm = levmar::fit(residual_fn, x0, scales, options.lm);

  SingleTraceFit out;
  out.params = unpack_single(lm.params, init, options.freeze_shared);
  out.rms_residual = trace_rms(trace, out.params);
  out.converged = lm.converged;
  out.iterations = lm.iterations;
  out.jacobian = lm.jacobian;
  return out;
}

namespace {

struct DipEstimate {
  double omega_min = 0.0;   // angular frequency of the |values| minimum
  double omega_max = 0.0;   // angular frequency of the |values| maximum
  double linewidth = 0.0;   // FWHM of the dip, rad/s
};

DipEstimate analyze_dip(const ReflectionTrace& trace) {
  const auto& f = trace.frequency_Hz;
  size_t imin = 0, imax = 0;
  for (size_t i = 1; i < f.size(); ++i) {
    if (std::abs(trace.values[i]) < std::abs(trace.values[imin])) imin = i;
    if (std::abs(trace.values[i]) > std::abs(trace.values[imax])) imax = i;
  }
  DipEstimate est;
  est.omega_min = kTwoPi * f[imin];
  est.omega_max = kTwoPi * f[imax];

  // Half-depth crossing of |Gamma|^2 on both sides of the dip; for the
  // Lorentzian-denominator model the full width equals the total damping.
  const double base = std::abs(trace.values.front()) * std::abs(trace.values.back()) > 0
                          ? 0.5 * (std::abs(trace.values.front()) + std::abs(trace.values.back()))
                          : 1.0;
  const double level2 = 0.5 * (std::norm(trace.values[imin]) + base * base);
  double lo = kTwoPi * f.front(), hi = kTwoPi * f.back();
  for (size_t i = imin; i-- > 0;) {
    if (std::norm(trace.values[i]) >= level2) {
      lo = kTwoPi * f[i];
      break;
    }
  }
  for (size_t i = imin; i < f.size(); ++i) {
    if (std::norm(trace.values[i]) >= level2) {
      hi = kTwoPi * f[i];
      break;
    }
  }
  est.linewidth = std::max(hi - lo, kTwoPi * (f[1] - f[0]));
  return est;
}

}  // namespace

NormalizedModelParams initial_guess(const ReflectionTrace& trace) {
  trace.validate();
  const DipEstimate dip = analyze_dip(trace);
  const double g_tot = dip.linewidth;

  NormalizedModelParams best;
  double best_ssr = std::numeric_limits<double>::infinity();
  // Coarse grid over the shared rates as fractions of the dip linewidth.
  for (int i = 0; i < 14; ++i) {
    const double ftr = 0.01 * std::pow(60.0, i / 13.0);  // 0.01 .. 0.6
    for (int j = 0; j < 10; ++j) {
      const double fx = 0.003 * std::pow(100.0, j / 9.0);  // 0.003 .. 0.3
      NormalizedModelParams cand;
      cand.biased.gamma_tr = ftr * g_tot;
      cand.biased.gamma_x = fx * g_tot;
      cand.biased.gamma_T = std::max(g_tot - cand.biased.gamma_tr - cand.biased.gamma_x,
                                     0.05 * g_tot);
      cand.biased.resonance = dip.omega_min;
      cand.biased.fano = Complex(1.0, 0.0);
      cand.resonance_zero = dip.omega_max;
      cand.fano_zero = Complex(1.0, 0.0);
      double ssr = 0.0;
      for (size_t k = 0; k < trace.frequency_Hz.size(); ++k) {
        ssr += std::norm(normalized_reflection_model(kTwoPi * trace.frequency_Hz[k], cand) -
                         trace.values[k]);
      }
      if (ssr < best_ssr) {
        best_ssr = ssr;
        best = cand;
      }
    }
  }
  return best;
}

namespace {

struct JointLayout {
  bool share_fano;
  size_t n_traces;

  int size() const {
    return 5 + (share_fano ? 2 : 0) + static_cast<int>(n_traces) * (share_fano ? 2 : 4);
  }
  int trace_offset(size_t k) const {
    return 5 + (share_fano ? 2 : 0) + static_cast<int>(k) * (share_fano ? 2 : 4);
  }

  NormalizedModelParams unpack(const Eigen::VectorXd& x, size_t k) const {
    NormalizedModelParams p;
    p.biased.gamma_tr = x[0];
    p.biased.gamma_x = x[1];
    p.resonance_zero = x[2];
    p.fano_zero = Complex(x[3], x[4]);
    const int off = trace_offset(k);
    p.biased.gamma_T = x[off];
    p.biased.resonance = x[off + 1];
    p.biased.fano = share_fano ? Complex(x[5], x[6]) : Complex(x[off + 2], x[off + 3]);
    return p;
  }
};

}  // namespace

JointFitResult fit_joint(std::span<const ReflectionTrace> traces,
                         const NormalizedModelParams& init, const JointFitOptions& options) {
  if (traces.empty()) throw std::invalid_argument("fit_joint: no traces");
  size_t total_points = 0;
  for (const auto& t : traces) {
    t.validate();
    if (!t.normalized) throw std::invalid_argument("fit_joint: unnormalized trace");
    total_points += t.frequency_Hz.size();
  }

  const JointLayout layout{options.share_fano, traces.size()};
  Eigen::VectorXd x0(layout.size()), scales(layout.size());
  const double rate_scale =
      std::max(init.biased.gamma_T + init.biased.gamma_tr + init.biased.gamma_x, 1e6);

  x0[0] = init.biased.gamma_tr;
  x0[1] = init.biased.gamma_x;
  x0[2] = init.resonance_zero;
  x0[3] = init.fano_zero.real();
  x0[4] = init.fano_zero.imag();
  scales[0] = scales[1] = scales[2] = rate_scale;
  scales[3] = scales[4] = 1.0;
  if (options.share_fano) {
    x0[5] = init.biased.fano.real();
    x0[6] = init.biased.fano.imag();
    scales[5] = scales[6] = 1.0;
  }
  for (size_t k = 0; k < traces.size(); ++k) {
    // Seed each trace from its own dip so strongly bias-dependent gamma_T
    // starts in the right neighborhood.
    const DipEstimate dip = analyze_dip(traces[k]);
    const int off = layout.trace_offset(k);
    x0[off] = std::max(dip.linewidth - init.biased.gamma_tr - init.biased.gamma_x,
                       0.05 * dip.linewidth);
    x0[off + 1] = dip.omega_min;
    scales[off] = rate_scale;
    scales[off + 1] = rate_scale;
    if (!options.share_fano) {
      x0[off + 2] = init.biased.fano.real();
      x0[off + 3] = init.biased.fano.imag();
      scales[off + 2] = scales[off + 3] = 1.0;
    }
  }

  auto residual_fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    r.resize(2 * static_cast<Eigen::Index>(total_points));
    Eigen::Index pos = 0;
    for (size_t k = 0; k < traces.size(); ++k) {
      const NormalizedModelParams p = layout.unpack(x, k);
      for (size_t i = 0; i < traces[k].frequency_Hz.size(); ++i) {
        const Complex model =
            normalized_reflection_model(kTwoPi * traces[k].frequency_Hz[i], p);
        const Complex diff = model - traces[k].values[i];
        r[pos++] = diff.real();
        r[pos++] = diff.imag();
      }
    }
  };

  const auto lm = levmar::fit(residual_fn, x0, scales, options.lm);

  JointFitResult out;
  out.gamma_tr = lm.params[0];
  out.gamma_x = lm.params[1];
  out.resonance_zero = lm.params[2];
  out.fano_zero = Complex(lm.params[3], lm.params[4]);
  out.converged = lm.converged;
  out.iterations = lm.iterations;
  double ssr = 0.0;
  for (size_t k = 0; k < traces.size(); ++k) {
    const NormalizedModelParams p = layout.unpack(lm.params, k);
    JointTraceResult tr;
    tr.bias_full = traces[k].bias_full;
    tr.gamma_T = p.biased.gamma_T;
    tr.resonance = p.biased.resonance;
    tr.fano = p.biased.fano;
    tr.rms_residual = trace_rms(traces[k], p);
    ssr += tr.rms_residual * tr.rms_residual * static_cast<double>(traces[k].frequency_Hz.size());
    out.traces.push_back(tr);
  }
  out.rms_residual = std::sqrt(ssr / static_cast<double>(total_points));
  return out;
}

namespace {

double get_param(const NormalizedModelParams& p, const std::string& name) {
  if (name == "gamma_T") return p.biased.gamma_T;
  if (name == "gamma_tr") return p.biased.gamma_tr;
  if (name == "gamma_x") return p.biased.gamma_x;
  if (name == "resonance") return p.biased.resonance;
  if (name == "fano_re") return p.biased.fano.real();
  if (name == "fano_im") return p.biased.fano.imag();
  throw std::invalid_argument("unknown parameter " + name);
}

void set_param(NormalizedModelParams& p, const std::string& name, double v) {
  if (name == "gamma_T") {
    p.biased.gamma_T = v;
  } else if (name == "gamma_tr") {
    p.biased.gamma_tr = v;
  } else if (name == "gamma_x") {
    p.biased.gamma_x = v;
  } else if (name == "resonance") {
    p.biased.resonance = v;
  } else if (name == "fano_re") {
    p.biased.fano = Complex(v, p.biased.fano.imag());
  } else if (name == "fano_im") {
    p.biased.fano = Complex(p.biased.fano.real(), v);
  } else {
    throw std::invalid_argument("unknown parameter " + name);
  }
}

bool is_rate(const std::string& name) { return name.rfind("gamma", 0) == 0; }

}  // namespace

std::map<std::string, ConfidenceInterval> error_circle_confidence(
    const NormalizedModelParams& fitted, const ReflectionTrace& trace) {
  trace.validate();
  const double radius = trace_rms(trace, fitted);
  const double omega_eval = fitted.biased.resonance;
  const Complex center = normalized_reflection_model(omega_eval, fitted);
  const double g_tot =
      fitted.biased.gamma_T + fitted.biased.gamma_tr + fitted.biased.gamma_x;

  const std::vector<std::string> names = {"gamma_T", "gamma_tr", "gamma_x",
                                          "resonance", "fano_re", "fano_im"};
  std::map<std::string, ConfidenceInterval> out;
  for (const auto& name : names) {
    const double p0 = get_param(fitted, name);
    // Characteristic scale for the outward march: rates and the resonance
    // move on the linewidth scale, Fano components on unity.
    const double scale = (name == "resonance") ? g_tot
                         : is_rate(name)       ? std::max(std::abs(p0), 1e-3 * g_tot)
                                               : std::max(std::abs(p0), 1e-2);

    ConfidenceInterval ci{p0, p0, true};
    if (radius == 0.0) {
      out[name] = ci;
      continue;
    }

    auto distance = [&](double value) {
      NormalizedModelParams p = fitted;
      set_param(p, name, value);
      return std::abs(normalized_reflection_model(omega_eval, p) - center);
    };

    for (double direction : {1.0, -1.0}) {
      double step = 1e-6 * scale;
      double inside = 0.0;
      bool exited = false;
      for (int i = 0; i < 80; ++i) {
        if (distance(p0 + direction * step) > radius) {
          exited = true;
          break;
        }
        inside = step;
        step *= 2.0;
        if (step > 1e6 * scale) break;
      }
      if (!exited) {
        ci.bounded = false;
        if (direction > 0) {
          ci.upper = p0 + step;
        } else {
          ci.lower = p0 - step;
        }
        continue;
      }
      // Bisect [inside, step] down to 1e-4 relative resolution.
      double lo = inside, hi = step;
      while (hi - lo > 1e-4 * std::max(std::abs(p0), scale)) {
        const double mid = 0.5 * (lo + hi);
        (distance(p0 + direction * mid) > radius ? hi : lo) = mid;
      }
      const double boundary = p0 + direction * 0.5 * (lo + hi);
      if (direction > 0) {
        ci.upper = boundary;
      } else {
        ci.lower = is_rate(name) ? std::max(boundary, 0.0) : boundary;
      }
    }
    out[name] = ci;
  }
  return out;
}

AsymptoticDampingFit extract_asymptotic_damping(
    std::span<const std::pair<double, double>> bias_and_gamma, double gap_energy,
    std::span<const double> sigmas) {
  if (bias_and_gamma.empty()) {
    throw std::domain_error("extract_asymptotic_damping: no input points");
  }
  if (!sigmas.empty() && sigmas.size() != bias_and_gamma.size()) {
    throw std::invalid_argument("extract_asymptotic_damping: sigma length mismatch");
  }

  double sum_gm = 0.0, sum_mm = 0.0;
  std::vector<double> design(bias_and_gamma.size());
  for (size_t i = 0; i < bias_and_gamma.size(); ++i) {
    const double v = single_junction_voltage(bias_and_gamma[i].first);
    const double ev = constants::electron_charge * v;
    if (ev == 0.0) {
      throw std::domain_error("extract_asymptotic_damping: zero-bias point in fit");
    }
    const double x = gap_energy / ev;
    design[i] = 1.0 + 0.5 * x * x;
    const double w = sigmas.empty() ? 1.0 : 1.0 / (sigmas[i] * sigmas[i]);
    sum_gm += w * bias_and_gamma[i].second * design[i];
    sum_mm += w * design[i] * design[i];
  }

  AsymptoticDampingFit out;
  out.n_points = static_cast<int>(bias_and_gamma.size());
  out.gamma_bar = sum_gm / sum_mm;
  if (!sigmas.empty()) {
    out.sigma = std::sqrt(1.0 / sum_mm);
  } else if (bias_and_gamma.size() >= 2) {
    double rss = 0.0;
    for (size_t i = 0; i < bias_and_gamma.size(); ++i) {
      const double r = bias_and_gamma[i].second - out.gamma_bar * design[i];
      rss += r * r;
    }
    out.sigma = std::sqrt(rss / (static_cast<double>(bias_and_gamma.size()) - 1.0) / sum_mm);
  } else {
    out.sigma = 0.0;
  }
  return out;
}

}  // namespace niscal::reflection
