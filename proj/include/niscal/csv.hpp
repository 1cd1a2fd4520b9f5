#pragma once

#include <string>
#include <vector>

#include "niscal/gain.hpp"
#include "niscal/montecarlo.hpp"
#include "niscal/reflection.hpp"

namespace niscal::csv {

// All CSV formats: comma separated, '#'-prefixed header comments, '.' decimal
// point regardless of locale, shortest round-trip float formatting.

// bias_voltage_V, frequency_Hz, re_gamma, im_gamma; one file may contain
// multiple bias blocks (rows grouped by bias value, frequencies increasing
// within each block).
std::vector<reflection::ReflectionTrace> read_reflection_traces(const std::string& path);
void write_reflection_traces(const std::string& path,
                             const std::vector<reflection::ReflectionTrace>& traces);

// bias_voltage_V, power_W[, sigma_W]
gain::PowerTrace read_power_trace(const std::string& path);
void write_power_trace(const std::string& path, const gain::PowerTrace& trace);

// frequency_Hz, psd_W_per_Hz (the band is configuration, not file content)
gain::SpectrumTrace read_spectrum(const std::string& path);
void write_spectrum(const std::string& path, const gain::SpectrumTrace& spectrum);

// upper_bound_V, mean_rel_error, mean_reported_sigma, n_failed
void write_range_study(const std::string& path, const montecarlo::RangeStudyResult& result);

// Shortest-round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace niscal::csv
