#include "niscal/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "niscal/errors.hpp"

namespace niscal::csv {

namespace {

std::string strip(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& token, const std::string& path, int line) {
  const std::string t = strip(token);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw InputError(path + ":" + std::to_string(line) + ": bad number '" + token + "'");
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

// Parses a CSV file into rows of doubles, skipping '#' comments and blank
// lines; every row must have a column count in [min_cols, max_cols].
std::vector<std::vector<double>> read_rows(const std::string& path, size_t min_cols,
                                           size_t max_cols) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = strip(line);
    if (body.empty() || body[0] == '#') continue;
    const auto fields = split_fields(body);
    if (fields.size() < min_cols || fields.size() > max_cols) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(min_cols) + ".." + std::to_string(max_cols) +
                       " columns, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("'" + path + "' contains no data rows");
  return rows;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::vector<reflection::ReflectionTrace> read_reflection_traces(const std::string& path) {
  const auto rows = read_rows(path, 4, 4);
  std::vector<reflection::ReflectionTrace> traces;
  for (const auto& row : rows) {
    if (traces.empty() || traces.back().bias_full != row[0]) {
      traces.emplace_back();
      traces.back().bias_full = row[0];
    }
    auto& t = traces.back();
    t.frequency_Hz.push_back(row[1]);
    t.values.emplace_back(row[2], row[3]);
  }
  for (auto& t : traces) t.validate();
  return traces;
}

void write_reflection_traces(const std::string& path,
                             const std::vector<reflection::ReflectionTrace>& traces) {
  auto out = open_out(path);
  out << "# bias_voltage_V, frequency_Hz, re_gamma, im_gamma\n";
  for (const auto& t : traces) {
    for (size_t i = 0; i < t.frequency_Hz.size(); ++i) {
      out << format_double(t.bias_full) << ',' << format_double(t.frequency_Hz[i]) << ','
          << format_double(t.values[i].real()) << ',' << format_double(t.values[i].imag())
          << '\n';
    }
  }
}

gain::PowerTrace read_power_trace(const std::string& path) {
  const auto rows = read_rows(path, 2, 3);
  gain::PowerTrace trace;
  for (const auto& row : rows) {
    trace.bias_full.push_back(row[0]);
    trace.power.push_back(row[1]);
    if (row.size() == 3) trace.sigma.push_back(row[2]);
  }
  if (!trace.sigma.empty() && trace.sigma.size() != trace.power.size()) {
    throw InputError("'" + path + "': sigma column present on only some rows");
  }
  trace.validate();
  return trace;
}

void write_power_trace(const std::string& path, const gain::PowerTrace& trace) {
  auto out = open_out(path);
  out << (trace.sigma.empty() ? "# bias_voltage_V, power_W\n"
                              : "# bias_voltage_V, power_W, sigma_W\n");
  for (size_t i = 0; i < trace.bias_full.size(); ++i) {
    out << format_double(trace.bias_full[i]) << ',' << format_double(trace.power[i]);
    if (!trace.sigma.empty()) out << ',' << format_double(trace.sigma[i]);
    out << '\n';
  }
}

gain::SpectrumTrace read_spectrum(const std::string& path) {
  const auto rows = read_rows(path, 2, 2);
  gain::SpectrumTrace spectrum;
  for (const auto& row : rows) {
    spectrum.frequency_Hz.push_back(row[0]);
    spectrum.psd.push_back(row[1]);
  }
  return spectrum;
}

void write_spectrum(const std::string& path, const gain::SpectrumTrace& spectrum) {
  auto out = open_out(path);
  out << "# frequency_Hz, psd_W_per_Hz\n";
  for (size_t i = 0; i < spectrum.frequency_Hz.size(); ++i) {
    out << format_double(spectrum.frequency_Hz[i]) << ',' << format_double(spectrum.psd[i])
        << '\n';
  }
}

void write_range_study(const std::string& path, const montecarlo::RangeStudyResult& result) {
  auto out = open_out(path);
  out << "# upper_bound_V, mean_rel_error, mean_reported_sigma, n_failed\n";
  for (const auto& row : result.rows) {
    out << format_double(row.upper_bound) << ',' << format_double(row.mean_rel_error) << ','
        << format_double(row.mean_reported_sigma) << ',' << row.n_failed << '\n';
  }
}

}  // namespace niscal::csv
