#pragma once

// Flat `key = value` experiment configuration for paneitz-lab.
//
//   # reference fixture
//   n = 5
//   R = 20
//   grid_sizes = 64
//   grid_lengths = 2pi
//   A = 1
//   B = 1
//   mode = absorption
//   action = solve
//
// Lists are comma separated. Lengths accept a trailing `pi` (2pi, 0.5pi).
// Coefficients A and B are a number or `file:<path>` (binary field with its
// sidecar, or CSV for 1-D grids), relative to the config file's directory.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "paneitz/error.hpp"
#include "paneitz/problem.hpp"

namespace paneitz::cli {

/// Configuration error; line is 0 when the problem is a missing key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line)
      : Error(line > 0 ? "config line " + std::to_string(line) + ": " + what : "config: " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A coefficient given either as a constant or as a field file.
struct FieldSource {
  double constant = 0.0;
  std::string file;  ///< empty for constants

  bool is_constant() const { return file.empty(); }
};

inline const std::set<std::string>& known_actions() {
  static const std::set<std::string> a{"solve",           "flow",         "eigen",          "sobolev",
                                       "check-existence", "check-nonexistence", "lambda-star", "mountain-pass",
                                       "sweep"};
  return a;
}

inline const std::set<std::string>& sweepable_keys() {
  static const std::set<std::string> k{"A", "B", "p", "q", "R", "psi_amplitude"};
  return k;
}

struct ExperimentConfig {
  // geometry
  int n = 5;
  double R = 0.0;
  std::vector<std::size_t> grid_sizes{64};
  std::vector<double> grid_lengths{2.0 * std::numbers::pi};
  // psi: zero | mode | file
  std::string psi = "zero";
  double psi_amplitude = 0.0;
  std::vector<int> psi_wavevector;
  std::string psi_file;
  // problem
  FieldSource A{1.0, {}};
  FieldSource B{0.0, {}};
  double p = 3.0;
  double q = 2.0;
  Nonlinearity mode = Nonlinearity::absorption;
  std::string action;
  // monotone / continuation
  double residual_tolerance = 1e-8;
  double step_tolerance = 1e-10;
  int max_iterations = 100000;
  std::vector<double> continuation_schedule;  ///< empty: plain monotone solve
  // flow
  double tau = 0.01;
  double t_max = 100.0;
  std::string flow_start = "lower";  ///< lower | upper
  int flow_sample_every = 10;
  // mountain pass
  std::vector<double> mp_eps_schedule{1e-1, 1e-2, 1e-3, 1e-4};
  int path_nodes = 32;
  int max_sweeps = 400;
  double mp_residual_tolerance = 1e-6;
  bool require_cond = true;
  double second_solution_eps = 0.0;
  // lambda*
  double lambda_tolerance = 1e-3;
  int lambda_prescan = 0;
  // spectral
  int sobolev_starts = 4;
  int positivity_samples = 8;
  // sweep
  std::string sweep_key;
  std::vector<double> sweep_values;
  std::string sweep_action = "solve";
  // run
  std::string out = "paneitz-out";
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path base_dir = ".";
  /// The key = value pairs as written, for the manifest echo.
  std::map<std::string, std::string> echo;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& v, int line, const std::string& key) {
  std::string s = trim(v);
  double scale = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    scale = std::numbers::pi;
    s = trim(s.substr(0, s.size() - 2));
    if (s.empty()) return scale;
  }
  double x = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last || !std::isfinite(x))
    throw ConfigError("malformed number for " + key + ": '" + trim(v) + "'", line);
  return x * scale;
}

inline long long parse_int(const std::string& v, int line, const std::string& key) {
  const std::string s = trim(v);
  long long x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("malformed integer for " + key + ": '" + s + "'", line);
  return x;
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
  const std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("malformed boolean for " + key + ": '" + s + "'", line);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline std::vector<double> parse_reals(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(parse_real(s, line, key));
  if (out.empty()) throw ConfigError("empty list for " + key, line);
  return out;
}

inline FieldSource parse_source(const std::string& v, int line, const std::string& key) {
  const std::string s = trim(v);
  if (s.rfind("file:", 0) == 0) {
    FieldSource f;
    f.file = trim(s.substr(5));
    if (f.file.empty()) throw ConfigError("empty file name for " + key, line);
    return f;
  }
  return {parse_real(s, line, key), {}};
}

}  // namespace detail

/// Parses and validates; defaults apply to every key not given.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  ExperimentConfig c;
  c.base_dir = base_dir;
  std::map<std::string, int> seen;
  std::optional<double> sweep_from, sweep_to;
  std::optional<long long> sweep_count;
  std::string sweep_spacing = "linear";

  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + body + "'", line);
    const std::string key = trim(body.substr(0, eq));
    const std::string val = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line);
    if (val.empty()) throw ConfigError("missing value for " + key, line);
    if (seen.count(key)) throw ConfigError("duplicate key " + key + " (first on line " + std::to_string(seen[key]) + ")", line);
    seen[key] = line;
    c.echo[key] = val;

    if (key == "n") {
      const long long n = parse_int(val, line, key);
      if (n < 5) throw ConfigError("n must be >= 5 (got " + val + ")", line);
      c.n = static_cast<int>(n);
    } else if (key == "R") {
      c.R = parse_real(val, line, key);
    } else if (key == "grid_sizes") {
      c.grid_sizes.clear();
      for (const auto& s : split_list(val)) {
        const long long m = parse_int(s, line, key);
        if (m < 2 || m % 2) throw ConfigError("grid sizes must be even and >= 2", line);
        c.grid_sizes.push_back(static_cast<std::size_t>(m));
      }
    } else if (key == "grid_lengths") {
      c.grid_lengths = parse_reals(val, line, key);
      for (double L : c.grid_lengths)
        if (!(L > 0.0)) throw ConfigError("grid lengths must be positive", line);
    } else if (key == "psi") {
      if (val != "zero" && val != "mode" && val != "file") throw ConfigError("psi must be zero, mode or file", line);
      c.psi = val;
    } else if (key == "psi_amplitude") {
      c.psi_amplitude = parse_real(val, line, key);
    } else if (key == "psi_wavevector") {
      c.psi_wavevector.clear();
      for (const auto& s : split_list(val)) c.psi_wavevector.push_back(static_cast<int>(parse_int(s, line, key)));
    } else if (key == "psi_file") {
      c.psi_file = val;
    } else if (key == "A") {
      c.A = parse_source(val, line, key);
    } else if (key == "B") {
      c.B = parse_source(val, line, key);
    } else if (key == "p") {
      c.p = parse_real(val, line, key);
    } else if (key == "q") {
      c.q = parse_real(val, line, key);
    } else if (key == "mode") {
      if (val == "absorption") c.mode = Nonlinearity::absorption;
      else if (val == "source") c.mode = Nonlinearity::source;
      else throw ConfigError("mode must be absorption or source", line);
    } else if (key == "action") {
      if (!known_actions().count(val)) throw ConfigError("unknown action '" + val + "'", line);
      c.action = val;
    } else if (key == "residual_tolerance") {
      c.residual_tolerance = parse_real(val, line, key);
    } else if (key == "step_tolerance") {
      c.step_tolerance = parse_real(val, line, key);
    } else if (key == "max_iterations") {
      c.max_iterations = static_cast<int>(parse_int(val, line, key));
    } else if (key == "continuation_schedule") {
      c.continuation_schedule = parse_reals(val, line, key);
    } else if (key == "tau") {
      c.tau = parse_real(val, line, key);
    } else if (key == "t_max") {
      c.t_max = parse_real(val, line, key);
    } else if (key == "flow_start") {
      if (val != "lower" && val != "upper") throw ConfigError("flow_start must be lower or upper", line);
      c.flow_start = val;
    } else if (key == "flow_sample_every") {
      c.flow_sample_every = static_cast<int>(parse_int(val, line, key));
    } else if (key == "mp_eps_schedule") {
      c.mp_eps_schedule = parse_reals(val, line, key);
    } else if (key == "path_nodes") {
      c.path_nodes = static_cast<int>(parse_int(val, line, key));
    } else if (key == "max_sweeps") {
      c.max_sweeps = static_cast<int>(parse_int(val, line, key));
    } else if (key == "mp_residual_tolerance") {
      c.mp_residual_tolerance = parse_real(val, line, key);
    } else if (key == "require_cond") {
      c.require_cond = parse_bool(val, line, key);
    } else if (key == "second_solution_eps") {
      c.second_solution_eps = parse_real(val, line, key);
    } else if (key == "lambda_tolerance") {
      c.lambda_tolerance = parse_real(val, line, key);
    } else if (key == "lambda_prescan") {
      c.lambda_prescan = static_cast<int>(parse_int(val, line, key));
    } else if (key == "sobolev_starts") {
      c.sobolev_starts = static_cast<int>(parse_int(val, line, key));
    } else if (key == "positivity_samples") {
      c.positivity_samples = static_cast<int>(parse_int(val, line, key));
    } else if (key == "sweep_key") {
      if (!sweepable_keys().count(val)) throw ConfigError("sweep_key '" + val + "' is not sweepable", line);
      c.sweep_key = val;
    } else if (key == "sweep_values") {
      c.sweep_values = parse_reals(val, line, key);
    } else if (key == "sweep_from") {
      sweep_from = parse_real(val, line, key);
    } else if (key == "sweep_to") {
      sweep_to = parse_real(val, line, key);
    } else if (key == "sweep_count") {
      sweep_count = parse_int(val, line, key);
      if (*sweep_count < 1) throw ConfigError("sweep_count must be >= 1", line);
    } else if (key == "sweep_spacing") {
      if (val != "linear" && val != "log") throw ConfigError("sweep_spacing must be linear or log", line);
      sweep_spacing = val;
    } else if (key == "sweep_action") {
      if (!known_actions().count(val) || val == "sweep" || val == "lambda-star")
        throw ConfigError("sweep_action '" + val + "' cannot be swept", line);
      c.sweep_action = val;
    } else if (key == "out") {
      c.out = val;
    } else if (key == "seed") {
      const long long s = parse_int(val, line, key);
      if (s < 0) throw ConfigError("seed must be >= 0", line);
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "workers") {
      c.workers = static_cast<int>(parse_int(val, line, key));
      if (c.workers < 1) throw ConfigError("workers must be >= 1", line);
    } else {
      throw ConfigError("unknown key '" + key + "'", line);
    }
  }

  for (const char* req : {"n", "R", "action"})
    if (!seen.count(req)) throw ConfigError(std::string("missing required key ") + req, 0);
  if (c.grid_sizes.size() != c.grid_lengths.size() || c.grid_sizes.size() > 3)
    throw ConfigError("grid_sizes and grid_lengths must have the same length (1 to 3)",
                      seen.count("grid_lengths") ? seen["grid_lengths"] : seen.count("grid_sizes") ? seen["grid_sizes"] : 0);
  if (c.psi == "mode") {
    if (!seen.count("psi_amplitude")) throw ConfigError("psi = mode needs psi_amplitude", 0);
    if (c.psi_wavevector.size() != c.grid_sizes.size())
      throw ConfigError("psi = mode needs psi_wavevector with one entry per axis", seen.count("psi_wavevector") ? seen["psi_wavevector"] : 0);
  }
  if (c.psi == "file" && c.psi_file.empty()) throw ConfigError("psi = file needs psi_file", 0);
  if (c.action == "sweep") {
    if (c.sweep_key.empty()) throw ConfigError("action = sweep needs sweep_key", 0);
    if (c.sweep_values.empty()) {
      if (!sweep_from || !sweep_to || !sweep_count)
        throw ConfigError("action = sweep needs sweep_values (or sweep_from, sweep_to and sweep_count)", 0);
      const long long m = *sweep_count;
      for (long long i = 0; i < m; ++i) {
        const double w = m == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(m - 1);
        if (sweep_spacing == "log") {
          if (!(*sweep_from > 0.0) || !(*sweep_to > 0.0)) throw ConfigError("log sweep needs positive ends", seen["sweep_from"]);
          c.sweep_values.push_back(*sweep_from * std::pow(*sweep_to / *sweep_from, w));
        } else {
          c.sweep_values.push_back(*sweep_from + w * (*sweep_to - *sweep_from));
        }
      }
    }
    if ((c.sweep_key == "A" && !c.A.is_constant()) || (c.sweep_key == "B" && !c.B.is_constant()))
      throw ConfigError("cannot sweep a coefficient given by file", seen["sweep_key"]);
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string(), 0);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace paneitz::cli
