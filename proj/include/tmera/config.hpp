#pragma once

// Run configuration for the benchmark driver, read from `key = value` lines.
// Blank lines and lines starting with '#' are ignored; unknown or repeated
// keys are errors.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "tmera/circuit.hpp"
#include "tmera/errors.hpp"
#include "tmera/optimize.hpp"
#include "tmera/thermal.hpp"

namespace tmera {

struct RunConfig {
  std::size_t length = 64;  // key L
  std::size_t depth = 3;    // key D
  // Physical temperatures of H. The defaults span reduced temperatures
  // [1/L, 8] (see reduced_temperature).
  double t_min = 0.0;  // 0 means 2 / L
  double t_max = 16.0;
  std::size_t t_points = 25;
  std::size_t ground_max_evals = 4000;
  std::size_t ground_restarts = 8;
  std::size_t schedule_max_evals = 2000;
  std::uint64_t seed = 12345;
  std::string output_dir = "tmera_out";
  ScheduleForm schedule_mode = ScheduleForm::Free;
  SeedConvention seed_state = SeedConvention::ExactCoarse;
  bool emit_plots = false;
  std::string angles_file;  // empty: optimize the ground circuit

  double lowest_temperature() const { return t_min > 0.0 ? t_min : 2.0 / static_cast<double>(length); }

  void validate() const {
    if (DmeraCircuit::scales_for_length(length) == 0) throw ConfigError("L must be at least 4");
    if (depth == 0) throw ConfigError("D must be at least 1");
    if (!(lowest_temperature() > 0.0) || !(t_max >= lowest_temperature()) || !std::isfinite(t_max)) {
      throw ConfigError(fmt::format("bad temperature range [{}, {}]", lowest_temperature(), t_max));
    }
    if (t_points == 0) throw ConfigError("t_points must be positive");
    if (t_points == 1 && t_max != lowest_temperature()) throw ConfigError("t_points = 1 needs t_min = t_max");
    if (ground_max_evals == 0 || schedule_max_evals == 0) throw ConfigError("evaluation budgets must be positive");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }

  OptimizerConfig ground_optimizer() const {
    OptimizerConfig c;
    c.max_evals = ground_max_evals;
    c.restarts = ground_restarts;
    c.seed = seed;
    return c;
  }

  OptimizerConfig schedule_optimizer() const {
    OptimizerConfig c;
    c.max_evals = schedule_max_evals;
    c.restarts = 0;
    c.tolerance = 1e-12;
    c.seed = seed;
    return c;
  }
};

inline std::string to_string(SeedConvention c) {
  return c == SeedConvention::ExactCoarse ? "exact-coarse" : "mixed-block";
}

inline SeedConvention parse_seed_convention(const std::string& s) {
  if (s == "exact-coarse") return SeedConvention::ExactCoarse;
  if (s == "mixed-block") return SeedConvention::MixedBlock;
  throw InvalidInput(fmt::format("unknown seed state '{}'", s));
}

/// Log-spaced temperatures from the lowest temperature to t_max, ascending.
inline std::vector<double> temperature_grid(const RunConfig& c) {
  const double lo = c.lowest_temperature();
  if (c.t_points == 1) return {lo};
  std::vector<double> t(c.t_points);
  const double a = std::log(lo), b = std::log(c.t_max);
  for (std::size_t i = 0; i < c.t_points; ++i) {
    t[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(c.t_points - 1));
  }
  t.front() = lo;
  t.back() = c.t_max;
  return t;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T out{};
  is >> out;
  if (!is || !is.eof()) throw ConfigError(fmt::format("{}: cannot parse '{}'", key, value));
  if constexpr (std::is_unsigned_v<T>) {
    if (value.find('-') != std::string::npos) throw ConfigError(fmt::format("{}: must not be negative", key));
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, value));
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& is) {
  RunConfig c;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"L", [&](const std::string& v) { c.length = detail::parse_number<std::size_t>("L", v); }},
      {"D", [&](const std::string& v) { c.depth = detail::parse_number<std::size_t>("D", v); }},
      {"t_min", [&](const std::string& v) { c.t_min = detail::parse_number<double>("t_min", v); }},
      {"t_max", [&](const std::string& v) { c.t_max = detail::parse_number<double>("t_max", v); }},
      {"t_points", [&](const std::string& v) { c.t_points = detail::parse_number<std::size_t>("t_points", v); }},
      {"ground_max_evals",
       [&](const std::string& v) { c.ground_max_evals = detail::parse_number<std::size_t>("ground_max_evals", v); }},
      {"ground_restarts",
       [&](const std::string& v) { c.ground_restarts = detail::parse_number<std::size_t>("ground_restarts", v); }},
      {"schedule_max_evals",
       [&](const std::string& v) { c.schedule_max_evals = detail::parse_number<std::size_t>("schedule_max_evals", v); }},
      {"seed", [&](const std::string& v) { c.seed = detail::parse_number<std::uint64_t>("seed", v); }},
      {"output_dir", [&](const std::string& v) { c.output_dir = v; }},
      {"schedule_mode",
       [&](const std::string& v) {
         try {
           c.schedule_mode = parse_schedule_form(v);
         } catch (const InvalidInput& e) {
           throw ConfigError(e.what());
         }
       }},
      {"seed_state",
       [&](const std::string& v) {
         try {
           c.seed_state = parse_seed_convention(v);
         } catch (const InvalidInput& e) {
           throw ConfigError(e.what());
         }
       }},
      {"emit_plots", [&](const std::string& v) { c.emit_plots = detail::parse_bool("emit_plots", v); }},
      {"angles_file", [&](const std::string& v) { c.angles_file = v; }},
  };

  std::map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    if (seen[key]++) throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    it->second(value);
  }
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  return parse_run_config(in);
}

inline void write_run_config(std::ostream& os, const RunConfig& c) {
  os << fmt::format("L = {}\nD = {}\n", c.length, c.depth);
  os << fmt::format("t_min = {:.17g}\nt_max = {:.17g}\nt_points = {}\n", c.t_min, c.t_max, c.t_points);
  os << fmt::format("ground_max_evals = {}\nground_restarts = {}\nschedule_max_evals = {}\n", c.ground_max_evals,
                    c.ground_restarts, c.schedule_max_evals);
  os << fmt::format("seed = {}\noutput_dir = {}\nschedule_mode = {}\nseed_state = {}\nemit_plots = {}\n", c.seed,
                    c.output_dir, to_string(c.schedule_mode), to_string(c.seed_state), c.emit_plots);
  if (!c.angles_file.empty()) os << fmt::format("angles_file = {}\n", c.angles_file);
}

}  // namespace tmera
