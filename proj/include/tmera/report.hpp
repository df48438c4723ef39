#pragma once

// Writers for benchmark outputs: CSV tables, JSON documents and small static
// SVG charts. CSV and JSON carry no wall-clock data except the JSON
// "timestamp" field, so reruns with the same config give identical CSV.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "tmera/bench.hpp"
#include "tmera/circuit.hpp"
#include "tmera/config.hpp"
#include "tmera/errors.hpp"

namespace tmera {

inline constexpr int kReportSchemaVersion = 1;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

inline nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Simple comma-separated tables

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) {
      throw InvalidInput(fmt::format("csv row has {} fields, header has {}", row.size(), header_.size()));
    }
    rows_.push_back(std::move(row));
  }

  std::size_t n_rows() const noexcept { return rows_.size(); }

  void write(std::ostream& os) const {
    write_row(os, header_);
    for (const auto& r : rows_) write_row(os, r);
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  static void write_row(std::ostream& os, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) os << ',';
      os << r[i];
    }
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// ---------------------------------------------------------------------------
// Sweep reports

inline const std::vector<std::string>& sweep_csv_header() {
  static const std::vector<std::string> h = {
      "temperature",          "reduced_temperature",    "schedule_form",
      "schedule_energies",    "converged",            "energy_per_site",
      "entropy_per_site",     "free_energy_per_site", "fidelity",
      "site_infidelity",      "exact_energy_per_site", "exact_entropy_per_site",
      "exact_free_energy_per_site"};
  return h;
}

inline std::string joined_energies(const SweepPoint& p, const SweepReport& r) {
  const auto e = p.schedule.expand(DmeraCircuit::scales_for_length(r.length));
  std::string out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) out += ';';
    out += format_number(e[i]);
  }
  return out;
}

inline CsvTable sweep_table(const SweepReport& r) {
  CsvTable t(sweep_csv_header());
  for (const SweepPoint& p : r.points) {
    t.add({format_number(p.temperature), format_number(reduced_temperature(p.temperature)),
           to_string(p.schedule.form), joined_energies(p, r), p.converged ? "true" : "false",
           format_number(p.energy_per_site), format_number(p.entropy_per_site), format_number(p.free_energy_per_site),
           format_number(p.fidelity), format_number(p.site_infidelity), format_number(p.exact_energy_per_site),
           format_number(p.exact_entropy_per_site), format_number(p.exact_free_energy_per_site)});
  }
  return t;
}

inline nlohmann::json sweep_json(const SweepReport& r) {
  nlohmann::json meta = {{"L", r.length},
                         {"D", r.depth},
                         {"seed", r.seed},
                         {"schedule_mode", to_string(r.schedule_mode)},
                         {"seed_state", to_string(r.seed_state)},
                         {"angles", r.angles},
                         {"ground_energy_per_site", json_number(r.ground_energy_per_site)},
                         {"exact_ground_energy_per_site", json_number(r.exact_ground_energy_per_site)},
                         {"timestamp", r.timestamp},
                         {"code_version", r.code_version}};
  nlohmann::json points = nlohmann::json::array();
  for (const SweepPoint& p : r.points) {
    const auto energies = p.schedule.expand(DmeraCircuit::scales_for_length(r.length));
    nlohmann::json e = nlohmann::json::array();
    for (double v : energies) e.push_back(json_number(v));
    points.push_back({{"temperature", p.temperature},
                      {"reduced_temperature", reduced_temperature(p.temperature)},
                      {"schedule_form", to_string(p.schedule.form)},
                      {"schedule_energies", e},
                      {"converged", p.converged},
                      {"energy_per_site", json_number(p.energy_per_site)},
                      {"entropy_per_site", json_number(p.entropy_per_site)},
                      {"free_energy_per_site", json_number(p.free_energy_per_site)},
                      {"fidelity", json_number(p.fidelity)},
                      {"site_infidelity", json_number(p.site_infidelity)},
                      {"exact_energy_per_site", json_number(p.exact_energy_per_site)},
                      {"exact_entropy_per_site", json_number(p.exact_entropy_per_site)},
                      {"exact_free_energy_per_site", json_number(p.exact_free_energy_per_site)},
                      {"note", p.note}});
  }
  return {{"schema_version", kReportSchemaVersion}, {"kind", "sweep"}, {"metadata", meta}, {"points", points}};
}

inline CsvTable curve_table(const CurveTable& c) {
  CsvTable t({"temperature", "reduced_temperature", "energy_per_site", "entropy_bits", "exact_energy_per_site",
              "exact_entropy_bits", "entropy_deficit_bits", "energy_deficit", "gibbs_gap_entropy_bits",
              "gibbs_gap_energy"});
  for (const CurveRow& r : c.rows) {
    t.add({format_number(r.temperature), format_number(reduced_temperature(r.temperature)),
           format_number(r.energy_per_site), format_number(r.entropy_bits), format_number(r.exact_energy_per_site),
           format_number(r.exact_entropy_bits), format_number(r.entropy_deficit_bits),
           format_number(r.energy_deficit), format_number(r.gibbs_gap_entropy_bits),
           format_number(r.gibbs_gap_energy)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// SVG line charts

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool points_only = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string render_svg(const PlotSpec& spec) {
  const double width = 640, height = 420, left = 70, right = 150, top = 40, bottom = 50;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!std::isfinite(x0)) throw InvalidInput("render_svg: nothing to plot");
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);
  out += fmt::format("<text x=\"{}\" y=\"22\" font-size=\"14\">{}</text>\n", left, detail::xml_escape(spec.title));
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left,
                     top, pw, ph);
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
    const double vx = spec.log_x ? std::pow(10.0, fx) : fx, vy = spec.log_y ? std::pow(10.0, fy) : fy;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n",
                       left + pw * k / 4, top + ph + 16, vx);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", left - 6,
                       top + ph - ph * k / 4 + 4, vy);
  }
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2,
                     height - 10, detail::xml_escape(spec.x_label));
  out += fmt::format("<text transform=\"translate(16,{:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                     top + ph / 2, detail::xml_escape(spec.y_label));
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = colors[k % 6];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      if (s.points_only) {
        out += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2.5\" fill=\"{}\"/>\n", px(s.x[i]), py(s.y[i]),
                           color);
      } else {
        pts += fmt::format("{:.1f},{:.1f} ", px(s.x[i]), py(s.y[i]));
      }
    }
    if (!pts.empty()) {
      out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"{}\">{}</text>\n", left + pw + 10, top + 14 + 16 * k,
                       color, detail::xml_escape(s.label));
  }
  out += "</svg>\n";
  return out;
}

// ---------------------------------------------------------------------------
// Output directory

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_)) {
      throw ConfigError(fmt::format("cannot create output directory '{}'", root_.string()));
    }
    const auto probe = root_ / ".tmera_write_probe";
    {
      std::ofstream out(probe);
      if (!out) throw ConfigError(fmt::format("output directory '{}' is not writable", root_.string()));
    }
    std::filesystem::remove(probe, ec);
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  void write(const std::string& name, const std::string& content) const {
    const auto path = root_ / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
  }

  /// Plots are a convenience; a failure is reported and swallowed.
  bool write_plot(const std::string& name, const PlotSpec& spec, std::string* error = nullptr) const {
    try {
      write(name, render_svg(spec));
      return true;
    } catch (const std::exception& e) {
      if (error) *error = e.what();
      return false;
    }
  }

 private:
  std::filesystem::path root_;
};

inline std::string circuit_text(const DmeraCircuit& c) {
  std::ostringstream os;
  write_circuit(os, c);
  return os.str();
}

}  // namespace tmera
