#include "tmera/cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "tmera/bench.hpp"
#include "tmera/circuit.hpp"
#include "tmera/config.hpp"
#include "tmera/gaussian.hpp"
#include "tmera/ground.hpp"
#include "tmera/report.hpp"
#include "tmera/thermal.hpp"

namespace tmera {

namespace cli {

DmeraCircuit ground_circuit(Context& ctx, GroundResult* result) {
  ctx.log << fmt::format("ground circuit: L = {}, D = {}{}\n", ctx.config.length, ctx.config.depth,
                         ctx.config.angles_file.empty() ? "" : " (from " + ctx.config.angles_file + ")");
  GroundResult g = ground_for_run(ctx.config);
  ctx.log << fmt::format("  energy per site {:.10f}\n", g.energy_per_site);
  DmeraCircuit c(g.angles, DmeraCircuit::scales_for_length(ctx.config.length));
  ctx.out.write("angles.txt", circuit_text(c));
  if (result) *result = std::move(g);
  return c;
}

void write_json(const Context& ctx, nlohmann::json doc, const AssertionLog& asserts) {
  doc["schema_version"] = kReportSchemaVersion;
  doc["timestamp"] = ctx.timestamp;
  doc["code_version"] = kCodeVersion;
  doc["assertions"] = asserts.to_json();
  ctx.out.write("report.json", doc.dump(2) + "\n");
}

static void plot(const Context& ctx, const std::string& name, const PlotSpec& spec) {
  if (!ctx.config.emit_plots) return;
  std::string error;
  if (!ctx.out.write_plot(name, spec, &error)) ctx.log << fmt::format("warning: plot {} skipped: {}\n", name, error);
}

AssertionLog cmd_optimize_ground(Context& ctx) {
  GroundResult g;
  const DmeraCircuit c = ground_circuit(ctx, &g);
  const QuadraticHamiltonian h = ising_chain(ctx.config.length);
  const double exact = exact_ground_energy_per_site(h);
  AssertionLog a;
  a.check(g.energy_per_site >= exact - 1e-9, "energy per site below the exact ground energy");
  a.check(std::is_sorted(g.trace.rbegin(), g.trace.rend()), "best-so-far trace increases");

  CsvTable t({"evaluation", "best_energy_per_site"});
  for (std::size_t i = 0; i < g.trace.size(); ++i) t.add({std::to_string(i + 1), format_number(g.trace[i])});
  ctx.out.write("report.csv", t.str());
  nlohmann::json doc = {{"kind", "optimize-ground"},
                        {"L", ctx.config.length},
                        {"D", c.depth},
                        {"angles", c.angles},
                        {"energy_per_site", g.energy_per_site},
                        {"exact_energy_per_site", exact},
                        {"energy_error", g.energy_per_site - exact},
                        {"eval_count", g.eval_count},
                        {"converged", g.converged},
                        {"fidelity_vs_exact", g.fidelity_vs_exact ? json_number(*g.fidelity_vs_exact) : nullptr}};
  write_json(ctx, doc, a);
  if (!g.trace.empty()) {
    std::vector<double> x(g.trace.size()), y(g.trace.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = static_cast<double>(i + 1);
      y[i] = std::max(g.trace[i] - exact, 1e-16);
    }
    plot(ctx, "ground_trace.svg",
         {"Ground-state search", "evaluation", "energy error per site", false, true, {{"best so far", x, y}}});
  }
  ctx.log << fmt::format("  error vs exact {:.3e}\n", g.energy_per_site - exact);
  return a;
}

AssertionLog cmd_sweep(Context& ctx) {
  const DmeraCircuit c = ground_circuit(ctx);
  SweepReport r = fidelity_sweep(ctx.config, c, true);
  r.timestamp = ctx.timestamp;
  AssertionLog a;
  double min_f = 1.0;
  for (const SweepPoint& p : r.points) {
    const std::string at = fmt::format(" at T = {:.6g}", p.temperature);
    a.check(p.note.empty(), "fidelity not computed" + at + ": " + p.note);
    a.check(p.fidelity >= 0.0 && p.fidelity <= 1.0, "fidelity outside [0, 1]" + at);
    a.check(p.site_infidelity < kSiteInfidelityBound, "per-site infidelity >= 1e-2" + at);
    a.check(p.exact_free_energy_per_site <= p.free_energy_per_site + 1e-12, "free energy below the Gibbs value" + at);
    if (std::isfinite(p.fidelity)) min_f = std::min(min_f, p.fidelity);
  }
  const double floor = fidelity_floor(c.depth);
  a.check(min_f > floor, fmt::format("minimum fidelity {:.4f} not above {}", min_f, floor));

  ctx.out.write("report.csv", sweep_table(r).str());
  write_json(ctx, sweep_json(r), a);
  std::vector<double> t, f, s, e, ee;
  for (const SweepPoint& p : r.points) {
    t.push_back(p.temperature);
    f.push_back(p.fidelity);
    s.push_back(p.site_infidelity);
  }
  plot(ctx, "fidelity.svg", {"Fidelity with the Gibbs state", "T", "F", true, false, {{"F", t, f}}});
  plot(ctx, "site_infidelity.svg", {"Per-site infidelity", "T", "1 - F^(1/L)", true, true, {{"s(T)", t, s}}});
  ctx.log << fmt::format("  {} temperatures, minimum fidelity {:.4f}\n", r.points.size(), min_f);
  return a;
}

AssertionLog cmd_curve(Context& ctx) {
  const DmeraCircuit c = ground_circuit(ctx);
  SweepReport r = fidelity_sweep(ctx.config, c, false);
  const CurveTable curve = entropy_energy_curve(r);
  AssertionLog a;
  for (const CurveRow& row : curve.rows) {
    a.check(row.gibbs_gap_entropy_bits >= -1e-9 && row.gibbs_gap_energy >= -1e-9,
            fmt::format("ansatz above the Gibbs line at T = {:.6g}", row.temperature));
  }
  ctx.out.write("report.csv", curve_table(curve).str());
  const CurveRow& ms = curve.max_entropy_deficit();
  const CurveRow& me = curve.max_energy_deficit();
  nlohmann::json doc = {
      {"kind", "curve"},
      {"L", ctx.config.length},
      {"D", c.depth},
      {"max_entropy_deficit_bits", ms.entropy_deficit_bits},
      {"max_entropy_deficit_temperature", ms.temperature},
      {"max_entropy_deficit_reduced_temperature", reduced_temperature(ms.temperature)},
      {"max_energy_deficit", me.energy_deficit},
      {"max_energy_deficit_temperature", me.temperature},
      {"max_energy_deficit_reduced_temperature", reduced_temperature(me.temperature)},
  };
  try {
    const LowTScaling fit = low_t_scaling(r);
    doc["low_t_scaling"] = {{"entropy_exponent", fit.entropy.slope},
                            {"entropy_residual", fit.entropy.residual},
                            {"energy_exponent", fit.energy.slope},
                            {"energy_residual", fit.energy.residual},
                            {"t_lo", fit.t_lo},
                            {"t_hi", fit.t_hi}};
  } catch (const InvalidInput& e) {
    doc["low_t_scaling"] = {{"error", e.what()}};
  }
  write_json(ctx, doc, a);

  // The Gibbs line, sampled densely, with the ansatz points on top.
  const GibbsEnsemble ensemble(ising_chain(ctx.config.length));
  const double l = static_cast<double>(ctx.config.length);
  std::vector<double> ge, gs, ae, as;
  for (int k = -60; k <= 60; ++k) {
    const double beta = std::pow(10.0, k / 20.0);
    ge.push_back(ensemble.energy(beta) / l);
    gs.push_back(ensemble.entropy(beta) / (l * std::numbers::ln2));
  }
  for (const CurveRow& row : curve.rows) {
    ae.push_back(row.energy_per_site);
    as.push_back(row.entropy_bits);
  }
  plot(ctx, "entropy_energy.svg",
       {"Entropy against energy", "energy per site", "entropy (bits per qubit)", false, false,
        {{"Gibbs", ge, gs}, {"TMERA", ae, as, true}}});
  ctx.log << fmt::format("  max entropy deficit {:.4f} bits at T = {:.4g}; max energy deficit {:.4f} at T = {:.4g}\n",
                         ms.entropy_deficit_bits, ms.temperature, me.energy_deficit, me.temperature);
  return a;
}

AssertionLog cmd_correlations(Context& ctx) {
  const DmeraCircuit c = ground_circuit(ctx);
  const QuadraticHamiltonian h = ising_chain(ctx.config.length);
  const GibbsEnsemble ensemble(h);
  const ThermalModel model(c, h, ctx.config.seed_state);
  const DistanceWindow window = DistanceWindow::tail(ctx.config.length);
  AssertionLog a;
  CsvTable t({"temperature", "reduced_temperature", "distance", "ansatz", "exact"});
  nlohmann::json fits = nlohmann::json::array();
  PlotSpec spec{"Two-point correlations", "Majorana distance", "mean |<i g_i g_j>|", true, true, {}};
  double previous_rate = -1.0;
  const auto grid = temperature_grid(ctx.config);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double temp = grid[k];
    const ScheduleResult sr = optimize_schedule(model, temp, ctx.config.schedule_mode, ctx.config.schedule_optimizer());
    const CorrelationProfile pa = correlation_profile(build_tmera(c, sr.schedule, ctx.config.seed_state).covariance);
    const CorrelationProfile pe = correlation_profile(ensemble.covariance(1.0 / temp));
    for (std::size_t d = 1; d <= pa.values.size(); ++d) {
      t.add({format_number(temp), format_number(reduced_temperature(temp)), std::to_string(d),
             format_number(pa.values[d - 1]), format_number(pe.values[d - 1])});
    }
    nlohmann::json entry = {{"temperature", temp}, {"reduced_temperature", reduced_temperature(temp)}};
    try {
      const CorrelationFit fa = fit_correlations(pa, window);
      entry["ansatz_power_exponent"] = fa.power_exponent;
      entry["ansatz_power_residual"] = fa.power.residual;
    } catch (const InvalidInput& e) {
      entry["ansatz_error"] = e.what();
    }
    try {
      // the exact profile drops to round-off quickly; fit from the first odd distance
      const CorrelationFit fe = fit_correlations(pe, {1, window.d_max, true});
      entry["exact_exponential_rate"] = fe.exponential_rate;
      entry["exact_exponential_residual"] = fe.exponential.residual;
      a.check(fe.exponential_rate > previous_rate,
              fmt::format("exact decay rate not increasing with T at T = {:.6g}", temp));
      previous_rate = fe.exponential_rate;
    } catch (const InvalidInput& e) {
      entry["exact_error"] = e.what();
    }
    a.check(!pa.underflow, fmt::format("ansatz correlations underflow at T = {:.6g}", temp));
    fits.push_back(entry);
    if (k % 6 == 0 || k + 1 == grid.size()) {
      std::vector<double> d, va, ve;
      for (std::size_t j = 1; j <= pa.values.size(); j += 2) {
        d.push_back(static_cast<double>(j));
        va.push_back(pa.values[j - 1]);
        ve.push_back(pe.values[j - 1]);
      }
      spec.series.push_back({fmt::format("TMERA T={:.3g}", temp), d, va});
      spec.series.push_back({fmt::format("Gibbs T={:.3g}", temp), d, ve, true});
    }
  }
  ctx.out.write("report.csv", t.str());
  write_json(ctx,
             {{"kind", "correlations"},
              {"L", ctx.config.length},
              {"D", c.depth},
              {"window", {{"d_min", window.d_min}, {"d_max", window.d_max}, {"odd_only", window.odd_only}}},
              {"fits", fits}},
             a);
  plot(ctx, "correlations.svg", spec);
  return a;
}

AssertionLog cmd_wavelets(Context& ctx) {
  const DmeraCircuit c = ground_circuit(ctx);
  const WaveletBasis basis = wavelet_basis(c);
  const EnergySupport support = wavelet_energy_support(basis, ising_chain(ctx.config.length));
  const auto bands = octave_concentration(support);
  AssertionLog a;
  CsvTable t({"scale", "mode", "energy", "weight"});
  nlohmann::json scales = nlohmann::json::array();
  PlotSpec spec{"Energy support of wavelet modes", "mode energy", "weight", false, false, {}};
  for (Eigen::Index row = 0; row < support.weight.rows(); ++row) {
    const auto ell = static_cast<std::size_t>(row);
    const double total = support.weight.row(row).sum();
    const double modes = static_cast<double>(c.modes_at_scale(ell));
    a.check(std::abs(total - modes) < 1e-8, fmt::format("scale {} weights sum to {} not {}", ell, total, modes));
    std::vector<double> x, y;
    for (Eigen::Index k = 0; k < support.weight.cols(); ++k) {
      const double e = support.energies[static_cast<std::size_t>(k)];
      t.add({std::to_string(ell), std::to_string(k), format_number(e), format_number(support.weight(row, k))});
      x.push_back(e);
      y.push_back(support.weight(row, k));
    }
    spec.series.push_back({fmt::format("scale {}", ell), x, y});
    scales.push_back({{"scale", ell},
                      {"modes", c.modes_at_scale(ell)},
                      {"octave_fraction", bands[ell].fraction},
                      {"octave_lower_energy", bands[ell].lower}});
  }
  ctx.out.write("report.csv", t.str());
  write_json(ctx, {{"kind", "wavelets"}, {"L", ctx.config.length}, {"D", c.depth}, {"scales", scales}}, a);
  plot(ctx, "wavelets.svg", spec);
  return a;
}

AssertionLog cmd_tfd_check(Context& ctx) {
  const DmeraCircuit c = ground_circuit(ctx);
  const QuadraticHamiltonian h = ising_chain(ctx.config.length);
  const ThermalModel model(c, h, ctx.config.seed_state);
  const std::size_t n = 2 * ctx.config.length;
  AssertionLog a;
  CsvTable t({"temperature", "reduced_temperature", "purity_error", "left_error", "right_error", "mutual_information",
              "twice_entropy"});
  for (double temp : temperature_grid(ctx.config)) {
    const ScheduleResult sr = optimize_schedule(model, temp, ctx.config.schedule_mode, ctx.config.schedule_optimizer());
    const TmeraState st = build_tmera(c, sr.schedule, ctx.config.seed_state);
    const CovarianceMatrix tfd = build_tfd(c, sr.schedule, ctx.config.seed_state);
    const Matrix& g = tfd.data();
    const double purity = (g * g.transpose() - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
    const CovarianceMatrix left = reduce(tfd, index_range(0, n));
    const CovarianceMatrix right = reduce(tfd, index_range(n, n));
    const double le = (left.data() - st.covariance.data()).cwiseAbs().maxCoeff();
    const double re = (right.data() - st.covariance.data()).cwiseAbs().maxCoeff();
    const double mi = entropy(left) + entropy(right) - entropy(tfd);
    const double twice = 2.0 * st.analytic_entropy;
    t.add({format_number(temp), format_number(reduced_temperature(temp)), format_number(purity), format_number(le),
           format_number(re), format_number(mi), format_number(twice)});
    const std::string at = fmt::format(" at T = {:.6g}", temp);
    a.check(purity < 1e-8, "doubled state not pure" + at);
    a.check(le < 1e-8 && re < 1e-8, "reduction differs from the TMERA state" + at);
    a.check(std::abs(mi - twice) < 1e-6 * std::max(1.0, twice), "mutual information differs from 2 S" + at);
  }
  ctx.out.write("report.csv", t.str());
  write_json(ctx, {{"kind", "tfd-check"}, {"L", ctx.config.length}, {"D", c.depth}}, a);
  return a;
}

AssertionLog cmd_effective_h(Context& ctx) {
  const DmeraCircuit c = ground_circuit(ctx);
  const QuadraticHamiltonian h = ising_chain(ctx.config.length);
  const ThermalModel model(c, h, ctx.config.seed_state);
  const std::size_t n = 2 * ctx.config.length;
  AssertionLog a;
  CsvTable t({"temperature", "reduced_temperature", "distance", "mean_abs_coupling"});
  nlohmann::json entries = nlohmann::json::array();
  for (double temp : temperature_grid(ctx.config)) {
    const double beta = 1.0 / temp;
    const ScheduleResult sr = optimize_schedule(model, temp, ctx.config.schedule_mode, ctx.config.schedule_optimizer());
    const TmeraState st = build_tmera(c, sr.schedule, ctx.config.seed_state);
    nlohmann::json entry = {{"temperature", temp}, {"reduced_temperature", reduced_temperature(temp)}};
    try {
      const QuadraticHamiltonian heff = effective_hamiltonian(st.covariance, beta);
      const double round_trip =
          (gibbs_covariance(heff, beta).data() - st.covariance.data()).cwiseAbs().maxCoeff();
      a.check(round_trip < 1e-7, fmt::format("Gibbs round trip error {:.3e} at T = {:.6g}", round_trip, temp));
      const Matrix& m = heff.couplings();
      for (std::size_t d = 1; d <= n / 2; ++d) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += std::abs(m(i, (i + d) % n));
        t.add({format_number(temp), format_number(reduced_temperature(temp)), std::to_string(d),
               format_number(sum / static_cast<double>(n))});
      }
      // The single-particle energies of h_eff are the input mode energies: one
      // value per scale, repeated once per mode.
      std::vector<double> eps = single_particle_energies(heff);
      std::sort(eps.begin(), eps.end());
      eps.erase(std::unique(eps.begin(), eps.end(), [](double x, double y) { return std::abs(x - y) < 1e-6 * (1 + x); }),
                eps.end());
      entry["round_trip_error"] = round_trip;
      entry["distinct_mode_energies"] = eps;
      entry["schedule_energies"] = sr.schedule.expand(c.n_scales, c.seed_modes);
    } catch (const DivergentCoupling& e) {
      entry["error"] = e.what();
    }
    entries.push_back(entry);
  }
  ctx.out.write("report.csv", t.str());
  write_json(ctx, {{"kind", "effective-h"}, {"L", ctx.config.length}, {"D", c.depth}, {"temperatures", entries}},
             a);
  return a;
}


const std::map<std::string, std::pair<Command, std::string>>& commands() {
  static const std::map<std::string, std::pair<Command, std::string>> m = {
      {"optimize-ground", {&cmd_optimize_ground, "Optimize the ground-state DMERA angles"}},
      {"sweep", {&cmd_sweep, "Temperature sweep with fidelities against the Gibbs states"}},
      {"curve", {&cmd_curve, "Entropy-energy curve, deficits and low-temperature power laws"}},
      {"correlations", {&cmd_correlations, "Two-point correlation profiles and decay fits"}},
      {"wavelets", {&cmd_wavelets, "Energy support of the wavelet modes per scale"}},
      {"tfd-check", {&cmd_tfd_check, "Thermofield-double construction checks"}},
      {"effective-h", {&cmd_effective_h, "Effective Hamiltonians of the TMERA states"}},
  };
  return m;
}

}  // namespace cli

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"TMERA thermal-state benchmarks for the critical Ising chain", "tmera"};
  app.require_subcommand(1);
  std::string config_path;
  bool do_assert = false;
  for (const auto& [name, entry] : cli::commands()) {
    CLI::App* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", config_path, "Run configuration (key = value lines)")->required();
    sub->add_flag("--assert", do_assert, "Exit with code 3 if an acceptance check fails");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const RunConfig config = load_run_config(config_path);
    cli::Context ctx{config, OutputDir(config.output_dir), err, utc_timestamp()};
    const AssertionLog result = cli::commands().at(name).first(ctx);
    out << fmt::format("{}: wrote {}\n", name, config.output_dir);
    if (do_assert && !result.ok()) {
      for (const auto& f : result.failures()) err << "assertion failed: " << f << "\n";
      return kExitAssert;
    }
    if (do_assert) out << fmt::format("all {} checks passed\n", result.count());
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace tmera
