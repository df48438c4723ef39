#pragma once

// Benchmarks of TMERA states against the exact Gibbs states of the Ising chain:
// temperature sweeps with fidelities, the entropy-energy plane, low-temperature
// power laws, two-point correlation decay and the energy support of wavelets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "tmera/circuit.hpp"
#include "tmera/config.hpp"
#include "tmera/errors.hpp"
#include "tmera/gaussian.hpp"
#include "tmera/ground.hpp"
#include "tmera/thermal.hpp"

namespace tmera {

inline constexpr const char* kCodeVersion = "1.0.0";

/// Reduced temperature T / 2. Writing the Gibbs covariance as i tanh(i beta h)
/// instead of i tanh(2 i beta h) measures temperature in these units; the
/// benchmark tables report both.
inline double reduced_temperature(double t) { return 0.5 * t; }
inline double physical_temperature(double reduced_t) { return 2.0 * reduced_t; }

struct ExactReference {
  CovarianceMatrix covariance;
  double energy = 0.0;
  double entropy = 0.0;
  double free_energy = 0.0;
};

inline ExactReference exact_reference(const GibbsEnsemble& ensemble, double beta) {
  return {ensemble.covariance(beta), ensemble.energy(beta), ensemble.entropy(beta), ensemble.free_energy(beta)};
}

inline ExactReference exact_reference(const QuadraticHamiltonian& h, double beta) {
  return exact_reference(GibbsEnsemble(h), beta);
}

/// The ground circuit for a run: read from config.angles_file if set, otherwise
/// optimized at depths 1 .. D (each warm-started from the one below).
inline GroundResult ground_for_run(const RunConfig& config) {
  if (!config.angles_file.empty()) {
    std::ifstream in(config.angles_file);
    if (!in) throw ConfigError(fmt::format("cannot open angles file '{}'", config.angles_file));
    const DmeraCircuit c = read_circuit(in);
    if (c.depth != config.depth) {
      throw ConfigError(fmt::format("angles file has depth {}, config asks for D = {}", c.depth, config.depth));
    }
    if (c.seed_modes != 2) throw ConfigError("angles file must use seed_modes = 2");
    GroundResult r;
    r.angles = c.angles;
    r.energy_per_site = ground_objective(r.angles, config.length, ising_chain(config.length), config.seed_state);
    r.converged = true;
    return r;
  }
  GroundOptions options;
  options.seed = config.seed_state;
  return optimize_ground_ladder(config.ground_optimizer(), config.depth, config.length, options).back();
}

struct SweepPoint {
  double temperature = 0.0;
  ThermalSchedule schedule;
  bool converged = true;
  double energy_per_site = 0.0;
  double entropy_per_site = 0.0;
  double free_energy_per_site = 0.0;
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  double site_infidelity = std::numeric_limits<double>::quiet_NaN();
  double exact_energy_per_site = 0.0;
  double exact_entropy_per_site = 0.0;
  double exact_free_energy_per_site = 0.0;
  std::string note;  // empty unless something went wrong at this point
};

struct SweepReport {
  std::size_t length = 0;
  std::size_t depth = 0;
  std::uint64_t seed = 0;
  ScheduleForm schedule_mode = ScheduleForm::Free;
  SeedConvention seed_state = SeedConvention::ExactCoarse;
  std::vector<double> angles;
  double ground_energy_per_site = 0.0;
  double exact_ground_energy_per_site = 0.0;
  std::string timestamp;
  std::string code_version = kCodeVersion;
  std::vector<SweepPoint> points;
};

/// 1 - F^{1/L}, computed without cancellation for F close to 1.
inline double site_infidelity(double fidelity, std::size_t length) {
  if (!(fidelity > 0.0)) return 1.0;
  return -std::expm1(std::log(fidelity) / static_cast<double>(length));
}

/// Optimizes the schedule at every temperature and compares with the exact Gibbs state.
/// Energies and entropies of the ansatz are the analytic ones; the fidelity needs the
/// full covariance and is skipped when with_fidelity is false.
inline SweepReport fidelity_sweep(const RunConfig& config, const DmeraCircuit& circuit, bool with_fidelity = true) {
  config.validate();
  if (circuit.length() != config.length) {
    throw InvalidInput(fmt::format("fidelity_sweep: circuit length {} but L = {}", circuit.length(), config.length));
  }
  const QuadraticHamiltonian h = ising_chain(config.length);
  const GibbsEnsemble ensemble(h);
  const ThermalModel model(circuit, h, config.seed_state);
  const double l = static_cast<double>(config.length);

  SweepReport report;
  report.length = config.length;
  report.depth = circuit.depth;
  report.seed = config.seed;
  report.schedule_mode = config.schedule_mode;
  report.seed_state = config.seed_state;
  report.angles = circuit.angles;
  report.ground_energy_per_site = model.ground_energy() / l;
  report.exact_ground_energy_per_site = ensemble.energy(kInfiniteBeta) / l;

  for (double t : temperature_grid(config)) {
    SweepPoint p;
    p.temperature = t;
    const double beta = 1.0 / t;
    const ScheduleResult sr = optimize_schedule(model, t, config.schedule_mode, config.schedule_optimizer());
    p.schedule = sr.schedule;
    p.converged = sr.converged;
    const auto lambdas = model.lambdas(sr.schedule);
    const double e = model.energy(lambdas), s = model.entropy(lambdas);
    p.energy_per_site = e / l;
    p.entropy_per_site = s / l;
    p.free_energy_per_site = (e - t * s) / l;
    p.exact_energy_per_site = ensemble.energy(beta) / l;
    p.exact_entropy_per_site = ensemble.entropy(beta) / l;
    p.exact_free_energy_per_site = ensemble.free_energy(beta) / l;
    if (with_fidelity) {
      try {
        const TmeraState st = build_tmera(circuit, sr.schedule, config.seed_state);
        p.fidelity = fidelity(st.covariance, ensemble.covariance(beta));
        p.site_infidelity = site_infidelity(p.fidelity, config.length);
      } catch (const NumericallyDegenerate& err) {
        p.note = err.what();
      }
    }
    report.points.push_back(std::move(p));
  }
  return report;
}

inline SweepReport fidelity_sweep(const RunConfig& config, bool with_fidelity = true) {
  const GroundResult g = ground_for_run(config);
  const DmeraCircuit c(g.angles, DmeraCircuit::scales_for_length(config.length));
  return fidelity_sweep(config, c, with_fidelity);
}

// ---------------------------------------------------------------------------
// Entropy-energy plane

/// The exact Gibbs curve S(E) of one Hamiltonian, inverted numerically.
class GibbsCurve {
 public:
  explicit GibbsCurve(const GibbsEnsemble& ensemble) : ensemble_(ensemble) {}

  /// Entropy of the Gibbs state with energy e (0 at or below the ground energy, L log 2 at e >= 0).
  double entropy_at_energy(double e) const {
    if (e <= ensemble_.energy(kInfiniteBeta)) return 0.0;
    if (e >= 0.0) return static_cast<double>(ensemble_.n_modes()) * std::numbers::ln2;
    return ensemble_.entropy(solve([&](double beta) { return ensemble_.energy(beta) - e; }));
  }

  /// Energy of the Gibbs state with entropy s.
  double energy_at_entropy(double s) const {
    const double smax = static_cast<double>(ensemble_.n_modes()) * std::numbers::ln2;
    if (s <= 0.0) return ensemble_.energy(kInfiniteBeta);
    if (s >= smax) return 0.0;
    return ensemble_.energy(solve([&](double beta) { return s - ensemble_.entropy(beta); }));
  }

 private:
  // f is monotone in beta; solve in u = log beta on a wide bracket.
  template <class F>
  double solve(F f) const {
    auto g = [&](double u) { return f(std::exp(u)); };
    double lo = -30.0, hi = 30.0;
    if (g(lo) * g(hi) > 0.0) return std::abs(g(lo)) < std::abs(g(hi)) ? std::exp(lo) : std::exp(hi);
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return std::exp(0.5 * (r.first + r.second));
  }

  const GibbsEnsemble& ensemble_;
};

struct CurveRow {
  double temperature = 0.0;
  double energy_per_site = 0.0;
  double entropy_bits = 0.0;  // ansatz entropy, bits per qubit
  double exact_energy_per_site = 0.0;
  double exact_entropy_bits = 0.0;
  // Differences from the Gibbs state at the same temperature.
  double entropy_deficit_bits = 0.0;  // S_Gibbs(T) - S_ansatz(T)
  double energy_deficit = 0.0;        // E_ansatz(T) - E_Gibbs(T)
  // Distances from the Gibbs line in the (E, S) plane; never negative.
  double gibbs_gap_entropy_bits = 0.0;  // S_Gibbs(E_ansatz) - S_ansatz
  double gibbs_gap_energy = 0.0;        // E_ansatz - E_Gibbs(S_ansatz)
};

struct CurveTable {
  std::vector<CurveRow> rows;
  std::size_t max_entropy_row = 0;
  std::size_t max_energy_row = 0;

  const CurveRow& max_entropy_deficit() const { return rows.at(max_entropy_row); }
  const CurveRow& max_energy_deficit() const { return rows.at(max_energy_row); }
};

inline CurveTable entropy_energy_curve(const SweepReport& report) {
  if (report.points.empty()) throw InvalidInput("entropy_energy_curve: empty sweep");
  const GibbsEnsemble ensemble(ising_chain(report.length));
  const GibbsCurve curve(ensemble);
  const double l = static_cast<double>(report.length);
  const double bits = l * std::numbers::ln2;
  CurveTable out;
  for (const SweepPoint& p : report.points) {
    CurveRow r;
    r.temperature = p.temperature;
    r.energy_per_site = p.energy_per_site;
    r.entropy_bits = p.entropy_per_site / std::numbers::ln2;
    r.exact_energy_per_site = p.exact_energy_per_site;
    r.exact_entropy_bits = p.exact_entropy_per_site / std::numbers::ln2;
    r.entropy_deficit_bits = r.exact_entropy_bits - r.entropy_bits;
    r.energy_deficit = r.energy_per_site - r.exact_energy_per_site;
    const double e = p.energy_per_site * l, s = p.entropy_per_site * l;
    r.gibbs_gap_entropy_bits = (curve.entropy_at_energy(e) - s) / bits;
    r.gibbs_gap_energy = (e - curve.energy_at_entropy(s)) / l;
    out.rows.push_back(r);
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    if (out.rows[i].entropy_deficit_bits > out.rows[out.max_entropy_row].entropy_deficit_bits) out.max_entropy_row = i;
    if (out.rows[i].energy_deficit > out.rows[out.max_energy_row].energy_deficit) out.max_energy_row = i;
  }
  return out;
}

inline CurveTable entropy_energy_curve(const RunConfig& config) {
  return entropy_energy_curve(fidelity_sweep(config, false));
}

// ---------------------------------------------------------------------------
// Fits

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of the residuals
  std::size_t n_points = 0;
};

/// Ordinary least squares y = slope x + intercept.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_line: need at least two (x, y) pairs");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidInput("fit_line: all x values are equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.n_points = x.size();
  return f;
}

struct LowTScaling {
  LineFit entropy;  // log s against log T
  LineFit energy;   // log(eps - eps0) against log T
  double t_lo = 0.0, t_hi = 0.0;
};

/// Power-law fits of the ansatz entropy density and excess energy density over
/// physical temperatures t_lo <= T <= t_hi. The excess energy is measured from
/// the exact ground energy per site. The default window is reduced T < 0.5;
/// t_lo = 0 selects 8 / L, above the finite-size gap.
inline LowTScaling low_t_scaling(const SweepReport& report, double t_hi = physical_temperature(0.5),
                                 double t_lo = 0.0) {
  if (t_lo <= 0.0) t_lo = 8.0 / static_cast<double>(report.length);
  std::vector<double> ls, s, le, e;
  for (const SweepPoint& p : report.points) {
    if (p.temperature < t_lo || p.temperature > t_hi) continue;
    const double lt = std::log(p.temperature);
    if (p.entropy_per_site > 0.0) {
      ls.push_back(lt);
      s.push_back(std::log(p.entropy_per_site));
    }
    const double excess = p.energy_per_site - report.exact_ground_energy_per_site;
    if (excess > 0.0) {
      le.push_back(lt);
      e.push_back(std::log(excess));
    }
  }
  if (ls.size() < 4 || le.size() < 4) {
    throw InvalidInput(fmt::format("low_t_scaling: only {} temperatures in [{:.4g}, {:.4g}], need 4", ls.size(),
                                   t_lo, t_hi));
  }
  LowTScaling out;
  out.entropy = fit_line(ls, s);
  out.energy = fit_line(le, e);
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  return out;
}

inline LowTScaling low_t_scaling(const RunConfig& config) { return low_t_scaling(fidelity_sweep(config, false)); }

// ---------------------------------------------------------------------------
// Correlations

inline constexpr double kCorrelationFloor = 1e-14;

/// Mean of |<i gamma_i gamma_{i+d}>| over all i (indices mod 2L), for d = 1 .. L.
struct CorrelationProfile {
  std::vector<double> values;  // values[d - 1]
  bool underflow = false;      // every correlator below kCorrelationFloor
};

inline CorrelationProfile correlation_profile(const CovarianceMatrix& g) {
  const std::size_t n = g.n_majoranas();
  const std::size_t half = n / 2;
  CorrelationProfile out;
  out.values.assign(half, 0.0);
  double largest = 0.0;
  for (std::size_t d = 1; d <= half; ++d) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::abs(g(i, (i + d) % n));
    out.values[d - 1] = sum / static_cast<double>(n);
    largest = std::max(largest, out.values[d - 1]);
  }
  out.underflow = largest < kCorrelationFloor;
  return out;
}

/// Which Majorana distances enter a fit. For the Ising chain the leading
/// correlations sit at odd distances, so that is the default.
struct DistanceWindow {
  std::size_t d_min = 1;
  std::size_t d_max = std::numeric_limits<std::size_t>::max();
  bool odd_only = true;

  /// Long-distance tail of a chain of `length` sites: from 8 sites out to a
  /// quarter of the ring, before the two ways around start to compete.
  static DistanceWindow tail(std::size_t length) { return {16, length / 2, true}; }
};

struct CorrelationFit {
  double exponential_rate = 0.0;  // C(d) ~ exp(-rate d)
  double power_exponent = 0.0;    // C(d) ~ d^{-exponent}
  LineFit exponential;
  LineFit power;
  bool underflow = false;
};

inline CorrelationFit fit_correlations(const CorrelationProfile& profile, const DistanceWindow& w) {
  CorrelationFit out;
  out.underflow = profile.underflow;
  if (profile.underflow) return out;
  std::vector<double> d, logd, logc;
  for (std::size_t k = w.d_min; k <= std::min(w.d_max, profile.values.size()); ++k) {
    if (w.odd_only && k % 2 == 0) continue;
    const double c = profile.values[k - 1];
    if (c < kCorrelationFloor) continue;
    d.push_back(static_cast<double>(k));
    logd.push_back(std::log(static_cast<double>(k)));
    logc.push_back(std::log(c));
  }
  if (d.size() < 3) {
    throw InvalidInput(fmt::format("fit_correlations: only {} usable distances", d.size()));
  }
  out.exponential = fit_line(d, logc);
  out.power = fit_line(logd, logc);
  out.exponential_rate = -out.exponential.slope;
  out.power_exponent = -out.power.slope;
  return out;
}

// ---------------------------------------------------------------------------
// Wavelet energy support

/// For each scale, the largest fraction of its weight inside one octave
/// [e, 2e] of single-particle energies, and where that octave starts.
struct OctaveBand {
  double fraction = 0.0;
  double lower = 0.0;
};

inline std::vector<OctaveBand> octave_concentration(const EnergySupport& support) {
  std::vector<OctaveBand> out;
  const auto& e = support.energies;
  const Eigen::Index n = static_cast<Eigen::Index>(e.size());
  for (Eigen::Index row = 0; row < support.weight.rows(); ++row) {
    const double total = support.weight.row(row).sum();
    OctaveBand best;
    Eigen::Index hi = 0;
    double window = 0.0;
    for (Eigen::Index lo = 0; lo < n; ++lo) {
      if (hi < lo) {
        hi = lo;
        window = 0.0;
      }
      while (hi < n && e[static_cast<std::size_t>(hi)] <= 2.0 * e[static_cast<std::size_t>(lo)]) {
        window += support.weight(row, hi);
        ++hi;
      }
      if (total > 0.0 && window / total > best.fraction) {
        best.fraction = window / total;
        best.lower = e[static_cast<std::size_t>(lo)];
      }
      window -= support.weight(row, lo);
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace tmera
