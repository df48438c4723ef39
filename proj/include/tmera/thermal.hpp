#pragma once

// Thermal schedules and TMERA states.
//
// A mode of energy E at inverse temperature beta enters as the diagonal qubit
// state proportional to exp(-beta E Z): its block is [[0, -lambda], [lambda, 0]]
// with lambda = tanh(beta E), and it is excited with probability (1 - lambda) / 2.
// Flipping such a mode costs 2E, the same convention as the mode energies of
// QuadraticHamiltonian.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "tmera/circuit.hpp"
#include "tmera/errors.hpp"
#include "tmera/gaussian.hpp"
#include "tmera/optimize.hpp"

namespace tmera {

enum class ScheduleForm { Scaling, Free };

inline std::string to_string(ScheduleForm f) { return f == ScheduleForm::Scaling ? "scaling" : "free"; }

inline ScheduleForm parse_schedule_form(const std::string& s) {
  if (s == "scaling") return ScheduleForm::Scaling;
  if (s == "free") return ScheduleForm::Free;
  throw InvalidInput(fmt::format("unknown schedule form '{}'", s));
}

/// Per-scale mode energies at one inverse temperature.
struct ThermalSchedule {
  double beta = 0.0;
  ScheduleForm form = ScheduleForm::Scaling;
  double e_uv = 1.0;  // scaling form: E_l = e_uv * (2^l / L)^z
  double z = 1.0;
  std::vector<double> energies;  // free form: E_1 .. E_n

  static ThermalSchedule scaling(double beta, double e_uv, double z = 1.0) {
    ThermalSchedule s;
    s.beta = beta;
    s.form = ScheduleForm::Scaling;
    s.e_uv = e_uv;
    s.z = z;
    s.validate();
    return s;
  }

  static ThermalSchedule free(double beta, std::vector<double> energies) {
    ThermalSchedule s;
    s.beta = beta;
    s.form = ScheduleForm::Free;
    s.energies = std::move(energies);
    s.validate();
    return s;
  }

  void validate() const {
    if (std::isnan(beta) || beta < 0.0) {
      throw InvalidInput(fmt::format("schedule: beta must be >= 0, got {}", beta));
    }
    if (form == ScheduleForm::Scaling) {
      if (!(e_uv >= 0.0) || !std::isfinite(z)) {
        throw InvalidInput(fmt::format("schedule: need E_UV >= 0 and finite z (got {}, {})", e_uv, z));
      }
    } else {
      for (double e : energies) {
        if (!(e >= 0.0)) throw InvalidInput(fmt::format("schedule: negative mode energy {}", e));
      }
    }
  }

  /// E_1 .. E_n for a chain of seed_modes * 2^n_scales sites.
  std::vector<double> expand(std::size_t n_scales, std::size_t seed_modes = 2) const {
    validate();
    if (form == ScheduleForm::Free) {
      if (energies.size() != n_scales) {
        throw InvalidInput(fmt::format("schedule: {} energies for {} scales", energies.size(), n_scales));
      }
      return energies;
    }
    const double length = static_cast<double>(seed_modes << n_scales);
    std::vector<double> out(n_scales);
    for (std::size_t ell = 1; ell <= n_scales; ++ell) {
      out[ell - 1] = e_uv * std::pow(std::ldexp(1.0, static_cast<int>(ell)) / length, z);
    }
    return out;
  }
};

/// lambda = tanh(beta E), with E = 0 giving 0 and beta = inf giving 1.
inline double mode_lambda(double beta, double energy) {
  if (energy < 0.0 || std::isnan(energy)) {
    throw InvalidInput(fmt::format("mode energy must be >= 0, got {}", energy));
  }
  detail::require_beta(beta, "mode_lambda");
  if (energy == 0.0 || beta == 0.0) return 0.0;
  if (std::isinf(beta) || std::isinf(energy)) return 1.0;
  return std::tanh(beta * energy);
}

inline Block input_block(double beta, double energy) {
  const double lambda = mode_lambda(beta, energy);
  Block b;
  b << 0, -lambda, lambda, 0;
  return b;
}

/// Entropy of one mode as a function of x = beta E.
inline double mode_entropy_at(double x) {
  const double a = 2.0 * std::abs(x);
  if (std::isinf(a)) return 0.0;
  const double e = std::exp(-a);
  // excitation probability q = e / (1 + e); S = a q + log(1 + e)
  return a * e / (1.0 + e) + std::log1p(e);
}

inline double excitation_probability(double lambda) { return 0.5 * (1.0 - lambda); }

inline std::vector<double> schedule_lambdas(const ThermalSchedule& s, std::size_t n_scales,
                                            std::size_t seed_modes = 2) {
  std::vector<double> out;
  for (double e : s.expand(n_scales, seed_modes)) out.push_back(mode_lambda(s.beta, e));
  return out;
}

/// count_l * S_l for l = 1..n (nats); the seed is not included.
inline std::vector<double> scale_entropy_profile(const ThermalSchedule& s, std::size_t n_scales,
                                                 std::size_t seed_modes = 2) {
  const auto energies = s.expand(n_scales, seed_modes);
  std::vector<double> out;
  for (std::size_t ell = 1; ell <= n_scales; ++ell) {
    const double e = energies[ell - 1];
    const double x = (e == 0.0 || s.beta == 0.0) ? 0.0 : s.beta * e;
    out.push_back(static_cast<double>(seed_modes << (ell - 1)) * mode_entropy_at(x));
  }
  return out;
}

/// Total entropy (nats): the scale profile plus the seed modes, which use E_1.
inline double analytic_entropy(const ThermalSchedule& s, std::size_t n_scales, std::size_t seed_modes = 2) {
  if (n_scales == 0) throw InvalidInput("analytic_entropy: need at least one scale");
  const auto profile = scale_entropy_profile(s, n_scales, seed_modes);
  const auto profile_first = profile.front() / static_cast<double>(seed_modes);
  double total = static_cast<double>(seed_modes) * profile_first;
  for (double v : profile) total += v;
  return total;
}

/// Where scale l and l+1 contribute equal entropy when E_{l+1} = 2^z E_l.
struct EntropyCrossover {
  double beta_energy;      // beta E_l in the tanh(beta E) convention
  double beta_excitation;  // beta times the excitation energy 2 E_l
};

inline EntropyCrossover entropy_crossover(double z = 1.0) {
  const double ratio = std::pow(2.0, z);
  const auto g = [ratio](double x) { return 0.5 * mode_entropy_at(x) - mode_entropy_at(ratio * x); };
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      g, 1e-3, 20.0, boost::math::tools::eps_tolerance<double>(50), iters);
  const double x = 0.5 * (lo + hi);
  return {x, 2.0 * x};
}

struct TmeraState {
  DmeraCircuit circuit;
  ThermalSchedule schedule;
  SeedConvention seed = SeedConvention::ExactCoarse;
  std::vector<double> lambdas;  // per scale
  std::vector<double> probs;    // per-scale excitation probability
  double analytic_entropy = 0.0;
  CovarianceMatrix covariance;
};

inline TmeraState build_tmera(const DmeraCircuit& circuit, const ThermalSchedule& schedule,
                              SeedConvention seed = SeedConvention::ExactCoarse) {
  circuit.validate();
  if (circuit.n_scales == 0) throw InvalidInput("build_tmera: need at least one scale");
  TmeraState st;
  st.circuit = circuit;
  st.schedule = schedule;
  st.seed = seed;
  st.lambdas = schedule_lambdas(schedule, circuit.n_scales, circuit.seed_modes);
  std::vector<Block> blocks;
  for (double l : st.lambdas) {
    st.probs.push_back(excitation_probability(l));
    Block b;
    b << 0, -l, l, 0;
    blocks.push_back(b);
  }
  st.analytic_entropy = tmera::analytic_entropy(schedule, circuit.n_scales, circuit.seed_modes);
  st.covariance = build_state(circuit, blocks, seed_state(seed, circuit.seed_modes, st.lambdas[0]));
  return st;
}

/// E - T S with the analytic entropy.
inline double free_energy(const TmeraState& state, const QuadraticHamiltonian& h, double temperature) {
  if (!(temperature >= 0.0)) throw InvalidInput("free_energy: temperature must be >= 0");
  const double e = energy_expectation(state.covariance, h);
  return temperature == 0.0 ? e : e - temperature * state.analytic_entropy;
}

/// Energy and entropy of TMERA states on one circuit, evaluated through its mode couplings.
class ThermalModel {
 public:
  ThermalModel(DmeraCircuit circuit, const QuadraticHamiltonian& h,
               SeedConvention seed = SeedConvention::ExactCoarse)
      : circuit_(std::move(circuit)), seed_(seed), couplings_(mode_couplings(circuit_, h)) {
    if (circuit_.n_scales == 0) throw InvalidInput("ThermalModel: need at least one scale");
    seed_unit_ = couplings_.seed_coupling.cwiseProduct(seed_state(seed_, circuit_.seed_modes, 1.0).data()).sum();
  }

  const DmeraCircuit& circuit() const noexcept { return circuit_; }
  const ModeCouplings& couplings() const noexcept { return couplings_; }
  SeedConvention seed() const noexcept { return seed_; }
  std::size_t length() const noexcept { return circuit_.length(); }

  double energy(std::span<const double> lambdas) const {
    double e = seed_unit_ * lambdas[0];
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      e -= static_cast<double>(couplings_.count[l]) * couplings_.kappa[l] * lambdas[l];
    }
    return e;
  }

  double entropy(std::span<const double> lambdas) const {
    double s = static_cast<double>(circuit_.seed_modes) * mode_entropy(lambdas[0]);
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      s += static_cast<double>(couplings_.count[l]) * mode_entropy(lambdas[l]);
    }
    return s;
  }

  std::vector<double> lambdas(const ThermalSchedule& s) const {
    return schedule_lambdas(s, circuit_.n_scales, circuit_.seed_modes);
  }

  double free_energy(const ThermalSchedule& s, double temperature) const {
    const auto l = lambdas(s);
    const double e = energy(l);
    return temperature == 0.0 ? e : e - temperature * entropy(l);
  }

  /// Ground energy of the pure ansatz (every lambda = 1).
  double ground_energy() const { return energy(std::vector<double>(circuit_.n_scales, 1.0)); }

 private:
  DmeraCircuit circuit_;
  SeedConvention seed_;
  ModeCouplings couplings_;
  double seed_unit_ = 0.0;
};

struct ScheduleResult {
  ThermalSchedule schedule;
  double free_energy = 0.0;
  std::size_t evals = 0;
  bool converged = true;
};

namespace detail {

inline double beta_of(double temperature) {
  if (!(temperature >= 0.0) || std::isinf(temperature)) {
    throw InvalidInput(fmt::format("temperature must be finite and >= 0, got {}", temperature));
  }
  return temperature == 0.0 ? kInfiniteBeta : 1.0 / temperature;
}

/// Scans F(E_UV) on a log grid and refines the best cell with Brent.
inline ScheduleResult optimize_scaling(const ThermalModel& model, double temperature, double z) {
  const double beta = beta_of(temperature);
  ScheduleResult out;
  const double log_length = std::log(static_cast<double>(model.length()));
  // search over v = log(beta * E_UV)
  const double lo = -12.0, hi = 12.0 + std::max(z, 0.0) * log_length;
  auto f = [&](double v) {
    ++out.evals;
    return model.free_energy(ThermalSchedule::scaling(beta, std::exp(v) / beta, z), temperature);
  };
  const int grid = 96;
  double best_v = lo, best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i) {
    const double v = lo + (hi - lo) * i / grid;
    const double fv = f(v);
    if (fv < best_f) {
      best_f = fv;
      best_v = v;
    }
  }
  const double cell = (hi - lo) / grid;
  const auto [v, fv] = brent_minimize(f, std::max(lo, best_v - cell), std::min(hi, best_v + cell));
  if (fv < best_f) {
    best_f = fv;
    best_v = v;
  }
  out.schedule = ThermalSchedule::scaling(beta, std::exp(best_v) / beta, z);
  out.free_energy = best_f;
  return out;
}

}  // namespace detail

/// Minimizes the free energy at temperature T over the schedule family `form`.
/// The free form starts from the scaling optimum, so it never ends higher.
inline ScheduleResult optimize_schedule(const ThermalModel& model, double temperature, ScheduleForm form,
                                        const OptimizerConfig& config, double z = 1.0) {
  config.validate();
  const double beta = detail::beta_of(temperature);
  const std::size_t n = model.circuit().n_scales;
  if (std::isinf(beta)) {
    // every positive mode energy gives the pure ansatz
    ScheduleResult r;
    r.schedule = form == ScheduleForm::Scaling
                     ? ThermalSchedule::scaling(beta, 1.0, z)
                     : ThermalSchedule::free(beta, ThermalSchedule::scaling(beta, 1.0, z).expand(n, model.circuit().seed_modes));
    r.free_energy = model.ground_energy();
    return r;
  }
  ScheduleResult scaling = detail::optimize_scaling(model, temperature, z);
  if (form == ScheduleForm::Scaling) return scaling;

  const std::vector<double> start_energies = scaling.schedule.expand(n, model.circuit().seed_modes);
  std::vector<double> x0;
  for (double e : start_energies) x0.push_back(std::log(std::max(beta * e, 1e-300)));
  const Objective f = [&](const std::vector<double>& x) {
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::exp(std::clamp(x[i], -40.0, 40.0)) / beta;
    return model.free_energy(ThermalSchedule::free(beta, std::move(e)), temperature);
  };
  MinimizeResult m = minimize(config, f, x0, config.method == OptimizerMethod::NelderMead ? 0.5 : 3.0);
  ScheduleResult out;
  out.evals = scaling.evals + m.evals;
  out.converged = m.converged;
  if (m.value < scaling.free_energy) {
    std::vector<double> e(m.x.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(std::clamp(m.x[i], -40.0, 40.0)) / beta;
    out.schedule = ThermalSchedule::free(beta, std::move(e));
    out.free_energy = m.value;
  } else {
    out.schedule = ThermalSchedule::free(beta, start_energies);
    out.free_energy = scaling.free_energy;
  }
  return out;
}

/// Mean energy cost of flipping one input mode of the pure ansatz, per scale.
/// Entry 0 is the seed (its normal modes are flipped), entries 1..n the scales.
inline std::vector<double> measure_mode_energies(const ThermalModel& model) {
  const ModeCouplings& mc = model.couplings();
  const DmeraCircuit& c = model.circuit();
  std::vector<double> out;
  const ModeSpectrum seed = mode_spectrum(seed_state(model.seed(), c.seed_modes, 1.0));
  double seed_sum = 0.0;
  for (std::size_t k = 0; k < c.seed_modes; ++k) {
    Vector b = Vector::Zero(static_cast<Eigen::Index>(c.seed_modes));
    b(static_cast<Eigen::Index>(k)) = -2.0 * seed.lambdas[k];
    seed_sum += mc.seed_coupling.cwiseProduct(detail::assemble_blocks(seed.rotation, b)).sum();
  }
  out.push_back(seed_sum / static_cast<double>(c.seed_modes));
  for (double k : mc.kappa) out.push_back(2.0 * k);
  return out;
}

namespace detail {

/// Adds fresh entangled pairs to a doubled state laid out as [left | right].
inline Matrix interleave_doubled(const Matrix& g, double b) {
  const Eigen::Index m = g.rows() / 4;  // qubits per side before doubling
  const double mu = std::sqrt(std::max(0.0, 1.0 - b * b));
  Matrix out = Matrix::Zero(8 * m, 8 * m);
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 2; ++t) {
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index c = 0; c < m; ++c) {
          out.block<2, 2>(4 * m * s + 4 * a, 4 * m * t + 4 * c) = g.block<2, 2>(2 * m * s + 2 * a, 2 * m * t + 2 * c);
        }
      }
    }
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    const Eigen::Index l = 4 * a + 2, r = 4 * m + 4 * a + 2;
    out(l, l + 1) = b;
    out(l + 1, l) = -b;
    out(r, r + 1) = b;
    out(r + 1, r) = -b;
    out(l, r) = mu;
    out(l + 1, r + 1) = -mu;
    out(r, l) = -mu;
    out(r + 1, l + 1) = mu;
  }
  return out;
}

/// Pure doubled state whose two halves both reduce to g.
inline Matrix doubled_seed(const CovarianceMatrix& g) {
  const ModeSpectrum spec = mode_spectrum(g);
  const auto n = static_cast<Eigen::Index>(g.n_majoranas());
  Matrix pairs = Matrix::Zero(2 * n, 2 * n);
  for (Eigen::Index k = 0; k < n / 2; ++k) {
    const double lam = spec.lambdas[static_cast<std::size_t>(k)];
    const double mu = std::sqrt(std::max(0.0, 1.0 - lam * lam));
    const Eigen::Index l = 2 * k, r = n + 2 * k;
    pairs(l, l + 1) = lam;
    pairs(l + 1, l) = -lam;
    pairs(r, r + 1) = lam;
    pairs(r + 1, r) = -lam;
    pairs(l, r) = mu;
    pairs(l + 1, r + 1) = -mu;
    pairs(r, l) = -mu;
    pairs(r + 1, l + 1) = mu;
  }
  Matrix rot = Matrix::Zero(2 * n, 2 * n);
  rot.topLeftCorner(n, n) = spec.rotation;
  rot.bottomRightCorner(n, n) = spec.rotation;
  return rot.transpose() * pairs * rot;
}

}  // namespace detail

/// Thermofield-double ansatz: entangled input pairs, the same circuit on both halves.
/// Majoranas 0 .. 2L-1 are the left copy, 2L .. 4L-1 the right copy.
inline CovarianceMatrix build_tfd(const DmeraCircuit& circuit, const ThermalSchedule& schedule,
                                  SeedConvention seed = SeedConvention::ExactCoarse) {
  circuit.validate();
  if (circuit.n_scales == 0) throw InvalidInput("build_tfd: need at least one scale");
  const auto lambdas = schedule_lambdas(schedule, circuit.n_scales, circuit.seed_modes);
  Matrix g = detail::doubled_seed(seed_state(seed, circuit.seed_modes, lambdas[0]));
  for (std::size_t ell = 0; ell < circuit.n_scales; ++ell) {
    g = detail::interleave_doubled(g, -lambdas[ell]);
    const std::size_t n = static_cast<std::size_t>(g.rows()) / 4;
    for (std::size_t d = 0; d < circuit.depth; ++d) {
      const double x = circuit.angles[2 * d], y = circuit.angles[2 * d + 1];
      detail::apply_sublayer(g, n, x, y, d, true, true, 0);
      detail::apply_sublayer(g, n, x, y, d, true, true, static_cast<Eigen::Index>(2 * n));
    }
  }
  return CovarianceMatrix(std::move(g));
}

}  // namespace tmera
