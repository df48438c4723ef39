#pragma once

// Variational ground-state search over the 2D shared DMERA angles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "tmera/circuit.hpp"
#include "tmera/errors.hpp"
#include "tmera/gaussian.hpp"
#include "tmera/optimize.hpp"

namespace tmera {

struct GroundResult {
  std::vector<double> angles;
  double energy_per_site = 0.0;
  std::optional<double> fidelity_vs_exact;
  std::size_t eval_count = 0;
  bool converged = false;
  std::vector<double> trace;  // best-so-far energy per site at the target length
};

struct GroundOptions {
  SeedConvention seed = SeedConvention::ExactCoarse;
  /// Restarts run at min(L, coarse_length); the best one is then polished at L.
  std::size_t coarse_length = 64;
  /// Extra starting points tried before the random restarts.
  std::vector<std::vector<double>> warm_starts;
  /// Fidelity with the exact ground state is reported up to this length.
  std::size_t fidelity_max_length = 128;
};

/// Exact ground energy per site, -sum(eps_k) / L.
inline double exact_ground_energy_per_site(const QuadraticHamiltonian& h) {
  double sum = 0.0;
  for (double e : single_particle_energies(h)) sum += e;
  return -sum / static_cast<double>(h.n_modes());
}

/// Pure DMERA energy per site for the given angles.
inline double ground_objective(std::span<const double> angles, std::size_t length,
                               const QuadraticHamiltonian& h,
                               SeedConvention seed = SeedConvention::ExactCoarse) {
  if (h.n_modes() != length) {
    throw InvalidInput(fmt::format("ground_objective: h has {} modes, length is {}", h.n_modes(), length));
  }
  const DmeraCircuit c(std::vector<double>(angles.begin(), angles.end()),
                       DmeraCircuit::scales_for_length(length));
  const ModeCouplings mc = mode_couplings(c, h);
  const std::vector<double> ones(c.n_scales, 1.0);
  return mc.energy(seed_state(seed, c.seed_modes, 1.0), ones) / static_cast<double>(length);
}

/// The pure DMERA state for a set of angles.
inline CovarianceMatrix ground_state(const DmeraCircuit& c, SeedConvention seed = SeedConvention::ExactCoarse) {
  const std::vector<Block> blocks(c.n_scales, pure_block());
  return build_state(c, blocks, seed_state(seed, c.seed_modes, 1.0));
}

namespace detail {

inline MinimizeResult run_ground_search(const OptimizerConfig& config, const std::vector<double>& start,
                                        std::size_t length, SeedConvention seed) {
  const QuadraticHamiltonian h = ising_chain(length);
  const Objective f = [&](const std::vector<double>& x) { return ground_objective(x, length, h, seed); };
  return minimize(config, f, start, config.method == OptimizerMethod::NelderMead ? 0.4 : 0.8);
}

inline bool better(const MinimizeResult& a, const MinimizeResult& b) {
  if (a.value != b.value) return a.value < b.value;
  return a.evals < b.evals;
}

}  // namespace detail

inline GroundResult optimize_ground(const OptimizerConfig& config, std::size_t depth, std::size_t length,
                                    const GroundOptions& options = {}) {
  config.validate();
  if (depth == 0) throw InvalidInput("optimize_ground: depth must be at least 1");
  DmeraCircuit::scales_for_length(length);
  const std::size_t coarse = std::min(length, std::max<std::size_t>(options.coarse_length, 4));
  DmeraCircuit::scales_for_length(coarse);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
  std::vector<std::vector<double>> starts;
  for (const auto& w : options.warm_starts) {
    if (w.size() != 2 * depth) {
      throw InvalidInput(fmt::format("optimize_ground: warm start has {} angles, need {}", w.size(), 2 * depth));
    }
    starts.push_back(w);
  }
  for (std::size_t r = 0; r < config.restarts; ++r) {
    std::vector<double> x(2 * depth);
    for (double& v : x) v = uniform(rng);
    starts.push_back(std::move(x));
  }
  if (starts.empty()) throw InvalidInput("optimize_ground: no restarts and no warm starts");

  std::size_t total_evals = 0;
  MinimizeResult best;
  bool have_best = false;
  std::vector<double> running;
  for (const auto& x0 : starts) {
    MinimizeResult r = detail::run_ground_search(config, x0, coarse, options.seed);
    total_evals += r.evals;
    for (double v : r.trace) running.push_back(running.empty() ? v : std::min(running.back(), v));
    if (!have_best || detail::better(r, best)) {
      best = std::move(r);
      have_best = true;
    }
  }

  GroundResult out;
  if (coarse < length) {
    MinimizeResult polished = detail::run_ground_search(config, best.x, length, options.seed);
    total_evals += polished.evals;
    out.trace = std::move(polished.trace);
    out.converged = polished.converged;
    best = std::move(polished);
  } else {
    out.trace = std::move(running);
    out.converged = best.converged;
  }
  out.angles = best.x;
  out.energy_per_site = best.value;
  out.eval_count = total_evals;
  if (length <= options.fidelity_max_length) {
    const DmeraCircuit c(out.angles, DmeraCircuit::scales_for_length(length));
    out.fidelity_vs_exact = fidelity(ground_state(c, options.seed),
                                     gibbs_covariance(ising_chain(length), kInfiniteBeta));
  }
  return out;
}

/// Optimizes depths 1 .. max_depth in turn. Depth D is also started from the
/// depth D - 1 optimum with one extra zero-angle sublayer, which reproduces the
/// shallower state exactly.
inline std::vector<GroundResult> optimize_ground_ladder(const OptimizerConfig& config, std::size_t max_depth,
                                                        std::size_t length, const GroundOptions& options = {}) {
  std::vector<GroundResult> out;
  for (std::size_t depth = 1; depth <= max_depth; ++depth) {
    GroundOptions o = options;
    std::erase_if(o.warm_starts, [&](const auto& w) { return w.size() != 2 * depth; });
    if (!out.empty()) {
      std::vector<double> w = out.back().angles;
      w.push_back(0.0);
      w.push_back(0.0);
      o.warm_starts.push_back(std::move(w));
    }
    out.push_back(optimize_ground(config, depth, length, o));
  }
  return out;
}

}  // namespace tmera
