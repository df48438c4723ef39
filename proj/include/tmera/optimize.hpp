#pragma once

// Derivative-free minimizers: Nelder-Mead (GSL nmsimplex2), coordinate descent
// built on Brent line searches (Boost.Math), and a scalar Brent wrapper.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "tmera/errors.hpp"

namespace tmera {

enum class OptimizerMethod { NelderMead, CoordinateDescent };

inline std::string to_string(OptimizerMethod m) {
  return m == OptimizerMethod::NelderMead ? "nelder-mead" : "coordinate-descent";
}

inline OptimizerMethod parse_optimizer_method(const std::string& s) {
  if (s == "nelder-mead") return OptimizerMethod::NelderMead;
  if (s == "coordinate-descent") return OptimizerMethod::CoordinateDescent;
  throw InvalidInput(fmt::format("unknown optimizer method '{}'", s));
}

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::NelderMead;
  std::size_t max_evals = 4000;
  double tolerance = 1e-10;  // on the objective (energy per site)
  std::size_t restarts = 8;
  std::uint64_t seed = 12345;

  void validate() const {
    if (max_evals == 0) throw InvalidInput("optimizer: max_evals must be positive");
    if (!(tolerance > 0.0)) throw InvalidInput("optimizer: tolerance must be positive");
  }
};

struct MinimizeResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evals = 0;
  bool converged = false;
  std::vector<double> trace;  // best value after each evaluation
};

using Objective = std::function<double(const std::vector<double>&)>;

namespace detail {

/// Counts evaluations and keeps the best point seen.
class TrackedObjective {
 public:
  TrackedObjective(const Objective& f, MinimizeResult& out) : f_(f), out_(out) {}

  double operator()(const std::vector<double>& x) {
    const double v = f_(x);
    ++out_.evals;
    if (v < out_.value) {
      out_.value = v;
      out_.x = x;
    }
    out_.trace.push_back(out_.value);
    return v;
  }

 private:
  const Objective& f_;
  MinimizeResult& out_;
};

struct GslContext {
  TrackedObjective* objective;
  std::vector<double> scratch;
};

inline double gsl_trampoline(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<GslContext*>(params);
  for (std::size_t i = 0; i < ctx->scratch.size(); ++i) ctx->scratch[i] = gsl_vector_get(v, i);
  const double value = (*ctx->objective)(ctx->scratch);
  return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

}  // namespace detail

/// Scalar Brent minimization on [lo, hi].
inline std::pair<double, double> brent_minimize(const std::function<double(double)>& f, double lo,
                                                double hi, std::size_t max_iter = 200) {
  std::uintmax_t iters = max_iter;
  const auto r = boost::math::tools::brent_find_minima(f, lo, hi, std::numeric_limits<double>::digits / 2,
                                                       iters);
  return {r.first, r.second};
}

/// Nelder-Mead from x0 with initial simplex steps `step`. Stops when the best value
/// improves by less than `tolerance` over a window of iterations or the simplex collapses.
inline MinimizeResult nelder_mead(const Objective& f, const std::vector<double>& x0, double step,
                                  std::size_t max_evals, double tolerance) {
  if (x0.empty()) throw InvalidInput("nelder_mead: empty starting point");
  MinimizeResult out;
  detail::TrackedObjective tracked(f, out);
  detail::GslContext ctx{&tracked, std::vector<double>(x0.size())};
  const std::size_t n = x0.size();

  gsl_multimin_function fn;
  fn.n = n;
  fn.f = &detail::gsl_trampoline;
  fn.params = &ctx;

  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* steps = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, x0[i]);
    gsl_vector_set(steps, i, step);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, steps);

  const std::size_t window = 10 * n + 20;
  std::vector<double> history;
  while (out.evals < max_evals) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    history.push_back(out.value);
    const double size = gsl_multimin_fminimizer_size(s);
    if (size < 1e-9) {
      out.converged = true;
      break;
    }
    if (history.size() > window && history[history.size() - 1 - window] - out.value < tolerance &&
        size < 1e-3) {
      out.converged = true;
      break;
    }
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(steps);
  gsl_vector_free(x);
  return out;
}

/// Cyclic coordinate descent; each coordinate is line-searched with Brent on [x_i - span, x_i + span].
inline MinimizeResult coordinate_descent(const Objective& f, const std::vector<double>& x0, double span,
                                         std::size_t max_evals, double tolerance) {
  if (x0.empty()) throw InvalidInput("coordinate_descent: empty starting point");
  MinimizeResult out;
  detail::TrackedObjective tracked(f, out);
  std::vector<double> x = x0;
  double current = tracked(x);
  while (out.evals < max_evals) {
    const double sweep_start = current;
    for (std::size_t i = 0; i < x.size() && out.evals < max_evals; ++i) {
      std::vector<double> probe = x;
      auto line = [&](double t) {
        probe[i] = t;
        return tracked(probe);
      };
      const std::size_t budget = std::min<std::size_t>(60, max_evals - out.evals);
      const auto [t, v] = brent_minimize(line, x[i] - span, x[i] + span, budget);
      if (v < current) {
        x[i] = t;
        current = v;
      }
    }
    if (sweep_start - current < tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

inline MinimizeResult minimize(const OptimizerConfig& config, const Objective& f,
                               const std::vector<double>& x0, double scale) {
  config.validate();
  if (config.method == OptimizerMethod::NelderMead) {
    return nelder_mead(f, x0, scale, config.max_evals, config.tolerance);
  }
  return coordinate_descent(f, x0, scale, config.max_evals, config.tolerance);
}

}  // namespace tmera
