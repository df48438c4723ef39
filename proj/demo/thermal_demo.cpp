// Small end-to-end run: optimize a D = 3 ground circuit for L = 64, then
// compare the optimized TMERA states with the exact Gibbs states.

#include <iostream>

#include <fmt/format.h>

#include "tmera/bench.hpp"

int main() {
  tmera::RunConfig config;
  config.length = 64;
  config.depth = 3;
  config.t_points = 9;

  const tmera::GroundResult ground = tmera::ground_for_run(config);
  fmt::print("ground energy per site {:.8f} (exact {:.8f})\n", ground.energy_per_site,
             tmera::exact_ground_energy_per_site(tmera::ising_chain(config.length)));

  const tmera::DmeraCircuit circuit(ground.angles, tmera::DmeraCircuit::scales_for_length(config.length));
  const tmera::SweepReport sweep = tmera::fidelity_sweep(config, circuit);
  const tmera::CurveTable curve = tmera::entropy_energy_curve(sweep);

  fmt::print("{:>10} {:>10} {:>9} {:>12} {:>12}\n", "T", "reduced T", "F", "dS (bits)", "dE");
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& p = sweep.points[i];
    const auto& row = curve.rows[i];
    fmt::print("{:>10.4f} {:>10.4f} {:>9.4f} {:>12.5f} {:>12.5f}\n", p.temperature,
               tmera::reduced_temperature(p.temperature), p.fidelity, row.entropy_deficit_bits, row.energy_deficit);
  }
  return 0;
}
