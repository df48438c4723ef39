#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "oracle/dense_oracle.hpp"
#include "tmera/ground.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace tmera;

TEST_CASE("exact ground energy matches the anti-periodic closed form") {
  for (std::size_t l : {4u, 8u, 16u, 64u, 512u}) {
    const double ld = static_cast<double>(l);
    const double closed = -2.0 / (ld * std::sin(std::numbers::pi / (2.0 * ld)));
    CHECK_THAT(exact_ground_energy_per_site(ising_chain(l)), WithinRel(closed, 1e-12));
  }
  CHECK_THAT(exact_ground_energy_per_site(ising_chain(512)), WithinAbs(-4.0 / std::numbers::pi, 5e-6));
}

TEST_CASE("exact ground energy against exact diagonalization") {
  for (std::size_t l : {2u, 3u, 4u}) {
    const QuadraticHamiltonian h = ising_chain(l);
    const auto g = oracle::majoranas(l);
    const oracle::CMatrix hd = oracle::hamiltonian(h.couplings(), g);
    Eigen::SelfAdjointEigenSolver<oracle::CMatrix> es(hd);
    CHECK_THAT(exact_ground_energy_per_site(h), WithinAbs(es.eigenvalues()(0) / static_cast<double>(l), 1e-12));
  }
}

TEST_CASE("ground objective equals the energy of the ground state") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (std::size_t l : {4u, 16u, 64u}) {
    const QuadraticHamiltonian h = ising_chain(l);
    for (std::size_t depth : {1u, 2u, 4u}) {
      std::vector<double> a(2 * depth);
      for (double& v : a) v = u(rng);
      const DmeraCircuit c(a, DmeraCircuit::scales_for_length(l));
      for (auto seed : {SeedConvention::ExactCoarse, SeedConvention::MixedBlock}) {
        const double direct = energy_expectation(ground_state(c, seed), h) / static_cast<double>(l);
        CHECK_THAT(ground_objective(a, l, h, seed), WithinAbs(direct, 1e-11));
        CHECK(ground_objective(a, l, h, seed) >= exact_ground_energy_per_site(h) - 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(ground_objective(std::vector<double>{0.1, 0.2}, 8, ising_chain(16)), InvalidInput);
}

TEST_CASE("optimize_ground respects the variational bound and is deterministic") {
  OptimizerConfig cfg;
  cfg.restarts = 3;
  cfg.max_evals = 1500;
  const GroundResult a = optimize_ground(cfg, 2, 32);
  const GroundResult b = optimize_ground(cfg, 2, 32);
  const double exact = exact_ground_energy_per_site(ising_chain(32));
  CHECK(a.energy_per_site >= exact - 1e-12);
  CHECK(a.energy_per_site - exact < 0.02);
  CHECK(a.angles == b.angles);
  CHECK(a.energy_per_site == b.energy_per_site);
  CHECK(a.angles.size() == 4);
  REQUIRE(a.fidelity_vs_exact.has_value());
  CHECK(*a.fidelity_vs_exact > 0.0);
  CHECK(*a.fidelity_vs_exact <= 1.0 + 1e-12);
  REQUIRE_FALSE(a.trace.empty());
  for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i] <= a.trace[i - 1]);
  CHECK_THAT(a.trace.back(), WithinAbs(a.energy_per_site, 1e-14));
}

TEST_CASE("fidelity is omitted above fidelity_max_length") {
  OptimizerConfig cfg;
  cfg.restarts = 1;
  cfg.max_evals = 200;
  GroundOptions o;
  o.fidelity_max_length = 16;
  CHECK_FALSE(optimize_ground(cfg, 1, 32, o).fidelity_vs_exact.has_value());
}

TEST_CASE("coarse-to-fine optimization polishes at the target length") {
  OptimizerConfig cfg;
  cfg.restarts = 2;
  cfg.max_evals = 1500;
  GroundOptions o;
  o.coarse_length = 16;
  const GroundResult r = optimize_ground(cfg, 2, 128, o);
  CHECK_THAT(ground_objective(r.angles, 128, ising_chain(128)), WithinAbs(r.energy_per_site, 1e-14));
  CHECK(r.energy_per_site >= exact_ground_energy_per_site(ising_chain(128)) - 1e-12);
}

TEST_CASE("depth ladder improves monotonically") {
  OptimizerConfig cfg;
  cfg.restarts = 2;
  cfg.max_evals = 2000;
  const auto ladder = optimize_ground_ladder(cfg, 4, 64);
  REQUIRE(ladder.size() == 4);
  for (std::size_t d = 0; d < ladder.size(); ++d) CHECK(ladder[d].angles.size() == 2 * (d + 1));
  for (std::size_t d = 1; d < ladder.size(); ++d) {
    CHECK(ladder[d].energy_per_site <= ladder[d - 1].energy_per_site + 1e-12);
  }
  const double exact = exact_ground_energy_per_site(ising_chain(64));
  CHECK(ladder.back().energy_per_site - exact < 1e-3);
}

TEST_CASE("a warm start reproducing a shallower optimum is exact") {
  const std::vector<double> a = {0.3, -0.7};
  std::vector<double> padded = a;
  padded.insert(padded.end(), {0.0, 0.0});
  const QuadraticHamiltonian h = ising_chain(32);
  CHECK_THAT(ground_objective(padded, 32, h), WithinAbs(ground_objective(a, 32, h), 1e-13));
}

TEST_CASE("optimize_ground input validation") {
  OptimizerConfig cfg;
  CHECK_THROWS_AS(optimize_ground(cfg, 0, 16), InvalidInput);
  CHECK_THROWS_AS(optimize_ground(cfg, 1, 12), InvalidInput);
  GroundOptions o;
  o.warm_starts = {{0.1, 0.2, 0.3}};
  CHECK_THROWS_AS(optimize_ground(cfg, 1, 16, o), InvalidInput);
  cfg.restarts = 0;
  CHECK_THROWS_AS(optimize_ground(cfg, 1, 16), InvalidInput);
}
