#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "oracle/dense_oracle.hpp"
#include "tmera/bench.hpp"
#include "tmera/config.hpp"
#include "tmera/report.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace tmera;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_run_config(is);
}

RunConfig small_config(std::size_t length, std::size_t depth) {
  RunConfig c;
  c.length = length;
  c.depth = depth;
  c.t_points = 9;
  c.ground_restarts = 2;
  c.ground_max_evals = 1500;
  c.schedule_max_evals = 1500;
  return c;
}

const DmeraCircuit& circuit_32() {
  static const DmeraCircuit c = [] {
    const GroundResult g = ground_for_run(small_config(32, 2));
    return DmeraCircuit(g.angles, DmeraCircuit::scales_for_length(32));
  }();
  return c;
}

}  // namespace

TEST_CASE("exact_reference against exact diagonalization") {
  for (std::size_t l : {2u, 3u, 4u}) {
    const QuadraticHamiltonian h = ising_chain(l);
    const auto g = oracle::majoranas(l);
    const oracle::CMatrix hd = oracle::hamiltonian(h.couplings(), g);
    for (double beta : {0.1, 0.7, 2.0, 9.0}) {
      const ExactReference ref = exact_reference(h, beta);
      const oracle::CMatrix rho = oracle::gibbs(hd, beta);
      const double e = (rho * hd).trace().real();
      const double s = oracle::von_neumann_entropy(rho);
      CHECK_THAT(ref.energy, WithinAbs(e, 1e-10));
      CHECK_THAT(ref.entropy, WithinAbs(s, 1e-10));
      CHECK_THAT(ref.free_energy, WithinAbs(e - s / beta, 1e-10));
      CHECK((ref.covariance.data() - oracle::covariance_of(rho, g)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("reduced temperature") {
  CHECK(reduced_temperature(3.0) == 1.5);
  CHECK(physical_temperature(reduced_temperature(0.37)) == 0.37);
  // A mode at reduced temperature tau has occupation tanh(E / tau) in the
  // i tanh(i beta h) convention, which is the physical Gibbs weight at T = 2 tau.
  const QuadraticHamiltonian h = ising_chain(8);
  const double tau = 0.3;
  const Matrix& m = h.couplings();
  const CovarianceMatrix g = gibbs_covariance(h, 1.0 / physical_temperature(tau));
  const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(std::complex<double>(0, 1) * m.cast<std::complex<double>>() /
                                                       tau);
  // i tanh(i h / tau) through the eigendecomposition of the Hermitian i h / tau
  const Eigen::MatrixXcd v = es.eigenvectors();
  Eigen::VectorXcd t = es.eigenvalues();
  for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = std::tanh(t(k));
  const Eigen::MatrixXcd th = v * t.asDiagonal() * v.inverse();
  const Matrix expected = (std::complex<double>(0, 1) * th).real();
  CHECK((g.data() - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("site infidelity") {
  CHECK(site_infidelity(1.0, 100) == 0.0);
  CHECK_THAT(site_infidelity(0.5, 1), WithinAbs(0.5, 1e-15));
  CHECK_THAT(site_infidelity(1.0 - 0x1p-46, 512), WithinRel(0x1p-46 / 512, 1e-9));
  CHECK(site_infidelity(0.0, 8) == 1.0);
  CHECK(site_infidelity(std::nan(""), 8) == 1.0);
}

TEST_CASE("run config parsing") {
  const RunConfig c = parse(
      "# benchmark\n"
      "L = 128\n"
      "D = 4\n\n"
      "  t_max = 4.5  \n"
      "t_points = 11\n"
      "schedule_mode = scaling\n"
      "seed_state = mixed-block\n"
      "emit_plots = true\n"
      "output_dir = out dir\n");
  CHECK(c.length == 128);
  CHECK(c.depth == 4);
  CHECK(c.t_max == 4.5);
  CHECK(c.t_points == 11);
  CHECK(c.schedule_mode == ScheduleForm::Scaling);
  CHECK(c.seed_state == SeedConvention::MixedBlock);
  CHECK(c.emit_plots);
  CHECK(c.output_dir == "out dir");
  CHECK(c.lowest_temperature() == 2.0 / 128);

  std::ostringstream os;
  write_run_config(os, c);
  const RunConfig back = parse(os.str());
  CHECK(back.length == c.length);
  CHECK(back.t_max == c.t_max);
  CHECK(back.schedule_mode == c.schedule_mode);
  CHECK(back.seed_state == c.seed_state);
  CHECK(back.output_dir == c.output_dir);
}

TEST_CASE("run config errors") {
  CHECK_THROWS_AS(parse("L = 64\nL = 32\n"), ConfigError);
  CHECK_THROWS_AS(parse("depth = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("L 64\n"), ConfigError);
  CHECK_THROWS_AS(parse("L = 48\n"), ConfigError);
  CHECK_THROWS_AS(parse("L = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("D = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse("D = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("t_max = hot\n"), ConfigError);
  CHECK_THROWS_AS(parse("t_min = 2\nt_max = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("schedule_mode = linear\n"), ConfigError);
  CHECK_THROWS_AS(parse("seed_state = random\n"), ConfigError);
  CHECK_THROWS_AS(parse("emit_plots = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse("t_points = 0\n"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/run.cfg"), ConfigError);
  try {
    parse("L = 64\nfoo = 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK_THAT(e.what(), ContainsSubstring("line 2") && ContainsSubstring("foo"));
  }
}

TEST_CASE("temperature grid") {
  RunConfig c;
  c.length = 512;
  const auto t = temperature_grid(c);
  REQUIRE(t.size() == 25);
  CHECK(t.front() == 2.0 / 512);
  CHECK(t.back() == 16.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    CHECK(t[i] > t[i - 1]);
    if (i + 1 < t.size()) CHECK_THAT(t[i + 1] / t[i], WithinRel(t[i] / t[i - 1], 1e-12));
  }
  c.t_points = 1;
  c.t_min = c.t_max = 0.5;
  CHECK(temperature_grid(c) == std::vector<double>{0.5});
}

TEST_CASE("fit_line") {
  const std::vector<double> x = {0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(2.5 * v - 1.0);
  const LineFit f = fit_line(x, y);
  CHECK_THAT(f.slope, WithinAbs(2.5, 1e-14));
  CHECK_THAT(f.intercept, WithinAbs(-1.0, 1e-14));
  CHECK_THAT(f.residual, WithinAbs(0.0, 1e-14));
  CHECK(f.n_points == 5);
  y[2] += 1.0;
  CHECK(fit_line(x, y).residual > 0.1);
  CHECK_THROWS_AS(fit_line({1.0}, {2.0}), InvalidInput);
  CHECK_THROWS_AS(fit_line({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), InvalidInput);
}

TEST_CASE("low_t_scaling recovers planted exponents") {
  SweepReport r;
  r.length = 512;
  r.exact_ground_energy_per_site = -1.27;
  for (int k = 0; k < 20; ++k) {
    SweepPoint p;
    p.temperature = 0.01 * std::pow(1.3, k);
    p.entropy_per_site = 0.7 * p.temperature;
    p.energy_per_site = r.exact_ground_energy_per_site + 0.3 * p.temperature * p.temperature;
    r.points.push_back(p);
  }
  const LowTScaling s = low_t_scaling(r);
  CHECK_THAT(s.entropy.slope, WithinAbs(1.0, 1e-10));
  CHECK_THAT(s.energy.slope, WithinAbs(2.0, 1e-10));
  CHECK(s.t_lo == 8.0 / 512);
  CHECK(s.t_hi == 1.0);
  CHECK_THROWS_AS(low_t_scaling(r, 0.02), InvalidInput);
}

TEST_CASE("Gibbs curve inverts energy and entropy") {
  const GibbsEnsemble ens(ising_chain(64));
  const GibbsCurve curve(ens);
  for (double beta : {0.05, 0.5, 2.0, 10.0}) {
    CHECK_THAT(curve.entropy_at_energy(ens.energy(beta)), WithinRel(ens.entropy(beta), 1e-9));
    CHECK_THAT(curve.energy_at_entropy(ens.entropy(beta)), WithinRel(ens.energy(beta), 1e-9));
  }
  CHECK(curve.entropy_at_energy(ens.energy(kInfiniteBeta) - 1.0) == 0.0);
  CHECK_THAT(curve.entropy_at_energy(1.0), WithinRel(64 * std::numbers::ln2, 1e-15));
}

TEST_CASE("ansatz free energy never beats the Gibbs state") {
  const RunConfig cfg = small_config(32, 2);
  const SweepReport r = fidelity_sweep(cfg, circuit_32(), true);
  REQUIRE(r.points.size() == 9);
  for (const SweepPoint& p : r.points) {
    INFO("T = " << p.temperature);
    CHECK(p.note.empty());
    CHECK(p.exact_free_energy_per_site <= p.free_energy_per_site + 1e-12);
    CHECK(p.fidelity > 0.0);
    CHECK(p.fidelity <= 1.0 + 1e-12);
    CHECK(p.site_infidelity < 2e-2);
    // the analytic entropy agrees with the entropy of the built state
    const TmeraState st = build_tmera(circuit_32(), p.schedule, cfg.seed_state);
    CHECK_THAT(entropy(st.covariance) / 32.0, WithinAbs(p.entropy_per_site, 1e-9));
    CHECK_THAT(energy_expectation(st.covariance, ising_chain(32)) / 32.0, WithinAbs(p.energy_per_site, 1e-9));
  }
}

TEST_CASE("entropy-energy curve lies on the correct side of the Gibbs line") {
  const CurveTable t = entropy_energy_curve(fidelity_sweep(small_config(32, 2), circuit_32(), false));
  REQUIRE(t.rows.size() == 9);
  for (const CurveRow& row : t.rows) {
    CHECK(row.gibbs_gap_entropy_bits >= -1e-9);
    CHECK(row.gibbs_gap_energy >= -1e-9);
    CHECK(row.entropy_bits >= 0.0);
    CHECK(row.entropy_bits <= 1.0 + 1e-12);
  }
  for (const CurveRow& row : t.rows) {
    CHECK(row.entropy_deficit_bits <= t.max_entropy_deficit().entropy_deficit_bits);
    CHECK(row.energy_deficit <= t.max_energy_deficit().energy_deficit);
  }
}

TEST_CASE("correlation profile of a product state and the Gibbs ensemble") {
  // Infinite temperature: the maximally mixed state has no correlations at all.
  const CorrelationProfile hot = correlation_profile(gibbs_covariance(ising_chain(16), 0.0));
  CHECK(hot.values.size() == 16);
  CHECK(hot.underflow);

  const GibbsEnsemble ens(ising_chain(256));
  double previous = 0.0;
  for (double t : {0.25, 0.5, 1.0, 2.0}) {
    const CorrelationProfile p = correlation_profile(ens.covariance(1.0 / t));
    const CorrelationFit f = fit_correlations(p, {1, 60, true});
    INFO("T = " << t);
    CHECK(f.exponential_rate > previous);
    previous = f.exponential_rate;
  }
  // ground state: power law with Majorana exponent 1 at odd distances
  const CorrelationFit g =
      fit_correlations(correlation_profile(ens.covariance(kInfiniteBeta)), DistanceWindow::tail(256));
  CHECK_THAT(g.power_exponent, WithinAbs(1.0, 0.1));
}

TEST_CASE("fit_correlations needs three usable distances") {
  CorrelationProfile p;
  p.values = {0.5, 0.0, 0.1, 0.0, 1e-20};
  CHECK_THROWS_AS(fit_correlations(p, {1, 5, true}), InvalidInput);
  p.values[4] = 0.02;
  CHECK_NOTHROW(fit_correlations(p, {1, 5, true}));
}

TEST_CASE("octave concentration") {
  EnergySupport s;
  s.energies = {0.1, 0.2, 0.3, 0.5, 1.0, 1.9};
  s.weight = Matrix::Zero(2, 6);
  s.weight.row(0) << 0, 0, 0, 1, 2, 0;   // all inside [0.5, 1.0]
  s.weight.row(1) << 1, 1, 1, 0, 0, 1;   // 3 of 4 inside [0.1, 0.2] or [0.2, 0.4]
  const auto bands = octave_concentration(s);
  REQUIRE(bands.size() == 2);
  CHECK_THAT(bands[0].fraction, WithinAbs(1.0, 1e-15));
  CHECK(bands[0].lower == 0.5);
  CHECK_THAT(bands[1].fraction, WithinAbs(0.5, 1e-15));
}

TEST_CASE("report formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(json_number(std::nan("")).is_null());
  CHECK(json_number(2.0) == 2.0);
  CsvTable t({"a", "b"});
  t.add({"1", "x"});
  CHECK(t.str() == "a,b\n1,x\n");
  CHECK_THROWS_AS(t.add({"1"}), InvalidInput);
}

TEST_CASE("sweep CSV is byte-identical across runs") {
  const RunConfig cfg = small_config(16, 2);
  const std::string a = sweep_table(fidelity_sweep(cfg, true)).str();
  const std::string b = sweep_table(fidelity_sweep(cfg, true)).str();
  CHECK(a == b);
  CHECK_THAT(a, StartsWith("temperature,reduced_temperature,"));
  const std::string json = sweep_json(fidelity_sweep(cfg, false)).dump();
  CHECK_THAT(json, ContainsSubstring("\"kind\":\"sweep\""));
}

TEST_CASE("output directory") {
  const auto root = std::filesystem::temp_directory_path() / "tmera_test_outdir";
  std::filesystem::remove_all(root);
  const OutputDir out(root / "nested");
  out.write("x.txt", "hello");
  std::ifstream in(root / "nested" / "x.txt");
  std::string s;
  in >> s;
  CHECK(s == "hello");
  CHECK(out.write_plot("p.svg", {"t", "x", "y", false, false, {{"s", {1, 2}, {3, 4}}}}));
  CHECK(std::filesystem::exists(root / "nested" / "p.svg"));
  // a path below a regular file cannot be created
  CHECK_THROWS_AS(OutputDir(root / "nested" / "x.txt" / "sub"), ConfigError);
  std::filesystem::remove_all(root);
}
