#pragma once

// Matchgate circuits acting on covariance matrices.
//
// Qubit k owns Majoranas (2k, 2k+1). A scale transformation on m qubits puts
// the old qubit k at position 2k, a fresh qubit at 2k+1, and then applies a
// periodic brickwork of D sublayers. Sublayer d acts on the pairs
// (2j + d % 2, 2j + d % 2 + 1); the pair that wraps around the ring is closed
// anti-periodically, matching the fermion boundary of ising_chain.

#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <fmt/format.h>

#include "tmera/errors.hpp"
#include "tmera/gaussian.hpp"

namespace tmera {

using Block = Eigen::Matrix2d;
using Rotation4 = Eigen::Matrix4d;

/// Old qubits land on even positions after interleaving, new ones on odd.
inline constexpr std::size_t kOldQubitParity = 0;

struct LocalGate {
  double x = 0.0;
  double y = 0.0;
  std::size_t site = 0;
};

/// Heisenberg action of u(x, y) on the Majoranas (a, b, c, d) of a qubit pair:
/// u^dag g_j u = sum_k R_jk g_k, so a state transforms as Gamma -> R Gamma R^T.
/// x rotates the even-parity pair {|00>, |11>}, y the odd pair {|01>, |10>}.
inline Rotation4 gate_rotation(double x, double y) {
  const double a = x + y;
  const double b = x - y;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  Rotation4 r;
  r << ca, 0, -sa, 0,
       0, cb, 0, sb,
       sa, 0, ca, 0,
       0, -sb, 0, cb;
  return r;
}

inline Rotation4 gate_rotation(const LocalGate& gate) { return gate_rotation(gate.x, gate.y); }

/// The pure single-mode block of a qubit in |0>.
inline Block pure_block() {
  Block b;
  b << 0, -1, 1, 0;
  return b;
}

namespace detail {

inline void require_block(const Block& block, const char* what) {
  if (std::abs(block(0, 0)) > kAntisymmetryTol || std::abs(block(1, 1)) > kAntisymmetryTol ||
      std::abs(block(0, 1) + block(1, 0)) > kAntisymmetryTol) {
    throw InvalidInput(fmt::format("{}: mode block must be antisymmetric", what));
  }
  if (std::abs(block(0, 1)) > 1.0 + kSpectralTol) {
    throw InvalidInput(fmt::format("{}: mode block value {} exceeds 1", what, block(0, 1)));
  }
}

inline void require_angles(std::span<const double> angles, const char* what) {
  if (angles.size() % 2 != 0) {
    throw InvalidInput(fmt::format("{}: need an (x, y) pair per sublayer, got {} values", what,
                                   angles.size()));
  }
  for (double a : angles) {
    if (!std::isfinite(a)) throw InvalidInput(fmt::format("{}: angles must be finite", what));
  }
}

/// Majorana indices touched by the gate on qubits (site, site + 1 mod n).
inline std::array<Eigen::Index, 4> gate_support(std::size_t site, std::size_t n_qubits) {
  const std::size_t next = (site + 1) % n_qubits;
  return {static_cast<Eigen::Index>(2 * site), static_cast<Eigen::Index>(2 * site + 1),
          static_cast<Eigen::Index>(2 * next), static_cast<Eigen::Index>(2 * next + 1)};
}

/// Rotation for the gate at `site`; the wrap-around gate sees -g_0, -g_1.
inline Rotation4 gate_rotation_at(double x, double y, std::size_t site, std::size_t n_qubits) {
  Rotation4 r = gate_rotation(x, y);
  if (site + 1 == n_qubits) {
    r.topRightCorner<2, 2>() *= -1.0;
    r.bottomLeftCorner<2, 2>() *= -1.0;
  }
  return r;
}

/// Sites of the gates in a sublayer with the given offset.
inline std::vector<std::size_t> sublayer_sites(std::size_t n_qubits, std::size_t offset,
                                               bool periodic) {
  std::vector<std::size_t> sites;
  for (std::size_t s = offset % 2; s + 1 < n_qubits || (periodic && s < n_qubits); s += 2) {
    sites.push_back(s);
  }
  return sites;
}

/// m.rows(idx) <- r * m.rows(idx).
inline void rotate_rows(Matrix& m, const std::array<Eigen::Index, 4>& idx, const Rotation4& r) {
  Eigen::Matrix<double, 4, Eigen::Dynamic> rows = m(idx, Eigen::all);
  m(idx, Eigen::all) = r * rows;
}

/// m.cols(idx) <- m.cols(idx) * r^T.
inline void rotate_cols(Matrix& m, const std::array<Eigen::Index, 4>& idx, const Rotation4& r) {
  Eigen::Matrix<double, Eigen::Dynamic, 4> cols = m(Eigen::all, idx);
  m(Eigen::all, idx) = cols * r.transpose();
}

/// Applies one sublayer O to the rows (m -> O m) and, if `both`, the columns too.
/// The chain's Majoranas start at index `base` of m.
inline void apply_sublayer(Matrix& m, std::size_t n_qubits, double x, double y,
                           std::size_t offset, bool periodic, bool both, Eigen::Index base = 0) {
  for (std::size_t site : sublayer_sites(n_qubits, offset, periodic)) {
    auto idx = gate_support(site, n_qubits);
    for (auto& i : idx) i += base;
    const Rotation4 r = gate_rotation_at(x, y, site, n_qubits);
    rotate_rows(m, idx, r);
    if (both) rotate_cols(m, idx, r);
  }
}

/// Interleaves old qubits (even positions) with new ones (odd positions) carrying `block`.
inline Matrix interleave(const Matrix& g, const Block& block) {
  const Eigen::Index m = g.rows() / 2;
  Matrix out = Matrix::Zero(4 * m, 4 * m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      out.block<2, 2>(4 * a, 4 * b) = g.block<2, 2>(2 * a, 2 * b);
    }
    out.block<2, 2>(4 * a + 2, 4 * a + 2) = block;
  }
  return out;
}

}  // namespace detail

/// Applies D = angles.size() / 2 sublayers; sublayer d uses (angles[2d], angles[2d+1]).
inline CovarianceMatrix apply_brickwork(const CovarianceMatrix& g, std::span<const double> angles,
                                        bool periodic = true) {
  detail::require_angles(angles, "apply_brickwork");
  const std::size_t n = g.n_modes();
  if (n % 2 != 0) {
    throw InvalidInput(fmt::format("apply_brickwork: qubit count {} must be even", n));
  }
  Matrix m = g.data();
  for (std::size_t d = 0; 2 * d < angles.size(); ++d) {
    detail::apply_sublayer(m, n, angles[2 * d], angles[2 * d + 1], d, periodic, true);
  }
  return CovarianceMatrix(std::move(m));
}

/// Doubles the system: interleave fresh modes carrying `new_mode_cov`, then a periodic brickwork.
inline CovarianceMatrix scale_transform(const CovarianceMatrix& g, std::span<const double> angles,
                                        const Block& new_mode_cov) {
  detail::require_angles(angles, "scale_transform");
  detail::require_block(new_mode_cov, "scale_transform");
  const std::size_t n = 2 * g.n_modes();
  Matrix m = detail::interleave(g.data(), new_mode_cov);
  for (std::size_t d = 0; 2 * d < angles.size(); ++d) {
    detail::apply_sublayer(m, n, angles[2 * d], angles[2 * d + 1], d, true, true);
  }
  return CovarianceMatrix(std::move(m));
}

/// Brickwork angles shared across translations and scales.
struct DmeraCircuit {
  std::size_t depth = 0;
  std::vector<double> angles;
  std::size_t n_scales = 0;
  std::size_t seed_modes = 2;

  DmeraCircuit() = default;
  DmeraCircuit(std::vector<double> angle_values, std::size_t scales, std::size_t seed = 2)
      : depth(angle_values.size() / 2), angles(std::move(angle_values)), n_scales(scales),
        seed_modes(seed) {
    validate();
  }

  /// A circuit with all angles zero producing a chain of `length` qubits.
  static DmeraCircuit for_length(std::size_t length, std::size_t depth, std::size_t seed = 2) {
    return DmeraCircuit(std::vector<double>(2 * depth, 0.0), scales_for_length(length, seed), seed);
  }

  static std::size_t scales_for_length(std::size_t length, std::size_t seed = 2) {
    if (seed == 0 || length < seed || length % seed != 0) {
      throw InvalidInput(fmt::format("length {} is not seed_modes * 2^k (seed_modes = {})", length, seed));
    }
    std::size_t ratio = length / seed;
    std::size_t k = 0;
    while (ratio > 1) {
      if (ratio % 2 != 0) {
        throw InvalidInput(fmt::format("length {} is not seed_modes * 2^k (seed_modes = {})", length, seed));
      }
      ratio /= 2;
      ++k;
    }
    return k;
  }

  std::size_t length() const noexcept { return seed_modes << n_scales; }

  /// Number of fresh modes introduced at scale ell (1-based); scale 0 is the seed.
  std::size_t modes_at_scale(std::size_t ell) const noexcept {
    return ell == 0 ? seed_modes : seed_modes << (ell - 1);
  }

  void validate() const {
    if (angles.size() != 2 * depth) {
      throw InvalidInput(fmt::format("circuit: expected {} angles for depth {}, got {}", 2 * depth,
                                     depth, angles.size()));
    }
    detail::require_angles(angles, "circuit");
    if (seed_modes == 0 || seed_modes % 2 != 0) {
      throw InvalidInput(fmt::format("circuit: seed_modes must be positive and even, got {}", seed_modes));
    }
  }
};

/// Folds scale_transform over all scales; blocks[ell - 1] enters at scale ell.
inline CovarianceMatrix build_state(const DmeraCircuit& circuit, std::span<const Block> blocks,
                                    const CovarianceMatrix& seed) {
  circuit.validate();
  if (blocks.size() != circuit.n_scales) {
    throw InvalidInput(fmt::format("build_state: {} blocks for {} scales", blocks.size(),
                                   circuit.n_scales));
  }
  if (seed.n_modes() != circuit.seed_modes) {
    throw InvalidInput(fmt::format("build_state: seed has {} modes, circuit expects {}",
                                   seed.n_modes(), circuit.seed_modes));
  }
  for (const Block& b : blocks) detail::require_block(b, "build_state");
  Matrix m = seed.data();
  for (std::size_t ell = 0; ell < circuit.n_scales; ++ell) {
    m = detail::interleave(m, blocks[ell]);
    const std::size_t n = static_cast<std::size_t>(m.rows()) / 2;
    for (std::size_t d = 0; d < circuit.depth; ++d) {
      detail::apply_sublayer(m, n, circuit.angles[2 * d], circuit.angles[2 * d + 1], d, true, true);
    }
  }
  return CovarianceMatrix(std::move(m));
}

/// Orthogonal map W from input modes to output Majoranas: Gamma_out = W Gamma_in W^T.
/// Input modes are ordered seed first, then scale 1, 2, ... in order of position.
struct WaveletBasis {
  Matrix total_rotation;
  std::vector<std::size_t> scale_of_mode;
  std::size_t n_scales = 0;

  std::size_t n_modes() const noexcept { return scale_of_mode.size(); }

  /// Input mode indices introduced at scale ell.
  std::vector<std::size_t> modes_in_scale(std::size_t ell) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < scale_of_mode.size(); ++k) {
      if (scale_of_mode[k] == ell) out.push_back(k);
    }
    return out;
  }

  /// Assembles the input-basis covariance from a seed block and per-scale blocks.
  Matrix input_covariance(const CovarianceMatrix& seed, std::span<const Block> blocks) const {
    const Eigen::Index dim = total_rotation.cols();
    Matrix g = Matrix::Zero(dim, dim);
    const Eigen::Index s = static_cast<Eigen::Index>(seed.n_majoranas());
    g.topLeftCorner(s, s) = seed.data();
    for (std::size_t k = static_cast<std::size_t>(s / 2); k < scale_of_mode.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(2 * k);
      g.block<2, 2>(i, i) = blocks[scale_of_mode[k] - 1];
    }
    return g;
  }
};

inline WaveletBasis wavelet_basis(const DmeraCircuit& circuit) {
  circuit.validate();
  const std::size_t length = circuit.length();
  const auto dim = static_cast<Eigen::Index>(2 * length);
  WaveletBasis basis;
  basis.n_scales = circuit.n_scales;
  basis.scale_of_mode.assign(circuit.seed_modes, 0);

  // Rows: Majoranas of the current chain. Columns: all input Majoranas.
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(2 * circuit.seed_modes), dim);
  w.leftCols(w.rows()).setIdentity();
  std::size_t next_mode = circuit.seed_modes;
  for (std::size_t ell = 1; ell <= circuit.n_scales; ++ell) {
    const Eigen::Index m = w.rows() / 2;
    Matrix grown = Matrix::Zero(4 * m, dim);
    for (Eigen::Index k = 0; k < m; ++k) {
      grown.middleRows<2>(4 * k) = w.middleRows<2>(2 * k);
      const auto col = static_cast<Eigen::Index>(2 * next_mode);
      grown(4 * k + 2, col) = 1.0;
      grown(4 * k + 3, col + 1) = 1.0;
      basis.scale_of_mode.push_back(ell);
      ++next_mode;
    }
    for (std::size_t d = 0; d < circuit.depth; ++d) {
      detail::apply_sublayer(grown, static_cast<std::size_t>(2 * m), circuit.angles[2 * d],
                             circuit.angles[2 * d + 1], d, true, false);
    }
    w = std::move(grown);
  }
  basis.total_rotation = std::move(w);
  return basis;
}

/// Squared overlaps of each scale's wavelet modes with the energy eigenmodes of h.
struct EnergySupport {
  std::vector<double> energies;  // ascending mode energies, one per column
  Matrix weight;                 // rows: scales 0..n_scales; each row sums to its mode count
};

inline EnergySupport wavelet_energy_support(const WaveletBasis& basis, const QuadraticHamiltonian& h) {
  const Matrix& w = basis.total_rotation;
  if (h.couplings().rows() != w.rows()) {
    throw InvalidInput(fmt::format("wavelet_energy_support: basis has {} Majoranas, h has {}",
                                   w.rows(), h.couplings().rows()));
  }
  const Eigen::MatrixXcd ih = std::complex<double>(0.0, 2.0) * h.couplings().cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ih);
  const Eigen::Index n = static_cast<Eigen::Index>(basis.n_modes());
  const Eigen::Index dim = 2 * n;

  EnergySupport out;
  out.weight = Matrix::Zero(static_cast<Eigen::Index>(basis.n_scales + 1), n);
  // Eigenvalues come in +- pairs sorted ascending; the upper half are the mode energies.
  const Eigen::MatrixXcd modes = es.eigenvectors().rightCols(n);
  const Eigen::MatrixXcd proj = w.transpose().cast<std::complex<double>>() * modes;  // input x mode
  for (Eigen::Index a = 0; a < n; ++a) {
    out.energies.push_back(es.eigenvalues()(dim - n + a));
    for (Eigen::Index k = 0; k < n; ++k) {
      const double p = std::norm(proj(2 * k, a)) + std::norm(proj(2 * k + 1, a));
      out.weight(static_cast<Eigen::Index>(basis.scale_of_mode[static_cast<std::size_t>(k)]), a) += p;
    }
  }
  return out;
}

/// How the coarsest seed_modes qubits are prepared.
enum class SeedConvention {
  ExactCoarse,  // lambda times the pure ground covariance of ising_chain(seed_modes)
  MixedBlock,   // product of single-mode blocks, like every other input mode
};

/// Seed covariance with mode value lambda (1 gives the pure seed).
inline CovarianceMatrix seed_state(SeedConvention convention, std::size_t seed_modes, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidInput(fmt::format("seed_state: mode value {} outside [0, 1]", lambda));
  }
  if (convention == SeedConvention::MixedBlock) return CovarianceMatrix::product(seed_modes, -lambda);
  const CovarianceMatrix ground = gibbs_covariance(ising_chain(seed_modes), kInfiniteBeta);
  return CovarianceMatrix(lambda * ground.data());
}

/// Energy of a circuit output as an affine function of its input mode values.
///
/// Every mode of one scale couples identically to h (the circuit and the chain are
/// both invariant under a twisted translation), so with input blocks
/// [[0, -lambda_l], [lambda_l, 0]] the energy is
///   E = sum(seed_coupling .* Gamma_seed) - sum_l count_l * kappa_l * lambda_l.
/// Flipping one mode of scale l from lambda = 1 to -1 costs 2 kappa_l.
struct ModeCouplings {
  std::vector<double> kappa;       // scales 1..n_scales
  std::vector<std::size_t> count;  // modes per scale
  Matrix seed_coupling;            // W_s^T h W_s on the seed Majoranas

  double energy(const CovarianceMatrix& seed, std::span<const double> lambdas) const {
    if (lambdas.size() != kappa.size()) {
      throw InvalidInput(fmt::format("ModeCouplings::energy: {} values for {} scales", lambdas.size(),
                                     kappa.size()));
    }
    double e = seed_coupling.cwiseProduct(seed.data()).sum();
    for (std::size_t l = 0; l < kappa.size(); ++l) {
      e -= static_cast<double>(count[l]) * kappa[l] * lambdas[l];
    }
    return e;
  }
};

namespace detail {

/// Carries columns defined on the chain after scale `from_scale` out to the full length.
inline Matrix push_to_output(Matrix cols, const DmeraCircuit& c, std::size_t from_scale) {
  for (std::size_t ell = from_scale + 1; ell <= c.n_scales; ++ell) {
    const Eigen::Index m = cols.rows() / 2;
    Matrix grown = Matrix::Zero(4 * m, cols.cols());
    for (Eigen::Index k = 0; k < m; ++k) grown.middleRows<2>(4 * k) = cols.middleRows<2>(2 * k);
    for (std::size_t d = 0; d < c.depth; ++d) {
      apply_sublayer(grown, static_cast<std::size_t>(2 * m), c.angles[2 * d], c.angles[2 * d + 1], d,
                     true, false);
    }
    cols = std::move(grown);
  }
  return cols;
}

inline Eigen::SparseMatrix<double> sparse_couplings(const QuadraticHamiltonian& h) {
  return h.couplings().sparseView(1.0, 0.0);
}

}  // namespace detail

inline ModeCouplings mode_couplings(const DmeraCircuit& circuit, const QuadraticHamiltonian& h) {
  circuit.validate();
  if (h.n_modes() != circuit.length()) {
    throw InvalidInput(fmt::format("mode_couplings: h has {} modes, circuit produces {}", h.n_modes(),
                                   circuit.length()));
  }
  const Eigen::SparseMatrix<double> hs = detail::sparse_couplings(h);
  ModeCouplings out;
  const auto s = static_cast<Eigen::Index>(2 * circuit.seed_modes);
  const Matrix ws = detail::push_to_output(Matrix::Identity(s, s), circuit, 0);
  out.seed_coupling = ws.transpose() * (hs * ws);
  for (std::size_t ell = 1; ell <= circuit.n_scales; ++ell) {
    // representative fresh mode: qubit 1 of the chain just after interleaving
    const auto m = static_cast<Eigen::Index>(circuit.seed_modes << ell);
    Matrix cols = Matrix::Zero(2 * m, 2);
    cols(2, 0) = 1.0;
    cols(3, 1) = 1.0;
    for (std::size_t d = 0; d < circuit.depth; ++d) {
      detail::apply_sublayer(cols, static_cast<std::size_t>(m), circuit.angles[2 * d],
                             circuit.angles[2 * d + 1], d, true, false);
    }
    cols = detail::push_to_output(std::move(cols), circuit, ell);
    out.kappa.push_back(2.0 * cols.col(0).dot(hs * cols.col(1)));
    out.count.push_back(circuit.modes_at_scale(ell));
  }
  return out;
}

/// Writes the circuit as `key = value` lines: depth, n_scales, seed_modes, angles.
inline void write_circuit(std::ostream& os, const DmeraCircuit& c) {
  os << fmt::format("depth = {}\n", c.depth);
  os << fmt::format("n_scales = {}\n", c.n_scales);
  os << fmt::format("seed_modes = {}\n", c.seed_modes);
  os << "angles =";
  for (double a : c.angles) os << fmt::format(" {:.17g}", a);
  os << "\n";
}

inline DmeraCircuit read_circuit(std::istream& is) {
  std::size_t depth = 0, n_scales = 0, seed_modes = 2;
  std::vector<double> angles;
  bool have_depth = false, have_scales = false, have_angles = false;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw InvalidInput(fmt::format("circuit file: malformed line '{}'", line));
    }
    std::istringstream key_stream(line.substr(0, eq));
    std::string key;
    key_stream >> key;
    std::istringstream value(line.substr(eq + 1));
    if (key == "depth") {
      value >> depth;
      have_depth = true;
    } else if (key == "n_scales") {
      value >> n_scales;
      have_scales = true;
    } else if (key == "seed_modes") {
      value >> seed_modes;
    } else if (key == "angles") {
      double a;
      while (value >> a) angles.push_back(a);
      if (!value.eof()) throw InvalidInput("circuit file: unparsable angle list");
      have_angles = true;
    } else {
      throw InvalidInput(fmt::format("circuit file: unknown key '{}'", key));
    }
    if (value.fail() && key != "angles") {
      throw InvalidInput(fmt::format("circuit file: bad value for '{}'", key));
    }
  }
  if (!have_depth || !have_scales || !have_angles) {
    throw InvalidInput("circuit file: depth, n_scales and angles are required");
  }
  DmeraCircuit c(std::move(angles), n_scales, seed_modes);
  if (c.depth != depth) {
    throw InvalidInput(fmt::format("circuit file: depth {} but {} angles", depth, c.angles.size()));
  }
  return c;
}

}  // namespace tmera
