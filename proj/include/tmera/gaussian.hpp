#pragma once

// Covariance-matrix algebra for fermionic Gaussian states.
//
// Conventions used throughout the library:
//   * Majorana operators satisfy {g_i, g_j} = 2 delta_ij (so g_i^2 = 1).
//     Qubit j (0-based) owns g_{2j} = (prod_{k<j} Z_k) X_j and
//     g_{2j+1} = (prod_{k<j} Z_k) Y_j.
//   * Covariance: Gamma_jk = (i/2) tr(rho [g_j, g_k]) = <i g_j g_k> for j != k.
//     A qubit in |0> has the block [[0, -1], [1, 0]].
//   * Hamiltonians: H = i sum_jk h_jk g_j g_k with h real antisymmetric.
//     Then <H> = sum_jk h_jk Gamma_jk and the Gibbs covariance is
//     Gamma = i tanh(2 i beta h). The mode energies eps_k are the positive
//     eigenvalues of 2 i h, so H = sum_k eps_k (2 n_k - 1) and exciting mode k
//     costs 2 eps_k.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tmera/errors.hpp"

namespace tmera {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

inline constexpr double kAntisymmetryTol = 1e-12;
inline constexpr double kSpectralTol = 1e-9;
/// Mode values within this distance of 0 or 1 are treated as exactly 0 or 1.
inline constexpr double kSnapTol = 1e-13;
inline constexpr double kPurityTol = 1e-8;
inline constexpr double kOrthogonalityTol = 1e-10;

namespace detail {

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline void require_square_even(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0) {
    throw InvalidInput(fmt::format("{}: expected an even square matrix, got {}x{}", what,
                                   m.rows(), m.cols()));
  }
}

inline void require_antisymmetric(const Matrix& m, double tol, const char* what) {
  const double defect = max_abs(m + m.transpose());
  if (!(defect <= tol)) {
    throw InvalidInput(fmt::format("{}: matrix is not antisymmetric (max |A + A^T| = {:.3e})",
                                   what, defect));
  }
}

}  // namespace detail

/// Real antisymmetric 2n x 2n matrix describing a Gaussian state of n modes.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;

  /// Validates shape and antisymmetry, then stores the exactly antisymmetric part.
  explicit CovarianceMatrix(Matrix data) {
    detail::require_square_even(data, "CovarianceMatrix");
    detail::require_antisymmetric(data, kAntisymmetryTol * std::max(1.0, detail::max_abs(data)),
                                  "CovarianceMatrix");
    data_ = 0.5 * (data - data.transpose());
  }

  /// Maximally mixed state on n modes.
  static CovarianceMatrix zero(std::size_t n_modes) {
    return CovarianceMatrix(Matrix::Zero(2 * n_modes, 2 * n_modes));
  }

  /// Product of identical single-mode blocks [[0, b], [-b, 0]].
  static CovarianceMatrix product(std::size_t n_modes, double b) {
    Matrix m = Matrix::Zero(2 * n_modes, 2 * n_modes);
    for (std::size_t k = 0; k < n_modes; ++k) {
      m(2 * k, 2 * k + 1) = b;
      m(2 * k + 1, 2 * k) = -b;
    }
    return CovarianceMatrix(std::move(m));
  }

  std::size_t n_modes() const noexcept { return static_cast<std::size_t>(data_.rows()) / 2; }
  std::size_t n_majoranas() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  const Matrix& data() const noexcept { return data_; }
  double operator()(std::size_t i, std::size_t j) const { return data_(i, j); }

  /// Gamma Gamma^T = I within kPurityTol.
  bool is_pure(double tol = kPurityTol) const {
    const Matrix defect = data_ * data_.transpose() - Matrix::Identity(data_.rows(), data_.cols());
    return detail::max_abs(defect) <= tol;
  }

 private:
  Matrix data_;
};

/// H = i sum_jk h_jk g_j g_k with h real antisymmetric.
class QuadraticHamiltonian {
 public:
  QuadraticHamiltonian() = default;

  explicit QuadraticHamiltonian(Matrix couplings) {
    detail::require_square_even(couplings, "QuadraticHamiltonian");
    detail::require_antisymmetric(couplings,
                                  kAntisymmetryTol * std::max(1.0, detail::max_abs(couplings)),
                                  "QuadraticHamiltonian");
    h_ = 0.5 * (couplings - couplings.transpose());
  }

  std::size_t n_modes() const noexcept { return static_cast<std::size_t>(h_.rows()) / 2; }
  std::size_t n_majoranas() const noexcept { return static_cast<std::size_t>(h_.rows()); }
  const Matrix& couplings() const noexcept { return h_; }

 private:
  Matrix h_;
};

/// Critical transverse-field Ising chain of `length` sites written as
/// H = i sum_m g_m g_{m+1} with the anti-periodic closure g_{2L+1} = -g_1.
/// In the even-parity sector this equals -sum_j (X_j X_{j+1} + Z_j) on a ring.
inline QuadraticHamiltonian ising_chain(std::size_t length) {
  if (length == 0) throw InvalidInput("ising_chain: length must be positive");
  const std::size_t n = 2 * length;
  Matrix h = Matrix::Zero(n, n);
  for (std::size_t m = 0; m + 1 < n; ++m) {
    h(m, m + 1) += 0.5;
    h(m + 1, m) -= 0.5;
  }
  // i g_{2L} (-g_1) = i g_1 g_{2L}
  h(0, n - 1) += 0.5;
  h(n - 1, 0) -= 0.5;
  return QuadraticHamiltonian(std::move(h));
}

/// Canonical form Gamma = rotation^T * blockdiag(lambda_j J) * rotation,
/// J = [[0, 1], [-1, 0]], lambda sorted descending.
struct ModeSpectrum {
  std::vector<double> lambdas;
  Matrix rotation;
};

namespace detail {

struct BlockForm {
  Vector values;    // descending, >= 0
  Matrix rotation;  // empty unless requested
};

// A = R^T (+)_k (v_k J) R for a real antisymmetric A, via the Hermitian
// eigenproblem of iA. Eigenvectors v = a + i b of eigenvalue +v give the
// real pair (sqrt2 b, sqrt2 a) as rows of R. Near-zero eigenvalues are
// handled as one real subspace.
inline BlockForm block_decompose(const Matrix& a, bool with_rotation, double zero_tol = 1e-10) {
  const Eigen::Index dim = a.rows();
  const Eigen::Index n = dim / 2;
  BlockForm out;
  out.values = Vector::Zero(n);
  if (n == 0) {
    out.rotation = Matrix(0, 0);
    return out;
  }

  const Eigen::MatrixXcd ia = std::complex<double>(0.0, 1.0) * a.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      ia, with_rotation ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericallyDegenerate("block_decompose: eigensolver failed", 0.0);
  }
  const Vector& evals = solver.eigenvalues();  // ascending
  for (Eigen::Index k = 0; k < n; ++k) out.values(k) = std::max(0.0, evals(dim - 1 - k));
  if (!with_rotation) return out;

  const double scale = std::max(1.0, out.values(0));
  Eigen::Index paired = 0;
  while (paired < n && out.values(paired) > zero_tol * scale) ++paired;

  out.rotation = Matrix::Zero(dim, dim);
  const double root2 = std::sqrt(2.0);
  for (Eigen::Index k = 0; k < paired; ++k) {
    const Eigen::VectorXcd v = solver.eigenvectors().col(dim - 1 - k);
    out.rotation.row(2 * k) = root2 * v.imag().transpose();
    out.rotation.row(2 * k + 1) = root2 * v.real().transpose();
  }

  const Eigen::Index zero_modes = n - paired;
  if (zero_modes > 0) {
    const Eigen::Index width = 2 * zero_modes;
    const Eigen::MatrixXcd mid = solver.eigenvectors().middleCols(paired, width);
    Matrix span(dim, 2 * width);
    span << mid.real(), mid.imag();
    Eigen::ColPivHouseholderQR<Matrix> qr(span);
    const Matrix q = qr.householderQ() * Matrix::Identity(dim, width);
    for (Eigen::Index k = 0; k < width; ++k) out.rotation.row(2 * paired + k) = q.col(k).transpose();
    for (Eigen::Index k = paired; k < n; ++k) out.values(k) = 0.0;
  }
  return out;
}

// R^T * blockdiag(b_k J) * R without forming the block matrix.
inline Matrix assemble_blocks(const Matrix& rotation, const Vector& b) {
  Matrix br(rotation.rows(), rotation.cols());
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    br.row(2 * k) = b(k) * rotation.row(2 * k + 1);
    br.row(2 * k + 1) = -b(k) * rotation.row(2 * k);
  }
  Matrix out = rotation.transpose() * br;
  return 0.5 * (out - out.transpose());
}

inline std::vector<double> clip_spectrum(const Vector& values) {
  std::vector<double> lambdas(static_cast<std::size_t>(values.size()));
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    double v = values(k);
    if (v > 1.0 + kSpectralTol) {
      throw InvalidState(fmt::format(
          "covariance singular value {:.12f} exceeds 1 (not a physical state)", v));
    }
    if (v > 1.0 - kSnapTol) v = 1.0;
    if (v < kSnapTol) v = 0.0;
    lambdas[static_cast<std::size_t>(k)] = v;
  }
  return lambdas;
}

}  // namespace detail

/// Block-diagonalizes a covariance matrix into independent modes.
inline ModeSpectrum mode_spectrum(const CovarianceMatrix& g) {
  auto form = detail::block_decompose(g.data(), true);
  return ModeSpectrum{detail::clip_spectrum(form.values), std::move(form.rotation)};
}

/// Mode values lambda_j only (cheaper; no rotation).
inline std::vector<double> mode_values(const CovarianceMatrix& g) {
  return detail::clip_spectrum(detail::block_decompose(g.data(), false).values);
}

/// Entropy (nats) of a single mode with covariance value lambda.
inline double mode_entropy(double lambda) {
  const double p = 0.5 * (1.0 + lambda);
  const double q = 0.5 * (1.0 - lambda);
  double s = 0.0;
  if (p > 0.0) s -= p * std::log(p);
  if (q > 0.0) s -= q * std::log(q);
  return s;
}

inline double entropy(const CovarianceMatrix& g) {
  double s = 0.0;
  for (double lambda : mode_values(g)) s += mode_entropy(lambda);
  return s;
}

/// tr(rho H) = sum_jk h_jk Gamma_jk.
inline double energy_expectation(const CovarianceMatrix& g, const QuadraticHamiltonian& h) {
  if (g.n_majoranas() != h.n_majoranas()) {
    throw InvalidInput(fmt::format("energy_expectation: dimension mismatch ({} vs {})",
                                   g.n_majoranas(), h.n_majoranas()));
  }
  return (g.data().array() * h.couplings().array()).sum();
}

/// Positive eigenvalues of 2 i h, descending: the mode energies eps_k of H.
inline std::vector<double> single_particle_energies(const QuadraticHamiltonian& h) {
  const Vector v = detail::block_decompose(h.couplings(), false).values;
  std::vector<double> eps(static_cast<std::size_t>(v.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) eps[static_cast<std::size_t>(k)] = 2.0 * v(k);
  return eps;
}

namespace detail {

// lambda of a mode with energy eps at inverse temperature beta.
inline double thermal_lambda(double eps, double beta) {
  if (eps == 0.0) return 0.0;
  if (std::isinf(beta)) return 1.0;
  return std::tanh(beta * eps);
}

inline void require_beta(double beta, const char* what) {
  if (std::isnan(beta) || beta < 0.0) {
    throw InvalidInput(fmt::format("{}: inverse temperature must be >= 0, got {}", what, beta));
  }
}

}  // namespace detail

/// Thermal states of one quadratic Hamiltonian; the eigendecomposition of h
/// is computed once and reused for every temperature.
class GibbsEnsemble {
 public:
  explicit GibbsEnsemble(const QuadraticHamiltonian& h)
      : form_(detail::block_decompose(h.couplings(), true)) {}

  std::size_t n_modes() const noexcept { return static_cast<std::size_t>(form_.values.size()); }

  /// Mode energies eps_k, descending.
  std::vector<double> energies() const {
    std::vector<double> eps(n_modes());
    for (std::size_t k = 0; k < eps.size(); ++k) eps[k] = 2.0 * form_.values(static_cast<Eigen::Index>(k));
    return eps;
  }

  CovarianceMatrix covariance(double beta) const {
    detail::require_beta(beta, "gibbs_covariance");
    Vector b(form_.values.size());
    for (Eigen::Index k = 0; k < b.size(); ++k) {
      b(k) = -detail::thermal_lambda(2.0 * form_.values(k), beta);
    }
    return CovarianceMatrix(detail::assemble_blocks(form_.rotation, b));
  }

  double energy(double beta) const {
    detail::require_beta(beta, "GibbsEnsemble::energy");
    double e = 0.0;
    for (double eps : energies()) e -= eps * detail::thermal_lambda(eps, beta);
    return e;
  }

  double entropy(double beta) const {
    detail::require_beta(beta, "GibbsEnsemble::entropy");
    double s = 0.0;
    for (double eps : energies()) s += mode_entropy(detail::thermal_lambda(eps, beta));
    return s;
  }

  /// -T log Z = -T sum_k log(2 cosh(beta eps_k)); the ground energy at beta = inf.
  double free_energy(double beta) const {
    detail::require_beta(beta, "GibbsEnsemble::free_energy");
    if (std::isinf(beta)) return energy(beta);
    if (beta == 0.0) return -std::numeric_limits<double>::infinity();
    double f = 0.0;
    for (double eps : energies()) {
      const double x = beta * eps;
      // log(2 cosh x) = |x| + log(1 + exp(-2|x|))
      f += std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x)));
    }
    return -f / beta;
  }

 private:
  detail::BlockForm form_;
};

/// Gibbs covariance of h at inverse temperature beta (kInfiniteBeta gives the ground state).
inline CovarianceMatrix gibbs_covariance(const QuadraticHamiltonian& h, double beta) {
  detail::require_beta(beta, "gibbs_covariance");
  return GibbsEnsemble(h).covariance(beta);
}

/// Uhlmann (root) fidelity tr|sqrt(rho) sqrt(sigma)| of two Gaussian states.
///
/// Mixed states: F = 2^{-n/2} det(I - Ga Gb)^{1/4} det(I + sqrt(I + Gt^2))^{1/4}
/// with Gt = (I - Ga Gb)^{-1} (Ga + Gb). If either state is pure,
/// F = |det((Ga + Gb) / 2)|^{1/4}. All determinants are accumulated as logs.
inline double fidelity(const CovarianceMatrix& a, const CovarianceMatrix& b) {
  if (a.n_majoranas() != b.n_majoranas()) {
    throw InvalidInput(fmt::format("fidelity: dimension mismatch ({} vs {})", a.n_majoranas(),
                                   b.n_majoranas()));
  }
  const Eigen::Index dim = static_cast<Eigen::Index>(a.n_majoranas());
  if (dim == 0) return 1.0;
  const Matrix sum = a.data() + b.data();

  if (a.is_pure() || b.is_pure()) {
    Eigen::PartialPivLU<Matrix> lu(0.5 * sum);
    const Matrix& u = lu.matrixLU();
    double logdet = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double d = std::abs(u(k, k));
      if (d == 0.0) return 0.0;
      logdet += std::log(d);
    }
    return std::min(1.0, std::exp(0.25 * logdet));
  }

  const Matrix m = Matrix::Identity(dim, dim) - a.data() * b.data();
  Eigen::PartialPivLU<Matrix> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw NumericallyDegenerate(
        fmt::format("fidelity: I - Ga Gb is singular (rcond = {:.3e})", rcond), rcond);
  }
  double logdet = 0.0;
  const Matrix& u = lu.matrixLU();
  for (Eigen::Index k = 0; k < dim; ++k) logdet += std::log(std::abs(u(k, k)));

  const Matrix tilde = lu.solve(sum);
  Eigen::EigenSolver<Matrix> eig(tilde, false);
  if (eig.info() != Eigen::Success) {
    throw NumericallyDegenerate("fidelity: eigenvalue computation failed", rcond);
  }
  double logroot = 0.0;
  for (const auto& mu : eig.eigenvalues()) {
    logroot += std::log(1.0 + std::sqrt(1.0 + mu * mu)).real();
  }
  const double n = static_cast<double>(dim) / 2.0;
  const double logf = -0.5 * n * std::log(2.0) + 0.25 * logdet + 0.25 * logroot;
  return std::clamp(std::exp(logf), 0.0, 1.0);
}

/// Restriction to a subset of Majorana indices (in the given order).
inline CovarianceMatrix reduce(const CovarianceMatrix& g, std::span<const std::size_t> kept) {
  if (kept.size() % 2 != 0) {
    throw InvalidInput(fmt::format("reduce: need an even number of Majoranas, got {}", kept.size()));
  }
  std::vector<bool> seen(g.n_majoranas(), false);
  for (std::size_t idx : kept) {
    if (idx >= g.n_majoranas()) {
      throw InvalidInput(fmt::format("reduce: index {} out of range ({} Majoranas)", idx,
                                     g.n_majoranas()));
    }
    if (seen[idx]) throw InvalidInput(fmt::format("reduce: duplicate index {}", idx));
    seen[idx] = true;
  }
  const Eigen::Index k = static_cast<Eigen::Index>(kept.size());
  Matrix out(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      out(r, c) = g(kept[static_cast<std::size_t>(r)], kept[static_cast<std::size_t>(c)]);
    }
  }
  return CovarianceMatrix(std::move(out));
}

/// Majorana indices [first, first + count).
inline std::vector<std::size_t> index_range(std::size_t first, std::size_t count) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), first);
  return idx;
}

/// Pure state on 2n modes whose first 2n Majoranas reproduce g. Each mode of
/// g is paired with one ancilla mode in the canonical basis.
inline CovarianceMatrix purify(const CovarianceMatrix& g) {
  const ModeSpectrum spec = mode_spectrum(g);
  const Eigen::Index dim = static_cast<Eigen::Index>(g.n_majoranas());
  Matrix out = Matrix::Zero(2 * dim, 2 * dim);
  out.topLeftCorner(dim, dim) = g.data();
  Matrix coupling = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < spec.lambdas.size(); ++k) {
    const double lambda = spec.lambdas[k];
    const double mu = std::sqrt(std::max(0.0, 1.0 - lambda * lambda));
    const Eigen::Index i = static_cast<Eigen::Index>(2 * k);
    coupling(i, i) = mu;
    coupling(i + 1, i + 1) = mu;
    out(dim + i, dim + i + 1) = -lambda;
    out(dim + i + 1, dim + i) = lambda;
  }
  const Matrix upper = spec.rotation.transpose() * coupling;
  out.topRightCorner(dim, dim) = upper;
  out.bottomLeftCorner(dim, dim) = -upper.transpose();
  return CovarianceMatrix(std::move(out));
}

/// Quadratic Hamiltonian whose Gibbs state at beta is g.
inline QuadraticHamiltonian effective_hamiltonian(const CovarianceMatrix& g, double beta) {
  if (!(beta > 0.0) || std::isinf(beta)) {
    throw InvalidInput(fmt::format("effective_hamiltonian: beta must be finite and > 0, got {}", beta));
  }
  const ModeSpectrum spec = mode_spectrum(g);
  Vector b(static_cast<Eigen::Index>(spec.lambdas.size()));
  for (std::size_t k = 0; k < spec.lambdas.size(); ++k) {
    const double lambda = spec.lambdas[k];
    if (lambda >= 1.0 - kSpectralTol) {
      throw DivergentCoupling(
          fmt::format("effective_hamiltonian: mode {} is (near) pure, lambda = {:.12f}", k, lambda),
          k, lambda);
    }
    b(static_cast<Eigen::Index>(k)) = -std::atanh(lambda) / (2.0 * beta);
  }
  return QuadraticHamiltonian(detail::assemble_blocks(spec.rotation, b));
}

/// O Gamma O^T for an orthogonal O (a Gaussian unitary acting on the state).
inline CovarianceMatrix conjugate_orthogonal(const CovarianceMatrix& g, const Matrix& o) {
  if (o.rows() != o.cols() || static_cast<std::size_t>(o.rows()) != g.n_majoranas()) {
    throw InvalidInput("conjugate_orthogonal: dimension mismatch");
  }
  const double defect = detail::max_abs(o * o.transpose() - Matrix::Identity(o.rows(), o.cols()));
  if (!(defect <= kOrthogonalityTol)) {
    throw InvalidInput(
        fmt::format("conjugate_orthogonal: matrix is not orthogonal (defect {:.3e})", defect));
  }
  return CovarianceMatrix(o * g.data() * o.transpose());
}

/// <g_i g_j>: 1 on the diagonal, -i Gamma_ij otherwise.
inline std::complex<double> two_point(const CovarianceMatrix& g, std::size_t i, std::size_t j) {
  if (i >= g.n_majoranas() || j >= g.n_majoranas()) {
    throw InvalidInput(fmt::format("two_point: index out of range ({}, {})", i, j));
  }
  if (i == j) return {1.0, 0.0};
  return {0.0, -g(i, j)};
}

}  // namespace tmera
