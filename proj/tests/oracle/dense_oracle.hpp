#pragma once

// Dense Hilbert-space reference implementations used only by the tests.
// Everything here works with explicit 2^n x 2^n matrices built from the
// Jordan-Wigner Majorana operators; nothing calls into the covariance-matrix
// code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace oracle {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline CMatrix pauli_x() { CMatrix m(2, 2); m << 0, 1, 1, 0; return m; }
inline CMatrix pauli_y() { CMatrix m(2, 2); m << 0, cd(0, -1), cd(0, 1), 0; return m; }
inline CMatrix pauli_z() { CMatrix m(2, 2); m << 1, 0, 0, -1; return m; }

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Single-qubit operator `op` on qubit `site` of `n` (qubit 0 is the most significant bit).
inline CMatrix embed(const CMatrix& op, std::size_t site, std::size_t n) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (std::size_t q = 0; q < n; ++q) out = kron(out, q == site ? op : CMatrix::Identity(2, 2));
  return out;
}

/// Jordan-Wigner Majoranas g_{2j} = Z..Z X_j, g_{2j+1} = Z..Z Y_j.
inline std::vector<CMatrix> majoranas(std::size_t n) {
  std::vector<CMatrix> out;
  for (std::size_t j = 0; j < n; ++j) {
    for (const CMatrix& p : {pauli_x(), pauli_y()}) {
      CMatrix m = CMatrix::Identity(1, 1);
      for (std::size_t q = 0; q < n; ++q) {
        m = kron(m, q < j ? pauli_z() : (q == j ? p : CMatrix::Identity(2, 2)));
      }
      out.push_back(m);
    }
  }
  return out;
}

/// Gamma_jk = (i/2) tr(rho [g_j, g_k]). Jordan-Wigner strings have one nonzero
/// per row, so the products are taken sparse and the trace read off entrywise.
inline RMatrix covariance_of(const CMatrix& rho, const std::vector<CMatrix>& g) {
  using Sparse = Eigen::SparseMatrix<cd>;
  const auto n = static_cast<Eigen::Index>(g.size());
  std::vector<Sparse> sg;
  for (const CMatrix& m : g) sg.push_back(m.sparseView());
  const auto trace_with = [&](const Sparse& s) {
    cd t = 0;
    for (Eigen::Index col = 0; col < s.outerSize(); ++col)
      for (Sparse::InnerIterator it(s, col); it; ++it) t += it.value() * rho(it.col(), it.row());
    return t;
  };
  RMatrix out = RMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      if (j == k) continue;
      const Sparse comm = Sparse(sg[j] * sg[k]) - Sparse(sg[k] * sg[j]);
      out(j, k) = (cd(0, 0.5) * trace_with(comm)).real();
    }
  return out;
}

/// i sum_jk h_jk g_j g_k.
inline CMatrix hamiltonian(const RMatrix& h, const std::vector<CMatrix>& g) {
  using Sparse = Eigen::SparseMatrix<cd>;
  std::vector<Sparse> sg;
  for (const CMatrix& m : g) sg.push_back(m.sparseView());
  Sparse out(g[0].rows(), g[0].cols());
  for (Eigen::Index j = 0; j < h.rows(); ++j)
    for (Eigen::Index k = 0; k < h.cols(); ++k)
      if (h(j, k) != 0.0) out += Sparse(cd(0, h(j, k)) * (sg[j] * sg[k]));
  return CMatrix(out);
}

/// -sum_j X_j X_{j+1} - sum_j Z_j on a periodic ring.
inline CMatrix ising_spin_ring(std::size_t n) {
  const Eigen::Index dim = Eigen::Index(1) << n;
  CMatrix out = CMatrix::Zero(dim, dim);
  for (std::size_t j = 0; j < n; ++j) {
    out -= embed(pauli_x(), j, n) * embed(pauli_x(), (j + 1) % n, n);
    out -= embed(pauli_z(), j, n);
  }
  return out;
}

/// f(A) for Hermitian A via its eigendecomposition.
template <class F>
CMatrix hermitian_function(const CMatrix& a, F f) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  Eigen::VectorXcd d(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = f(es.eigenvalues()(k));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

inline CMatrix gibbs(const CMatrix& h, double beta) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const double e0 = es.eigenvalues().minCoeff();
  CMatrix rho = hermitian_function(h, [&](double e) { return cd(std::exp(-beta * (e - e0)), 0); });
  return rho / rho.trace();
}

inline CMatrix ground_projector(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const Eigen::VectorXcd v = es.eigenvectors().col(0);
  return v * v.adjoint();
}

inline double von_neumann_entropy(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()));
  double s = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()(k);
    if (p > 1e-15) s -= p * std::log(p);
  }
  return s;
}

/// Root fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)).
inline double uhlmann_fidelity(const CMatrix& rho, const CMatrix& sigma) {
  const CMatrix root = hermitian_function(rho, [](double p) { return cd(std::sqrt(std::max(0.0, p)), 0); });
  const CMatrix inner = root * sigma * root;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (inner + inner.adjoint()));
  double f = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) f += std::sqrt(std::max(0.0, es.eigenvalues()(k)));
  return f;
}

/// exp(A) for anti-Hermitian A.
inline CMatrix expm_antihermitian(const CMatrix& a) {
  const CMatrix herm = cd(0, 1) * a;  // A = -i herm
  return hermitian_function(herm, [](double t) { return std::exp(cd(0, -t)); });
}

/// Gaussian density matrix 2^{-n} prod_k (1 + lambda_k i g'_{2k} g'_{2k+1}), g' = O g.
inline CMatrix gaussian_density(const RMatrix& o, const std::vector<double>& lambdas,
                                const std::vector<CMatrix>& g) {
  const Eigen::Index dim = g[0].rows();
  std::vector<CMatrix> rotated;
  for (Eigen::Index a = 0; a < o.rows(); ++a) {
    CMatrix m = CMatrix::Zero(dim, dim);
    for (Eigen::Index b = 0; b < o.cols(); ++b) m += o(a, b) * g[b];
    rotated.push_back(m);
  }
  CMatrix rho = CMatrix::Identity(dim, dim);
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    rho = rho * (CMatrix::Identity(dim, dim) + cd(0, lambdas[k]) * rotated[2 * k] * rotated[2 * k + 1]);
  }
  return rho / static_cast<double>(dim);
}

/// The two-qubit matchgate in the basis |00>, |01>, |10>, |11>.
inline CMatrix matchgate(double x, double y) {
  CMatrix u = CMatrix::Zero(4, 4);
  u(0, 0) = std::cos(x); u(0, 3) = std::sin(x);
  u(3, 0) = -std::sin(x); u(3, 3) = std::cos(x);
  u(1, 1) = std::cos(y); u(1, 2) = std::sin(y);
  u(2, 1) = -std::sin(y); u(2, 2) = std::cos(y);
  return u;
}

/// Two-qubit gate on adjacent qubits (site, site+1) by Kronecker embedding.
inline CMatrix embed_pair(const CMatrix& u, std::size_t site, std::size_t n) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (std::size_t q = 0; q < n;) {
    if (q == site) { out = kron(out, u); q += 2; }
    else { out = kron(out, CMatrix::Identity(2, 2)); q += 1; }
  }
  return out;
}

/// The matchgate written as a fermionic operator exp(x Ge + y Go) on the four
/// Majoranas (a, b, c, d) of qubits (site, site+1). The wrap-around pair
/// (n-1, 0) uses the anti-periodic images -g_0, -g_1.
inline CMatrix fermionic_gate(double x, double y, std::size_t site, std::size_t n,
                              const std::vector<CMatrix>& g) {
  const std::size_t next = (site + 1) % n;
  const double sign = (next == 0) ? -1.0 : 1.0;
  const CMatrix& a = g[2 * site];
  const CMatrix& b = g[2 * site + 1];
  const CMatrix c = sign * g[2 * next];
  const CMatrix d = sign * g[2 * next + 1];
  const CMatrix ge = 0.5 * (b * d - a * c);
  const CMatrix go = -0.5 * (a * c + b * d);
  return expm_antihermitian(x * ge + y * go);
}

/// Fock-space unitary sending mode j to mode perm[j], with fermionic signs.
inline CMatrix fermionic_permutation(const std::vector<std::size_t>& perm) {
  const std::size_t n = perm.size();
  const Eigen::Index dim = Eigen::Index(1) << n;
  CMatrix p = CMatrix::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    std::vector<std::size_t> targets;
    Eigen::Index out = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if ((s >> (n - 1 - j)) & 1) {
        targets.push_back(perm[j]);
        out |= Eigen::Index(1) << (n - 1 - perm[j]);
      }
    }
    int inversions = 0;
    for (std::size_t i = 0; i < targets.size(); ++i)
      for (std::size_t k = i + 1; k < targets.size(); ++k)
        if (targets[i] > targets[k]) ++inversions;
    p(out, s) = (inversions % 2 == 0) ? 1.0 : -1.0;
  }
  return p;
}

/// Diagonal single-qubit state with <Z> = z.
inline CMatrix diagonal_qubit(double z) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.5 * (1 + z);
  m(1, 1) = 0.5 * (1 - z);
  return m;
}

inline RMatrix random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  RMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<RMatrix> qr(a);
  RMatrix q = qr.householderQ();
  // fix column signs so the distribution is Haar
  const RMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

struct RandomGaussian {
  RMatrix rotation;             // rows are the rotated Majoranas
  std::vector<double> lambdas;  // one per mode
  RMatrix covariance;           // rotation^T blockdiag(lambda J) rotation
};

inline RandomGaussian random_gaussian(std::size_t n_modes, std::mt19937_64& rng, double max_lambda = 1.0,
                                      bool pure = false) {
  std::uniform_real_distribution<double> uni(0.0, max_lambda);
  RandomGaussian out;
  const auto dim = static_cast<Eigen::Index>(2 * n_modes);
  out.rotation = random_orthogonal(dim, rng);
  RMatrix blocks = RMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < n_modes; ++k) {
    const double l = pure ? 1.0 : uni(rng);
    out.lambdas.push_back(l);
    blocks(2 * k, 2 * k + 1) = l;
    blocks(2 * k + 1, 2 * k) = -l;
  }
  out.covariance = out.rotation.transpose() * blocks * out.rotation;
  out.covariance = 0.5 * (out.covariance - out.covariance.transpose());
  return out;
}

inline RMatrix random_antisymmetric(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  RMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  return 0.5 * (a - a.transpose());
}

}  // namespace oracle
