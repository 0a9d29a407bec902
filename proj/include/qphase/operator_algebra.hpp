// operator_algebra.hpp — Dense complex kets/operators, boson and spin
// constructors, and the orthonormal traceless Hermitian generator basis of
// su(N) used to decompose state-dependent Hermitian observables.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "qphase/errors.hpp"

namespace qphase {

using Complex = std::complex<double>;
using Ket = Eigen::VectorXcd;
using Operator = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};

// ---- small helpers ----

inline Operator commutator(const Operator& a, const Operator& b) {
  return a * b - b * a;
}

// Hilbert-Schmidt inner product <A,B> = Tr[A^dag B].
inline Complex hs_inner(const Operator& a, const Operator& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hs_inner: shape mismatch");
  return (a.adjoint() * b).trace();
}

inline bool is_hermitian(const Operator& a, double tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// Spectral norm of a Hermitian operator (largest |eigenvalue|).
inline double hermitian_norm(const Operator& a) {
  Eigen::SelfAdjointEigenSolver<Operator> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hermitian_norm: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline Ket normalize(const Ket& psi) {
  double n = psi.norm();
  if (n < 1e-300) throw std::invalid_argument("normalize: zero vector");
  return psi / n;
}

inline Complex expectation(const Ket& psi, const Operator& o) {
  if (o.rows() != o.cols() || o.rows() != psi.size())
    throw std::invalid_argument("expectation: shape mismatch");
  return psi.dot(o * psi);  // Eigen's dot conjugates the left argument
}

// Expectation of a Hermitian operator; verifies Hermiticity and discards the
// numerically zero imaginary part.
inline double expectation_real(const Ket& psi, const Operator& o) {
  if (!is_hermitian(o, 1e-10))
    throw std::invalid_argument("expectation_real: operator is not Hermitian");
  return expectation(psi, o).real();
}

// Fix the global U(1) phase: rotate so the largest-magnitude amplitude
// (lowest index on ties) becomes real and non-negative.
inline Ket gauge_fix(const Ket& psi) {
  if (psi.size() == 0) throw std::invalid_argument("gauge_fix: empty vector");
  Eigen::Index pivot = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    double m = std::abs(psi[i]);
    if (m > best) {
      best = m;
      pivot = i;
    }
  }
  if (best < 1e-300)
    throw std::invalid_argument("gauge_fix: gauge reference amplitude is zero");
  Complex phase = psi[pivot] / best;
  return psi * std::conj(phase);
}

// ---- boson and spin operators ----

// Truncated Fock-space annihilation operator: a|m> = sqrt(m)|m-1>, m < n.
inline Operator make_annihilation(int n) {
  if (n < 2) throw std::invalid_argument("make_annihilation: need n >= 2");
  Operator a = Operator::Zero(n, n);
  for (int m = 0; m + 1 < n; ++m) a(m, m + 1) = std::sqrt(double(m + 1));
  return a;
}

struct SpinOps {
  Operator sx, sy, sz;
};

// Spin operators for spin j = two_j/2 in the basis ordered by descending
// magnetic quantum number, so sz = diag(j, j-1, ..., -j).
inline SpinOps make_spin(int two_j) {
  if (two_j < 1) throw std::invalid_argument("make_spin: need two_j >= 1");
  const int n = two_j + 1;
  const double j = 0.5 * two_j;
  Operator jp = Operator::Zero(n, n);  // raising operator, maps m -> m+1
  for (int idx = 1; idx < n; ++idx) {
    double m = j - idx;  // row idx-1 holds m+1
    jp(idx - 1, idx) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  Operator jm = jp.adjoint();
  SpinOps s;
  s.sx = 0.5 * (jp + jm);
  s.sy = -0.5 * kI * (jp - jm);
  s.sz = Operator::Zero(n, n);
  for (int idx = 0; idx < n; ++idx) s.sz(idx, idx) = j - idx;
  return s;
}

// Ladder combinations S+- = (Sx +- i Sy)/sqrt(2).
inline Operator spin_plus(const SpinOps& s) { return (s.sx + kI * s.sy) / std::sqrt(2.0); }
inline Operator spin_minus(const SpinOps& s) { return (s.sx - kI * s.sy) / std::sqrt(2.0); }

// ---- su(N) generator basis ----

// Orthonormal basis {E_l} of traceless Hermitian N x N matrices,
// Tr[E_m E_n] = delta_mn.  Ordering: symmetric off-diagonal family in (j,k)
// lexicographic order, then the antisymmetric family in the same order, then
// the diagonal family.  For N = 2 these are the Pauli matrices / sqrt(2).
struct GeneratorBasis {
  int dim = 0;
  std::vector<Operator> generators;

  int count() const { return dim * dim - 1; }

  // 0-based j < k throughout.
  int pair_offset(int j, int k) const {
    if (j < 0 || k <= j || k >= dim)
      throw std::invalid_argument("GeneratorBasis: bad index pair");
    return j * dim - j * (j + 1) / 2 + (k - j - 1);
  }
  int sym_index(int j, int k) const { return pair_offset(j, k); }
  int asym_index(int j, int k) const { return dim * (dim - 1) / 2 + pair_offset(j, k); }
  // d = 1..N-1 selects the diagonal generator supported on the first d+1 levels.
  int diag_index(int d) const {
    if (d < 1 || d >= dim) throw std::invalid_argument("GeneratorBasis: bad diagonal index");
    return dim * (dim - 1) + (d - 1);
  }

  const Operator& sym(int j, int k) const { return generators[sym_index(j, k)]; }
  const Operator& asym(int j, int k) const { return generators[asym_index(j, k)]; }
  const Operator& diag(int d) const { return generators[diag_index(d)]; }
};

inline GeneratorBasis make_generator_basis(int n) {
  if (n < 2) throw std::invalid_argument("make_generator_basis: need n >= 2");
  GeneratorBasis basis;
  basis.dim = n;
  basis.generators.reserve(n * n - 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  // Symmetric: (|j><k| + |k><j|)/sqrt(2).
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      Operator e = Operator::Zero(n, n);
      e(j, k) = inv_sqrt2;
      e(k, j) = inv_sqrt2;
      basis.generators.push_back(std::move(e));
    }
  // Antisymmetric: (-i|j><k| + i|k><j|)/sqrt(2); for N = 2 this is sigma_y/sqrt(2).
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      Operator e = Operator::Zero(n, n);
      e(j, k) = -kI * inv_sqrt2;
      e(k, j) = kI * inv_sqrt2;
      basis.generators.push_back(std::move(e));
    }
  // Diagonal: sqrt(1/(d(d+1))) (sum_{l<=d} |l><l| - d |d+1><d+1|), d = 1..N-1.
  for (int d = 1; d < n; ++d) {
    Operator e = Operator::Zero(n, n);
    double c = std::sqrt(1.0 / (double(d) * (d + 1)));
    for (int l = 0; l < d; ++l) e(l, l) = c;
    e(d, d) = -double(d) * c;
    basis.generators.push_back(std::move(e));
  }
  return basis;
}

}  // namespace qphase
