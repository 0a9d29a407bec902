// lie_decomp.hpp — State-dependent Hermitian generators of the wavefunction
// flow, and their coordinates in the orthonormal su(N) basis.
//
// A norm-preserving flow moves |psi> along tangent directions; up to the
// physically irrelevant global-phase component, each such move is a rotation
// generated by a traceless Hermitian operator of the form
//   H = i w |psi><psi| + H.c.,   w = the tangent direction orthogonal to psi,
// which satisfies -iH|psi> = w exactly.  These generators are built here for
// every measurement channel and for the deterministic drift, and expressed as
// real coefficient vectors over the generator basis via g_l = Tr[H E_l].
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "qphase/dynamics.hpp"
#include "qphase/models.hpp"
#include "qphase/operator_algebra.hpp"

namespace qphase {

namespace detail {

// H = i w |p><p| + H.c. for the component w of v orthogonal to the unit ket p.
// Exactly Hermitian by construction; traceless to rounding because
// Tr[H] = -2 Im<p|w> and w is projected orthogonal to p.
inline Operator tangent_hermitian(const Ket& v, const Ket& p) {
  const Ket w = v - p * p.dot(v);
  const Operator h = kI * (w * p.adjoint());
  return h + Operator(h.adjoint());
}

}  // namespace detail

// Generator of the stochastic kick of one measurement channel at state psi:
// H = i(L - <L>)|psi><psi| + H.c.  Vanishes when psi is an eigenvector of L.
inline Operator noise_hermitian(const Operator& l, const Ket& psi) {
  if (l.rows() != l.cols() || l.rows() != psi.size())
    throw std::invalid_argument("noise_hermitian: dimension mismatch");
  const Ket p = normalize(psi);
  return detail::tangent_hermitian(Ket(l * p), p);
}

// Generator of the deterministic flow at state psi: -iH|psi> reproduces the
// component of the deterministic drift orthogonal to |psi>; the discarded
// parallel component only turns the global phase.
inline Operator drift_hermitian(Propagator& prop, const Ket& psi) {
  const Ket p = normalize(psi);
  return detail::tangent_hermitian(prop.drift_deterministic(p), p);
}

inline Operator drift_hermitian(const LindbladModel& model, const Ket& psi) {
  Propagator prop(model);
  return drift_hermitian(prop, psi);
}

// Coordinates of a traceless Hermitian operator in the orthonormal basis:
// g_l = Tr[Hh E_l], with Sum_l g_l E_l recovering Hh.  A trace above 1e-8 or
// an imaginary coefficient residue above 1e-8 signals a bad upstream operator
// and is rejected rather than truncated.
inline Eigen::VectorXd decompose_traceless(const Operator& hh, const GeneratorBasis& basis) {
  if (hh.rows() != hh.cols() || int(hh.rows()) != basis.dim)
    throw std::invalid_argument("decompose_traceless: dimension mismatch");
  if (std::abs(hh.trace()) > 1e-8)
    throw std::invalid_argument("decompose_traceless: operator has nonzero trace");
  Eigen::VectorXd g(basis.count());
  for (int l = 0; l < basis.count(); ++l) {
    const Complex c = basis.generators[std::size_t(l)].transpose().cwiseProduct(hh).sum();
    if (std::abs(c.imag()) > 1e-8)
      throw std::invalid_argument(
          "decompose_traceless: imaginary coefficient residue (non-Hermitian input)");
    g[l] = c.real();
  }
  return g;
}

inline Operator reconstruct_traceless(const Eigen::VectorXd& g, const GeneratorBasis& basis) {
  if (int(g.size()) != basis.count())
    throw std::invalid_argument("reconstruct_traceless: coefficient count mismatch");
  Operator h = Operator::Zero(basis.dim, basis.dim);
  for (int l = 0; l < basis.count(); ++l) h += g[l] * basis.generators[std::size_t(l)];
  return h;
}

// Coordinates of a perturbing Hamiltonian.  The trace part is projected out
// first (a multiple of the identity only turns the global phase), so traceful
// Hermitian inputs such as number operators are accepted.
inline Eigen::VectorXd perturbation_coeffs(const Operator& hp, const GeneratorBasis& basis) {
  if (hp.rows() != hp.cols() || int(hp.rows()) != basis.dim)
    throw std::invalid_argument("perturbation_coeffs: dimension mismatch");
  const double scale = hp.cwiseAbs().maxCoeff();
  if (!is_hermitian(hp, 1e-8 * (1.0 + scale)))
    throw std::invalid_argument("perturbation_coeffs: operator is not Hermitian");
  Operator hh = hp;
  const double tr = hp.trace().real() / double(basis.dim);
  for (int i = 0; i < basis.dim; ++i) hh(i, i) -= tr;
  return decompose_traceless(hh, basis);
}

}  // namespace qphase
