// prc.hpp — Phase response of the limit cycle: the first-order shift of the
// asymptotic phase produced by an instantaneous rotation exp(-i eps H) of the
// on-cycle state, evaluated per SU(N) generator or for an arbitrary Hermitian
// perturbation, plus the real-coordinate chart of a ray (amplitudes and
// relative phases against the last component).
//
// Responses are central differences of the asymptotic phase.  Both branches
// of a difference settle for the same whole number of periods, so the error
// in the period estimate and the bias from not-yet-decayed transversal
// deviations enter both branches identically and cancel; what remains is the
// phase-locating noise divided by eps.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qphase/dynamics.hpp"
#include "qphase/errors.hpp"
#include "qphase/limit_cycle.hpp"
#include "qphase/operator_algebra.hpp"
#include "qphase/parallel.hpp"

namespace qphase {

struct PRCOptions {
  double eps = 1e-4;        // rotation angle of the finite difference
  bool richardson = true;   // combine the eps and eps/2 estimates
  int n_periods = -1;       // settling periods for the asymptotic phase; < 0: estimated
  bool allow_large = false; // permit full generator tables above dimension 12
};

struct PRCTable {
  Eigen::VectorXd theta_grid;   // n_theta phases, uniform on [0, 2*pi)
  Eigen::MatrixXd z;            // n_theta x (N^2 - 1), radians per unit rotation angle
  double epsilon_used = 0.0;
  int periods_used = 0;

  int n_theta() const { return int(theta_grid.size()); }
};

namespace detail {

// Wrap an angle difference into (-pi, pi].
inline double wrap_signed(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  x = std::fmod(x, two_pi);
  if (x <= -std::numbers::pi) x += two_pi;
  if (x > std::numbers::pi) x -= two_pi;
  return x;
}

// exp(-i angle H)|psi> through the spectral decomposition of Hermitian H.
inline Ket rotate_spectral(const Eigen::SelfAdjointEigenSolver<Operator>& es, double angle,
                           const Ket& psi) {
  const Eigen::ArrayXcd phases =
      (es.eigenvalues().array().cast<Complex>() * Complex(0.0, -angle)).exp();
  return es.eigenvectors() * (phases.matrix().asDiagonal() * (es.eigenvectors().adjoint() * psi));
}

inline Ket rotate_by_hermitian(const Operator& h, double angle, const Ket& psi) {
  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("rotate_by_hermitian: eigendecomposition failed");
  return rotate_spectral(es, angle, psi);
}

// Central difference of the asymptotic phase under exp(-i eps H) at the cycle
// point theta.  Falls back to a one-sided difference if one branch leaves the
// region where the asymptotic phase converges; fails only if both do.
inline double phase_slope(const LimitCycle& lc, const Eigen::SelfAdjointEigenSolver<Operator>& es,
                          double theta, double eps, int n_periods) {
  const Ket base = sample_cycle(lc, theta);
  double dp = 0.0, dm = 0.0;
  bool okp = false, okm = false;
  try {
    dp = wrap_signed(isochron_phase(lc, rotate_spectral(es, eps, base), n_periods) - theta);
    okp = true;
  } catch (const NotConvergedError&) {
  }
  try {
    dm = wrap_signed(isochron_phase(lc, rotate_spectral(es, -eps, base), n_periods) - theta);
    okm = true;
  } catch (const NotConvergedError&) {
  }
  if (okp && okm) return (dp - dm) / (2.0 * eps);
  if (okp) return dp / eps;
  if (okm) return -dm / eps;
  throw NotConvergedError("phase_slope: both perturbed states left the asymptotic-phase basin");
}

inline void check_prc_common(const LimitCycle& lc, double eps, const char* fn) {
  if (lc.samples.empty())
    throw std::invalid_argument(std::string(fn) + ": limit cycle is empty");
  if (!(eps >= 1e-6 && eps <= 1e-2))
    throw std::invalid_argument(std::string(fn) + ": eps must lie in [1e-6, 1e-2]");
}

inline double slope_with_options(const LimitCycle& lc, const Operator& h, double theta,
                                 const PRCOptions& opts, int n_periods) {
  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("prc: eigendecomposition of the perturbation failed");
  const double z = phase_slope(lc, es, theta, opts.eps, n_periods);
  if (!opts.richardson) return z;
  const double z_half = phase_slope(lc, es, theta, 0.5 * opts.eps, n_periods);
  return (4.0 * z_half - z) / 3.0;
}

}  // namespace detail

// Number of whole periods after which a small kick off the cycle has settled
// onto it, estimated by following kicked states in three independent
// directions until their overlap deficit against the reference trajectory
// stops changing.  The result (twice the observed settling time, capped at
// 256) is the default settling span for asymptotic-phase evaluations.
inline int settle_periods(const LimitCycle& lc) {
  if (lc.samples.empty()) throw std::invalid_argument("settle_periods: empty limit cycle");
  const Eigen::Index dim = lc.samples.front().size();
  Propagator prop(lc.model);
  const double s = 1.0 / std::numbers::sqrt2;
  Operator sym = Operator::Zero(dim, dim);
  sym(0, 1) = s;
  sym(1, 0) = s;
  Operator asym = Operator::Zero(dim, dim);
  asym(0, 1) = Complex(0.0, -s);
  asym(1, 0) = Complex(0.0, s);
  Operator diag = Operator::Zero(dim, dim);
  diag(0, 0) = s;
  diag(1, 1) = -s;

  int worst = 2;
  for (const Operator& kick : {sym, asym, diag}) {
    Ket ref = lc.samples.front();
    Ket kicked = detail::rotate_by_hermitian(kick, 1e-2, ref);
    double prev = -1.0;
    int p = 1;
    for (; p < 128; ++p) {
      ref = normalize(prop.integrate_deterministic(ref, lc.T, lc.dt_sample));
      kicked = normalize(prop.integrate_deterministic(kicked, lc.T, lc.dt_sample));
      const double d = 1.0 - std::abs(ref.dot(kicked));
      if (p >= 2 && std::abs(d - prev) <= 1e-12 + 1e-3 * std::abs(d)) break;
      prev = d;
    }
    worst = std::max(worst, p);
  }
  return std::min(2 * worst, 256);
}

namespace detail {

inline int resolve_periods(const LimitCycle& lc, const PRCOptions& opts) {
  return opts.n_periods >= 0 ? opts.n_periods : settle_periods(lc);
}

}  // namespace detail

// Phase response to the basis generator E_l at cycle phase theta:
// d Theta / d eps of exp(-i eps E_l)|psi0(theta)>.
inline double prc_generator(const LimitCycle& lc, const GeneratorBasis& basis, int l, double theta,
                            const PRCOptions& opts = {}) {
  detail::check_prc_common(lc, opts.eps, "prc_generator");
  if (basis.dim != lc.samples.front().size())
    throw std::invalid_argument("prc_generator: basis dimension mismatch");
  if (l < 0 || l >= int(basis.generators.size()))
    throw std::invalid_argument("prc_generator: generator index out of range");
  return detail::slope_with_options(lc, basis.generators[l], theta, opts,
                                    detail::resolve_periods(lc, opts));
}

// Phase response to an arbitrary Hermitian perturbation generator.
inline double prc_direct(const LimitCycle& lc, const Operator& hp, double theta,
                         const PRCOptions& opts = {}) {
  detail::check_prc_common(lc, opts.eps, "prc_direct");
  if (hp.rows() != hp.cols() || hp.rows() != lc.samples.front().size())
    throw std::invalid_argument("prc_direct: perturbation dimension mismatch");
  const double scale = hp.size() > 0 ? hp.cwiseAbs().maxCoeff() : 0.0;
  if (!is_hermitian(hp, 1e-8 * (1.0 + scale)))
    throw std::invalid_argument("prc_direct: perturbation must be Hermitian");
  return detail::slope_with_options(lc, hp, theta, opts, detail::resolve_periods(lc, opts));
}

// Full response table: every basis generator at every phase of a uniform
// grid.  Evaluations at distinct (theta, l) are independent and run as a
// parallel map; results are merged positionally, so the table is
// deterministic for a given cycle regardless of the worker count.
inline PRCTable prc_table(const LimitCycle& lc, const GeneratorBasis& basis, int n_theta,
                          const PRCOptions& opts = {}) {
  detail::check_prc_common(lc, opts.eps, "prc_table");
  if (n_theta < 64) throw std::invalid_argument("prc_table: need n_theta >= 64");
  if (lc.samples.front().size() > 12 && !opts.allow_large)
    throw std::invalid_argument(
        "prc_table: full generator table above dimension 12 requires allow_large "
        "(use prc_direct for individual perturbations instead)");
  if (basis.dim != lc.samples.front().size())
    throw std::invalid_argument("prc_table: basis dimension mismatch");

  const int count = int(basis.generators.size());
  const int n_periods = detail::resolve_periods(lc, opts);
  PRCTable t;
  t.theta_grid.resize(n_theta);
  for (int i = 0; i < n_theta; ++i)
    t.theta_grid[i] = 2.0 * std::numbers::pi * double(i) / double(n_theta);
  t.z.resize(n_theta, count);
  t.epsilon_used = opts.eps;
  t.periods_used = n_periods;

  const std::size_t total = std::size_t(n_theta) * std::size_t(count);
  parallel_blocks(total, 16, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const int l = int(idx / std::size_t(n_theta));
      const int i = int(idx % std::size_t(n_theta));
      try {
        Eigen::SelfAdjointEigenSolver<Operator> es(basis.generators[l]);
        double z = detail::phase_slope(lc, es, t.theta_grid[i], opts.eps, n_periods);
        if (opts.richardson) {
          const double z_half =
              detail::phase_slope(lc, es, t.theta_grid[i], 0.5 * opts.eps, n_periods);
          z = (4.0 * z_half - z) / 3.0;
        }
        if (!std::isfinite(z)) throw NotConvergedError("non-finite response");
        t.z(i, l) = z;
      } catch (const std::exception& e) {
        throw NotConvergedError("prc_table: evaluation failed at theta=" +
                                std::to_string(t.theta_grid[i]) + ", l=" + std::to_string(l) +
                                ": " + e.what());
      }
    }
  });
  return t;
}

// Real chart of a normalized ray: amplitudes of the first N-1 components and
// their phases relative to the last component, v = (r_1..r_{N-1},
// phi_1..phi_{N-1}) with r_i >= 0 and phi_i in [0, 2*pi).  The chart is
// invariant under a global phase and drops the redundant last amplitude
// (recoverable from normalization), so it has 2N-2 entries.
inline Eigen::VectorXd project_real(const Ket& psi) {
  const Eigen::Index n = psi.size();
  if (n < 2) throw std::invalid_argument("project_real: need dimension >= 2");
  if (std::abs(psi.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("project_real: state must be unit-normalized");
  const Complex ref = psi[n - 1];
  if (std::abs(ref) < 1e-12)
    throw std::invalid_argument(
        "project_real: reference (last) component vanishes, chart gauge undefined");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double arg_ref = std::arg(ref);
  Eigen::VectorXd v(2 * n - 2);
  for (Eigen::Index i = 0; i < n - 1; ++i) {
    const double r = std::abs(psi[i]);
    v[i] = r;
    double phi = 0.0;
    if (r > 0.0) {
      phi = std::fmod(std::arg(psi[i]) - arg_ref, two_pi);
      if (phi < 0.0) phi += two_pi;
      if (phi >= two_pi) phi = 0.0;
    }
    v[n - 1 + i] = phi;
  }
  return v;
}

}  // namespace qphase
