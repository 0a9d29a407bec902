// analysis.hpp — Validation layer: state fidelity and trace distance, density
// reconstruction from phase histograms, phase-space quasiprobability
// transforms (Fock-basis Wigner, bosonic and spin Husimi), the classical
// oscillator reference, and histogram distances.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qphase/dynamics.hpp"
#include "qphase/errors.hpp"
#include "qphase/limit_cycle.hpp"
#include "qphase/operator_algebra.hpp"
#include "qphase/parallel.hpp"
#include "qphase/phase_equation.hpp"

namespace qphase {

namespace detail {

// Eigen-decompose a claimed density operator, enforcing Hermiticity, unit
// trace, and positivity up to a routine rounding allowance.  Negatives beyond
// -1e-6 are rejected as genuinely invalid states; smaller ones are the
// caller's to clip.
inline Eigen::SelfAdjointEigenSolver<Operator> density_eigs(const Operator& rho,
                                                            const char* fn) {
  if (rho.rows() != rho.cols() || rho.rows() < 1)
    throw std::invalid_argument(std::string(fn) + ": state is not a square matrix");
  if (!is_hermitian(rho, 1e-10))
    throw std::invalid_argument(std::string(fn) + ": state is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-8)
    throw std::invalid_argument(std::string(fn) + ": state trace differs from one");
  Eigen::SelfAdjointEigenSolver<Operator> es(rho);
  if (es.info() != Eigen::Success)
    throw std::runtime_error(std::string(fn) + ": eigendecomposition failed");
  if (es.eigenvalues().minCoeff() < -1e-6)
    throw std::invalid_argument(std::string(fn) + ": state has negative eigenvalues");
  return es;
}

}  // namespace detail

// ---- state distances ----

namespace detail {

// Square roots of eigenvalues with rank-deficiency noise suppressed: values
// below a relative floor are rounding debris of exact zeros, and taking their
// square root would inflate them from 1e-16 to 1e-8.
inline Eigen::VectorXd clipped_sqrt(const Eigen::VectorXd& ev) {
  const double floor = ev.cwiseAbs().maxCoeff() * 1e-14;
  const Eigen::ArrayXd a = ev.array();
  return ((a < floor).select(0.0, a)).sqrt().matrix();
}

}  // namespace detail

// Uhlmann fidelity (Tr sqrt(sqrt(r1) r2 sqrt(r1)))^2 via Hermitian
// eigen-decompositions, clipped into [0, 1].
inline double fidelity(const Operator& rho1, const Operator& rho2) {
  if (rho1.rows() != rho2.rows())
    throw std::invalid_argument("fidelity: dimension mismatch");
  const auto es1 = detail::density_eigs(rho1, "fidelity");
  detail::density_eigs(rho2, "fidelity");
  const Eigen::VectorXd root = detail::clipped_sqrt(es1.eigenvalues());
  const Operator sq = es1.eigenvectors() * root.asDiagonal() * es1.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Operator> es(Operator(sq * rho2 * sq), Eigen::EigenvaluesOnly);
  const double s = detail::clipped_sqrt(es.eigenvalues()).sum();
  return std::clamp(s * s, 0.0, 1.0);
}

// Trace distance (1/2) ||r1 - r2||_1 of two Hermitian operators.
inline double trace_distance(const Operator& rho1, const Operator& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols() || rho1.rows() != rho1.cols())
    throw std::invalid_argument("trace_distance: dimension mismatch");
  const Operator diff = rho1 - rho2;
  if (!is_hermitian(diff, 1e-8 * (1.0 + diff.cwiseAbs().maxCoeff())))
    throw std::invalid_argument("trace_distance: operators are not Hermitian");
  Eigen::SelfAdjointEigenSolver<Operator> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ---- reconstruction ----

// Midpoint-rule mixture of cycle projectors weighted by the phase density:
// rho = sum_i P_i dtheta |psi0(theta_i)><psi0(theta_i)|.
inline Operator reconstruct_density(const Histogram& hist, const LimitCycle& lc) {
  if (hist.n_bins() < 1)
    throw std::invalid_argument("reconstruct_density: empty histogram");
  if (lc.samples.empty())
    throw std::invalid_argument("reconstruct_density: limit cycle has no samples");
  const int dim = int(lc.samples.front().size());
  Operator rho = Operator::Zero(dim, dim);
  const double dth = hist.bin_width();
  for (int i = 0; i < hist.n_bins(); ++i) {
    const double w = hist.density[i] * dth;
    if (w == 0.0) continue;
    const Ket psi = sample_cycle(lc, hist.bin_center(i));
    rho += w * (psi * psi.adjoint());
  }
  return rho;
}

// ---- phase-space transforms ----

// Rectangular evaluation window.  Non-positive half-widths select the default
// sqrt(2 N) + 2 covering the truncated state's support.
struct PhaseSpaceSpec {
  double x_half = 0.0;
  double p_half = 0.0;
  int nx = 201;
  int np = 201;
};

// Uniform rectangular grid of quasiprobability values; values(i, j) belongs
// to the point (x[i], p[j]).  For the spin transform the coordinates are the
// polar and azimuthal sphere angles instead.
struct PhaseSpaceGrid {
  Eigen::VectorXd x;
  Eigen::VectorXd p;
  Eigen::MatrixXd values;

  // Riemann sum over the uniform grid (no area weight for sphere grids).
  double integral() const {
    if (x.size() < 2 || p.size() < 2) return 0.0;
    const double dx = x[1] - x[0], dp = p[1] - p[0];
    return values.sum() * dx * dp;
  }
};

// Wigner value at one point of the x-p plane for a truncated Fock-basis
// state, from the displaced-parity series: each Fock diagonal d contributes
// generalized Laguerre terms L_k^{(d)}(4|a|^2) under a shared Gaussian
// envelope.  Normalized so a unit-trace state integrates to one over dx dp.
inline double wigner_point(const Operator& rho, double x, double p) {
  const int n = int(rho.rows());
  const Complex beta = Complex(x, p) * std::numbers::sqrt2;  // 2 alpha
  const double y = std::norm(beta);
  const double envelope = std::exp(-0.5 * y);
  double acc = 0.0;
  Complex beta_pow(1.0, 0.0);
  double inv_sqrt_dfact = 1.0;  // 1 / sqrt(d!)
  for (int d = 0; d < n; ++d) {
    if (d > 0) {
      beta_pow *= beta;
      inv_sqrt_dfact /= std::sqrt(double(d));
    }
    double lkm1 = 0.0, lk = 1.0;  // L_{k-1}, L_k at k = 0
    double ratio = inv_sqrt_dfact;  // sqrt(k! / (k+d)!)
    double sign = 1.0;              // (-1)^k
    for (int k = 0; k + d < n; ++k) {
      if (k > 0) {
        const double next =
            ((2.0 * k - 1.0 + d - y) * lk - (k - 1.0 + d) * lkm1) / double(k);
        lkm1 = lk;
        lk = next;
        ratio *= std::sqrt(double(k) / double(k + d));
        sign = -sign;
      }
      const double weight =
          d == 0 ? rho(k, k).real() : 2.0 * (rho(k, k + d) * beta_pow).real();
      acc += sign * ratio * weight * lk;
    }
  }
  return acc * envelope / std::numbers::pi;
}

// Husimi value at one point of the x-p plane: overlap of the state with the
// coherent ray at alpha = (x + ip)/sqrt(2), density over d^2 alpha.  Rounding
// negatives are clipped at zero.
inline double husimi_point(const Operator& rho, double x, double p) {
  const int n = int(rho.rows());
  const Complex alpha = Complex(x, p) / std::numbers::sqrt2;
  Ket c(n);
  Complex amp = std::exp(Complex(-0.5 * std::norm(alpha), 0.0));
  for (int k = 0; k < n; ++k) {
    c[k] = amp;
    amp *= alpha / std::sqrt(double(k + 1));
  }
  return std::max(0.0, c.dot(rho * c).real()) / std::numbers::pi;
}

// Husimi value on the sphere for a spin state (basis ordered m = j .. -j):
// overlap with the spin-coherent ray at polar angle theta_sph, azimuth
// phi_sph, weighted (2j+1)/(4 pi) so the sphere integral is one.
inline double husimi_spin_point(const Operator& rho, double theta_sph, double phi_sph) {
  const int n = int(rho.rows());
  if (n < 2) throw std::invalid_argument("husimi_spin_point: need a spin state (dim >= 2)");
  const double j2 = double(n - 1);
  const double ct = std::cos(0.5 * theta_sph), st = std::sin(0.5 * theta_sph);
  Ket c(n);
  double binom = 1.0;  // C(2j, i)
  for (int i = 0; i < n; ++i) {
    c[i] = std::sqrt(binom) * std::pow(ct, j2 - double(i)) * std::pow(st, double(i)) *
           std::exp(kI * (double(i) * phi_sph));
    binom *= (j2 - double(i)) / double(i + 1);
  }
  return std::max(0.0, c.dot(rho * c).real()) * double(n) / (4.0 * std::numbers::pi);
}

namespace detail {

template <typename PointFn>
inline PhaseSpaceGrid fill_grid(const Eigen::VectorXd& xs, const Eigen::VectorXd& ps,
                                const PointFn& fn) {
  PhaseSpaceGrid g;
  g.x = xs;
  g.p = ps;
  g.values.resize(xs.size(), ps.size());
  parallel_blocks(std::size_t(xs.size()), 8,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i)
                      for (Eigen::Index j = 0; j < ps.size(); ++j)
                        g.values(Eigen::Index(i), j) = fn(xs[Eigen::Index(i)], ps[j]);
                  });
  return g;
}

inline void resolve_window(PhaseSpaceSpec& spec, int dim, const char* fn) {
  if (spec.nx < 2 || spec.np < 2)
    throw std::invalid_argument(std::string(fn) + ": need at least a 2x2 grid");
  const double def = std::sqrt(2.0 * double(dim)) + 2.0;
  if (spec.x_half <= 0.0) spec.x_half = def;
  if (spec.p_half <= 0.0) spec.p_half = def;
}

}  // namespace detail

// Wigner transform over a uniform x-p window (row-parallel).
inline PhaseSpaceGrid wigner(const Operator& rho, PhaseSpaceSpec spec = {}) {
  detail::density_eigs(rho, "wigner");
  const int n = int(rho.rows());
  detail::resolve_window(spec, n, "wigner");
  if (rho(n - 1, n - 1).real() > 1e-3)
    std::cerr << "wigner: top basis level holds population " << rho(n - 1, n - 1).real()
              << "; the truncated transform may misrepresent the tail\n";
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(spec.nx, -spec.x_half, spec.x_half);
  const Eigen::VectorXd ps = Eigen::VectorXd::LinSpaced(spec.np, -spec.p_half, spec.p_half);
  return detail::fill_grid(xs, ps,
                           [&](double x, double p) { return wigner_point(rho, x, p); });
}

// Husimi transform over a uniform x-p window (row-parallel).
inline PhaseSpaceGrid husimi_q(const Operator& rho, PhaseSpaceSpec spec = {}) {
  detail::density_eigs(rho, "husimi_q");
  detail::resolve_window(spec, int(rho.rows()), "husimi_q");
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(spec.nx, -spec.x_half, spec.x_half);
  const Eigen::VectorXd ps = Eigen::VectorXd::LinSpaced(spec.np, -spec.p_half, spec.p_half);
  return detail::fill_grid(xs, ps,
                           [&](double x, double p) { return husimi_point(rho, x, p); });
}

// Spin Husimi transform on the sphere: midpoint polar grid (so the sin-theta
// quadrature never hits the poles) by a uniform azimuth grid.
inline PhaseSpaceGrid husimi_q_spin(const Operator& rho, int n_theta = 101, int n_phi = 201) {
  detail::density_eigs(rho, "husimi_q_spin");
  if (n_theta < 2 || n_phi < 2)
    throw std::invalid_argument("husimi_q_spin: need at least a 2x2 grid");
  Eigen::VectorXd ts(n_theta), fs(n_phi);
  for (int i = 0; i < n_theta; ++i)
    ts[i] = std::numbers::pi * (double(i) + 0.5) / double(n_theta);
  for (int j = 0; j < n_phi; ++j) fs[j] = 2.0 * std::numbers::pi * double(j) / double(n_phi);
  return detail::fill_grid(
      ts, fs, [&](double t, double f) { return husimi_spin_point(rho, t, f); });
}

// ---- classical oscillator reference ----

// Closed-form data of the classical amplitude equation: radial fixed point,
// rotation frequency, and the sinusoidal response to a kick along +x with the
// phase origin at the +x axis crossing.
struct SemiclassicalVdp {
  double epsilon = 0.0;        // net one-particle gain rate
  double r_star = 0.0;         // cycle radius of the complex amplitude
  double x_amplitude = 0.0;    // sqrt(2) r_star, the position amplitude
  double omega = 0.0;          // rotation frequency of the polar angle
  double prc_amplitude = 0.0;  // 1 / x_amplitude

  double prc_reference(double theta) const { return -prc_amplitude * std::sin(theta); }
};

inline SemiclassicalVdp semiclassical_vdp(double delta, double g1g, double g1d, double g2d) {
  if (!(g2d > 0.0))
    throw std::invalid_argument("semiclassical_vdp: need gamma2d > 0");
  const double eps = g1g - g1d;
  if (eps <= 0.0)
    throw NoCycleError("semiclassical_vdp: no classical cycle (net linear gain <= 0)");
  SemiclassicalVdp r;
  r.epsilon = eps;
  r.r_star = std::sqrt(eps / (2.0 * g2d));
  r.x_amplitude = std::numbers::sqrt2 * r.r_star;
  r.omega = delta;
  r.prc_amplitude = 1.0 / r.x_amplitude;
  return r;
}

// ---- trajectory-phase statistics ----

struct SsePhaseOptions {
  int n_traj = 1;
  double t_end = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  int n_bins = 64;
  SseScheme scheme = SseScheme::ito_euler;
  int sample_stride = 8;          // phase readout cadence in steps
  double discard_fraction = 0.2;  // leading transient dropped per trajectory
};

// Pooled phase histogram of monitored trajectories: each trajectory starts on
// the cycle (initial phases stratified over the circle), evolves under the
// chosen measurement scheme with its own counter-based noise stream, and after
// the transient its state is projected onto the nearest cycle phase at the
// readout cadence.  Integer bin counts merged in block order make the result
// independent of the worker count.
inline Histogram sse_phase_histogram(const LimitCycle& lc, const SsePhaseOptions& o,
                                     int workers = 0) {
  if (lc.samples.empty())
    throw std::invalid_argument("sse_phase_histogram: empty limit cycle");
  if (o.n_traj < 1) throw std::invalid_argument("sse_phase_histogram: n_traj >= 1");
  if (!(o.dt > 0.0) || !(o.t_end >= o.dt))
    throw std::invalid_argument("sse_phase_histogram: need 0 < dt <= t_end");
  if (o.n_bins < 2) throw std::invalid_argument("sse_phase_histogram: n_bins >= 2");
  if (o.sample_stride < 1)
    throw std::invalid_argument("sse_phase_histogram: sample_stride >= 1");
  if (!(o.discard_fraction >= 0.0 && o.discard_fraction < 1.0))
    throw std::invalid_argument("sse_phase_histogram: discard_fraction in [0, 1)");
  if (o.scheme != SseScheme::ito_euler && o.scheme != SseScheme::stratonovich_heun)
    throw std::invalid_argument("sse_phase_histogram: pick ito_euler or stratonovich_heun");

  long n_steps = std::lround(o.t_end / o.dt);
  if (n_steps < 1) n_steps = 1;
  const double h = o.t_end / double(n_steps);
  const double sqrt_h = std::sqrt(h);
  const long discard = long(double(n_steps) * o.discard_fraction);
  const int n_ch = lc.model.n_channels();
  const bool renorm = o.scheme == SseScheme::ito_euler;
  const double two_pi = 2.0 * std::numbers::pi;
  const double bin_w = two_pi / double(o.n_bins);

  const std::size_t n_blocks =
      (std::size_t(o.n_traj) + kEnsembleBlock - 1) / kEnsembleBlock;
  std::vector<std::vector<std::int64_t>> partial(
      n_blocks, std::vector<std::int64_t>(std::size_t(o.n_bins), 0));
  parallel_blocks(
      std::size_t(o.n_traj), kEnsembleBlock,
      [&](std::size_t b, std::size_t begin, std::size_t end) {
        Propagator prop(lc.model);
        std::vector<double> dw(std::size_t(std::max(n_ch, 1)), 0.0);
        std::vector<std::int64_t>& counts = partial[b];
        for (std::size_t tid = begin; tid < end; ++tid) {
          GaussianStream noise(o.seed, tid);
          Ket psi = sample_cycle(lc, two_pi * (double(tid) + 0.5) / double(o.n_traj));
          for (long i = 0; i < n_steps; ++i) {
            for (int k = 0; k < n_ch; ++k)
              dw[std::size_t(k)] = sqrt_h * noise.normal(std::uint64_t(i), std::uint32_t(k));
            if (o.scheme == SseScheme::ito_euler)
              prop.step_ito(psi, dw.data(), h, renorm);
            else
              prop.step_heun(psi, dw.data(), h, renorm);
            const double nrm = psi.norm();
            if (!std::isfinite(nrm) || nrm < 0.25 || nrm > 4.0)
              throw DivergenceError("sse_phase_histogram: trajectory diverged",
                                    std::size_t(i));
            if (i + 1 > discard && (i + 1 - discard) % o.sample_stride == 0) {
              const double th = nearest_phase(lc, psi);
              int bin = int(th / bin_w);
              if (bin >= o.n_bins) bin = 0;
              ++counts[std::size_t(bin)];
            }
          }
        }
      },
      workers);

  Histogram out;
  out.density = Eigen::VectorXd::Zero(o.n_bins);
  for (const auto& counts : partial)
    for (int i = 0; i < o.n_bins; ++i) {
      out.density[i] += double(counts[std::size_t(i)]);
      out.total_samples += counts[std::size_t(i)];
    }
  if (out.total_samples == 0)
    throw std::invalid_argument(
        "sse_phase_histogram: no samples retained (t_end too short for the "
        "discard fraction and stride)");
  out.density /= double(out.total_samples) * bin_w;
  return out;
}

// ---- histogram distance ----

// Total-variation distance (1/2) sum |P1_i - P2_i| dtheta in [0, 1].
inline double compare_distributions(const Histogram& h1, const Histogram& h2) {
  if (h1.n_bins() != h2.n_bins() || h1.n_bins() < 1)
    throw std::invalid_argument("compare_distributions: binning mismatch");
  return 0.5 * (h1.density - h2.density).cwiseAbs().sum() * h1.bin_width();
}

}  // namespace qphase
