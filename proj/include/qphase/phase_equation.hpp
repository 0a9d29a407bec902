// phase_equation.hpp — The reduced one-dimensional phase equation: per-channel
// noise amplitude tables on the cycle, their spectral derivatives, an optional
// deterministic drive, stepping in both stochastic calculi, and long-run
// phase histograms.
//
// Reduction: at each grid state the stochastic kick of channel k is the
// rotation generated by H_k (noise_hermitian); its coordinates g_{k,l} over
// the generator basis contract with the response table to the scalar noise
// amplitude Y_k(theta) = sum_l Z_l(theta) g_{k,l}(theta).  The equation reads
//   dtheta = omega dt + sum_k Y_k(theta) o dW_k            (midpoint calculus)
//   dtheta = [omega + (1/2) sum_k Y_k' Y_k] dt + sum_k Y_k dW_k   (Ito)
// and an external drive adds eps sum_l f_l Z_l(theta) to the deterministic
// part in both forms.
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qphase/errors.hpp"
#include "qphase/lie_decomp.hpp"
#include "qphase/limit_cycle.hpp"
#include "qphase/parallel.hpp"
#include "qphase/prc.hpp"
#include "qphase/rng.hpp"

namespace qphase {

namespace detail {

inline double wrap_two_pi(double x) {
  const double tau = 2.0 * std::numbers::pi;
  double r = std::fmod(x, tau);
  if (r < 0.0) r += tau;
  return r < tau ? r : 0.0;
}

}  // namespace detail

// ---- periodic interpolation ----

// Natural cubic spline through values on the uniform grid theta_i = 2*pi*i/n,
// closed periodically.  Curvatures solve the cyclic [1 4 1] system once at
// construction (Thomas sweeps plus a rank-one corner correction), so
// evaluation is O(1) per query.
class PeriodicSpline {
 public:
  PeriodicSpline() = default;
  explicit PeriodicSpline(const Eigen::VectorXd& values) { reset(values); }

  void reset(const Eigen::VectorXd& values) {
    if (values.size() < 3)
      throw std::invalid_argument("PeriodicSpline: need at least 3 samples");
    y_ = values;
    h_ = 2.0 * std::numbers::pi / double(values.size());
    m_ = solve_curvatures(values, h_);
  }

  bool empty() const { return y_.size() == 0; }
  Eigen::Index size() const { return y_.size(); }

  double operator()(double theta) const {
    Eigen::Index i, j;
    double s;
    locate(theta, i, j, s);
    const double u = 1.0 - s;
    return u * y_[i] + s * y_[j] +
           h_ * h_ / 6.0 * ((u * u * u - u) * m_[i] + (s * s * s - s) * m_[j]);
  }

  double derivative(double theta) const {
    Eigen::Index i, j;
    double s;
    locate(theta, i, j, s);
    const double u = 1.0 - s;
    return (y_[j] - y_[i]) / h_ +
           h_ / 6.0 * ((1.0 - 3.0 * u * u) * m_[i] + (3.0 * s * s - 1.0) * m_[j]);
  }

 private:
  static Eigen::VectorXd solve_curvatures(const Eigen::VectorXd& y, double h) {
    const Eigen::Index n = y.size();
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prev = y[(i + n - 1) % n], next = y[(i + 1) % n];
      d[i] = 6.0 * (next - 2.0 * y[i] + prev) / (h * h);
    }
    // Cyclic m_{i-1} + 4 m_i + m_{i+1} = d_i via Sherman-Morrison: subtract
    // u v^T with u = (gamma, 0, ..., 0, 1), v = (1, 0, ..., 0, 1/gamma) to
    // clear the corners, leaving a strictly diagonally dominant tridiagonal.
    const double gamma = -4.0;
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, 4.0);
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    auto tridiag_solve = [&](const Eigen::VectorXd& rhs) {
      Eigen::VectorXd cp(n), x(n);
      cp[0] = 1.0 / diag[0];
      x[0] = rhs[0] / diag[0];
      for (Eigen::Index i = 1; i < n; ++i) {
        const double piv = diag[i] - cp[i - 1];
        cp[i] = 1.0 / piv;
        x[i] = (rhs[i] - x[i - 1]) / piv;
      }
      for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= cp[i] * x[i + 1];
      return x;
    };
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    u[0] = gamma;
    u[n - 1] = 1.0;
    const Eigen::VectorXd x1 = tridiag_solve(d);
    const Eigen::VectorXd x2 = tridiag_solve(u);
    const double vx1 = x1[0] + x1[n - 1] / gamma;
    const double vx2 = x2[0] + x2[n - 1] / gamma;
    return x1 - (vx1 / (1.0 + vx2)) * x2;
  }

  void locate(double theta, Eigen::Index& i, Eigen::Index& j, double& s) const {
    const Eigen::Index n = y_.size();
    const double x = detail::wrap_two_pi(theta) / h_;
    i = Eigen::Index(x);
    if (i >= n) i = n - 1;
    s = x - double(i);
    j = (i + 1) % n;
  }

  Eigen::VectorXd y_, m_;
  double h_ = 0.0;
};

// Derivative of a 2*pi-periodic sampled function by Fourier multiplication:
// mode j carries wavenumber j (below the fold) or j-n (above); the unpaired
// highest mode of an even-length grid is dropped, keeping the result real and
// the grid-level pairing sum_i y_i y'_i exactly zero.
inline Eigen::VectorXd spectral_derivative(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  if (n < 4) throw std::invalid_argument("spectral_derivative: need at least 4 samples");
  Eigen::FFT<double> fft;
  std::vector<double> in(y.data(), y.data() + n);
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, in);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double k = j < (n + 1) / 2 ? double(j) : (2 * j == n ? 0.0 : double(j) - double(n));
    freq[std::size_t(j)] *= std::complex<double>(0.0, k);
  }
  std::vector<double> out;
  fft.inv(out, freq);
  return Eigen::Map<Eigen::VectorXd>(out.data(), n);
}

// ---- the reduced equation ----

// Tables of the reduced equation on a uniform theta grid.  The tables are the
// authoritative data; the cached splines serve interpolated queries and must
// be refreshed through rebuild_interpolants() after any direct table edit.
struct PhaseSDE {
  double omega = 0.0;          // rad / time
  Eigen::VectorXd theta_grid;  // n uniform nodes on [0, 2*pi)
  Eigen::MatrixXd y;           // n x M noise amplitudes, rad / sqrt(time)
  Eigen::MatrixXd dy;          // n x M derivative tables dY_k/dtheta
  Eigen::VectorXd perturb;     // n drive samples, rad / time; empty = no drive

  std::vector<PeriodicSpline> y_spline, dy_spline;
  PeriodicSpline perturb_spline;

  int n_theta() const { return int(theta_grid.size()); }
  int n_channels() const { return int(y.cols()); }
  bool has_perturbation() const { return perturb.size() > 0; }

  void rebuild_interpolants() {
    y_spline.clear();
    dy_spline.clear();
    for (int k = 0; k < n_channels(); ++k) {
      y_spline.emplace_back(Eigen::VectorXd(y.col(k)));
      dy_spline.emplace_back(Eigen::VectorXd(dy.col(k)));
    }
    perturb_spline = has_perturbation() ? PeriodicSpline(perturb) : PeriodicSpline();
  }
};

// Contract the response table with the per-channel kick generators on the
// cycle grid.  The response table must have been computed on the same grid as
// the cycle samples so that every contraction uses the exact grid state.
inline PhaseSDE build_phase_sde(const LimitCycle& lc, const PRCTable& prc,
                                const LindbladModel& model, const GeneratorBasis& basis) {
  if (lc.samples.empty())
    throw std::invalid_argument("build_phase_sde: limit cycle has no samples");
  const int dim = int(lc.samples.front().size());
  if (model.dim != dim)
    throw std::invalid_argument("build_phase_sde: model dimension does not match the cycle");
  if (basis.dim != dim)
    throw std::invalid_argument("build_phase_sde: basis dimension does not match the cycle");
  if (int(prc.z.cols()) != basis.count())
    throw std::invalid_argument("build_phase_sde: response table column count does not match the basis");
  if (prc.n_theta() != lc.n_grid())
    throw std::invalid_argument(
        "build_phase_sde: response table grid (" + std::to_string(prc.n_theta()) +
        " points) does not match the cycle grid (" + std::to_string(lc.n_grid()) + ")");

  const int n = lc.n_grid();
  const int n_ch = model.n_channels();
  PhaseSDE sde;
  sde.omega = lc.omega;
  sde.theta_grid = prc.theta_grid;
  sde.y.resize(n, n_ch);
  sde.dy.resize(n, n_ch);
  for (int i = 0; i < n; ++i) {
    const Ket& psi = lc.samples[std::size_t(i)];
    for (int k = 0; k < n_ch; ++k) {
      const Eigen::VectorXd g =
          decompose_traceless(noise_hermitian(model.jumps[std::size_t(k)], psi), basis);
      sde.y(i, k) = prc.z.row(i).dot(g);
    }
  }
  for (int k = 0; k < n_ch; ++k)
    sde.dy.col(k) = spectral_derivative(Eigen::VectorXd(sde.y.col(k)));
  sde.rebuild_interpolants();
  return sde;
}

// Deterministic drift of the midpoint-calculus form: omega plus the drive.
inline double drift_stratonovich(const PhaseSDE& sde, double theta) {
  double a = sde.omega;
  if (sde.has_perturbation()) a += sde.perturb_spline(theta);
  return a;
}

// Deterministic drift of the Ito form: the midpoint drift plus the
// noise-induced correction (1/2) sum_k Y_k'(theta) Y_k(theta).
inline double drift_ito(const PhaseSDE& sde, double theta) {
  double a = drift_stratonovich(sde, theta);
  for (int k = 0; k < sde.n_channels(); ++k)
    a += 0.5 * sde.dy_spline[std::size_t(k)](theta) * sde.y_spline[std::size_t(k)](theta);
  return a;
}

// Interpolated noise amplitude Y_k(theta) of one channel.
inline double noise_coefficient(const PhaseSDE& sde, double theta, int k) {
  if (k < 0 || k >= sde.n_channels())
    throw std::invalid_argument("noise_coefficient: channel index out of range");
  return sde.y_spline[std::size_t(k)](theta);
}

// Advance the phase by one step and wrap to [0, 2*pi).  ito_euler applies the
// Ito drift with Euler-Maruyama; stratonovich_heun uses the predictor-
// corrector whose average converges to the midpoint-calculus solution.
inline double step_phase(const PhaseSDE& sde, double theta, const Eigen::VectorXd& dw,
                         double dt, SseScheme scheme) {
  if (dw.size() != sde.n_channels())
    throw std::invalid_argument("step_phase: noise increment count does not match channels");
  if (!(dt > 0.0)) throw std::invalid_argument("step_phase: dt must be positive");

  double next;
  switch (scheme) {
    case SseScheme::ito_euler: {
      double inc = drift_ito(sde, theta) * dt;
      for (int k = 0; k < sde.n_channels(); ++k)
        inc += sde.y_spline[std::size_t(k)](theta) * dw[k];
      next = theta + inc;
      break;
    }
    case SseScheme::stratonovich_heun: {
      const double a0 = drift_stratonovich(sde, theta);
      double inc0 = a0 * dt;
      for (int k = 0; k < sde.n_channels(); ++k)
        inc0 += sde.y_spline[std::size_t(k)](theta) * dw[k];
      const double pred = theta + inc0;
      double inc = 0.5 * (a0 + drift_stratonovich(sde, pred)) * dt;
      for (int k = 0; k < sde.n_channels(); ++k)
        inc += 0.5 * (sde.y_spline[std::size_t(k)](theta) + sde.y_spline[std::size_t(k)](pred)) *
               dw[k];
      next = theta + inc;
      break;
    }
    default:
      throw std::invalid_argument("step_phase: scheme must be ito_euler or stratonovich_heun");
  }
  if (!std::isfinite(next))
    throw NotConvergedError("step_phase: non-finite phase update (reduce dt)");
  return detail::wrap_two_pi(next);
}

// Attach a deterministic drive eps * sum_l f_l Z_l(theta), where f are the
// generator coordinates of the driving Hamiltonian (identity part discarded).
// Replaces any drive already present; eps = 0 returns the input unchanged.
inline PhaseSDE add_perturbation(const PhaseSDE& sde, const Operator& hp, double eps,
                                 const PRCTable& prc, const GeneratorBasis& basis) {
  if (int(prc.z.cols()) != basis.count())
    throw std::invalid_argument("add_perturbation: response table column count does not match the basis");
  if (prc.n_theta() != sde.n_theta())
    throw std::invalid_argument(
        "add_perturbation: response table grid (" + std::to_string(prc.n_theta()) +
        " points) does not match the equation grid (" + std::to_string(sde.n_theta()) + ")");
  const Eigen::VectorXd f = perturbation_coeffs(hp, basis);
  if (eps == 0.0) return sde;
  if (std::abs(eps) > 0.2)
    std::cerr << "add_perturbation: drive strength " << eps
              << " is outside the weak-drive range; the first-order reduction may be inaccurate\n";
  PhaseSDE out = sde;
  out.perturb = eps * (prc.z * f);
  out.rebuild_interpolants();
  return out;
}

// ---- long-run statistics ----

// Normalized phase density over [0, 2*pi) split into equal bins.
struct Histogram {
  Eigen::VectorXd density;         // 1 / rad per bin
  std::int64_t total_samples = 0;  // pooled post-transient samples

  int n_bins() const { return int(density.size()); }
  double bin_width() const { return 2.0 * std::numbers::pi / double(n_bins()); }
  double bin_center(int i) const { return (double(i) + 0.5) * bin_width(); }
};

// Pooled post-transient phase histogram over an ensemble of trajectories.
// Initial phases are stratified over the circle, each trajectory draws its
// own counter-based noise stream, and the first fifth of every trajectory is
// discarded as transient.  Integer bin counts make the result independent of
// the worker count.
inline Histogram stationary_distribution(const PhaseSDE& sde, int n_traj, double t_end,
                                         double dt, std::uint64_t seed, int n_bins,
                                         SseScheme scheme = SseScheme::ito_euler) {
  if (n_traj < 1) throw std::invalid_argument("stationary_distribution: need n_traj >= 1");
  if (!(t_end > 0.0) || !(dt > 0.0) || dt > t_end)
    throw std::invalid_argument("stationary_distribution: need 0 < dt <= t_end");
  if (n_bins < 2) throw std::invalid_argument("stationary_distribution: need n_bins >= 2");
  if (scheme != SseScheme::ito_euler && scheme != SseScheme::stratonovich_heun)
    throw std::invalid_argument("stationary_distribution: scheme must be ito_euler or stratonovich_heun");
  // Resolve the step count first so the drift-step bound uses the actual h.
  const long n_steps = std::max(1L, std::lround(std::ceil(t_end / dt - 1e-12)));
  const double h = t_end / double(n_steps);
  double max_drift = std::abs(sde.omega);
  for (int i = 0; i < sde.n_theta(); ++i)
    max_drift = std::max(max_drift, std::abs(drift_ito(sde, sde.theta_grid[i])));
  if (h * max_drift >= 0.1)
    throw std::invalid_argument("stationary_distribution: dt too coarse for the drift scale (dt*max|drift| = " +
                                std::to_string(h * max_drift) + " >= 0.1)");

  const long discard = n_steps / 5;
  const int n_ch = sde.n_channels();
  const double tau = 2.0 * std::numbers::pi;
  const double bin_w = tau / double(n_bins);

  const std::size_t block = 16;
  const std::size_t n_blocks = (std::size_t(n_traj) + block - 1) / block;
  std::vector<std::vector<std::int64_t>> partial(
      n_blocks, std::vector<std::int64_t>(std::size_t(n_bins), 0));

  parallel_blocks(std::size_t(n_traj), block, [&](std::size_t b, std::size_t begin, std::size_t end) {
    std::vector<std::int64_t>& counts = partial[b];
    Eigen::VectorXd dw(n_ch);
    const double sqrt_h = std::sqrt(h);
    for (std::size_t tid = begin; tid < end; ++tid) {
      GaussianStream gauss(seed, tid);
      double theta = tau * (double(tid) + 0.5) / double(n_traj);
      for (long s = 0; s < n_steps; ++s) {
        for (int k = 0; k < n_ch; ++k)
          dw[k] = sqrt_h * gauss.normal(std::uint64_t(s), std::uint32_t(k));
        theta = step_phase(sde, theta, dw, h, scheme);
        if (s >= discard) {
          int bin = int(theta / bin_w);
          if (bin >= n_bins) bin = n_bins - 1;
          ++counts[std::size_t(bin)];
        }
      }
    }
  });

  Histogram hist;
  hist.density = Eigen::VectorXd::Zero(n_bins);
  std::vector<std::int64_t> counts(std::size_t(n_bins), 0);
  for (const auto& part : partial)
    for (int i = 0; i < n_bins; ++i) counts[std::size_t(i)] += part[std::size_t(i)];
  for (int i = 0; i < n_bins; ++i) hist.total_samples += counts[std::size_t(i)];
  for (int i = 0; i < n_bins; ++i)
    hist.density[i] = double(counts[std::size_t(i)]) / (double(hist.total_samples) * bin_w);
  return hist;
}

}  // namespace qphase
