// dynamics.hpp — Propagation of the master equation (RK4 in operator form),
// the deterministic nonlinear wavefunction dynamics, and the measurement SSE
// in Ito (Euler–Maruyama), Stratonovich (predictor-corrector), and
// evaluation-point-p forms.
//
// Drift conventions, per channel with u = L psi, w = L u, x = <L + L^dag>:
//   Ito:          a_I = -i H_nh psi + sum_k [ (x/2) u - (x^2/8) psi ]
//   Stratonovich: a_S = a_I + sum_k [ (x/2) u - (3/8) x^2 psi - (1/2) w
//                                     + (1/2)(|u|^2 + Re<psi,w>) psi ]
//   general p:    a_p = a_I - p sum_k [ w - x u + (3/4) x^2 psi
//                                       - (|u|^2 + Re<psi,w>) psi ]
// with H_nh = H - (i/2) sum_k L_k^dag L_k.  Expectation values <.> are
// normalized by <psi|psi>; on unit states this is the usual quantum
// expectation, and off the unit sphere it makes every sphere invariant under
// a_S and the noise field, which is what lets long no-renormalization runs
// hold the norm (see step_heun).
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "qphase/errors.hpp"
#include "qphase/models.hpp"
#include "qphase/operator_algebra.hpp"
#include "qphase/parallel.hpp"
#include "qphase/rng.hpp"

namespace qphase {

// ---- master equation ----

inline Operator lindblad_rhs(const Operator& rho, const LindbladModel& m) {
  if (rho.rows() != m.dim || rho.cols() != m.dim)
    throw std::invalid_argument("lindblad_rhs: dimension mismatch");
  Operator out = -kI * (m.hamiltonian * rho - rho * m.hamiltonian);
  for (const Operator& l : m.jumps) {
    Operator lr = l * rho;
    Operator ll = l.adjoint() * l;
    out.noalias() += lr * l.adjoint();
    out.noalias() -= 0.5 * (ll * rho + rho * ll);
  }
  return out;
}

// RK4 propagation of the master equation with a trace-drift watchdog.
// Uses the largest step <= dt that divides t_end into whole steps.
inline Operator evolve_master(const Operator& rho0, const LindbladModel& m, double t_end,
                              double dt) {
  if (!(dt > 0.0) || t_end < 0.0)
    throw std::invalid_argument("evolve_master: need dt > 0 and t_end >= 0");
  if (dt * m.rate_scale >= 0.1)
    throw std::invalid_argument("evolve_master: dt too large for the fastest model rate");
  if (t_end == 0.0) return rho0;
  const long n = long(std::ceil(t_end / dt - 1e-12));
  const double h = t_end / double(n);
  Operator rho = rho0;
  Operator k1, k2, k3, k4;
  for (long i = 0; i < n; ++i) {
    k1 = lindblad_rhs(rho, m);
    k2 = lindblad_rhs(rho + 0.5 * h * k1, m);
    k3 = lindblad_rhs(rho + 0.5 * h * k2, m);
    k4 = lindblad_rhs(rho + h * k3, m);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag()) > 1e-6)
      throw StabilityError("evolve_master: trace drift exceeds 1e-6, reduce dt");
  }
  return rho;
}

// Steady state from the null vector of the vectorized generator (column-major
// vec(rho)); dense eigen-decomposition, so limited to small dimensions.
inline Operator steady_state(const LindbladModel& m) {
  const int n = m.dim;
  if (n > 10)
    throw std::invalid_argument("steady_state: dense superoperator limited to dim <= 10");
  using Eigen::kroneckerProduct;
  const Operator id = Operator::Identity(n, n);
  Operator sop = -kI * (kroneckerProduct(id, m.hamiltonian).eval() -
                        kroneckerProduct(m.hamiltonian.transpose(), id).eval());
  for (const Operator& l : m.jumps) {
    Operator ll = l.adjoint() * l;
    sop += kroneckerProduct(l.conjugate(), l).eval();
    sop -= 0.5 * kroneckerProduct(id, ll).eval();
    sop -= 0.5 * kroneckerProduct(ll.transpose(), id).eval();
  }
  Eigen::ComplexEigenSolver<Operator> es(sop);
  if (es.info() != Eigen::Success)
    throw NotConvergedError("steady_state: eigensolver failed");
  Eigen::Index best = 0;
  double best_mag = std::abs(es.eigenvalues()[0]);
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    double mag = std::abs(es.eigenvalues()[i]);
    if (mag < best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  Eigen::VectorXcd v = es.eigenvectors().col(best);
  Operator rho = Eigen::Map<const Operator>(v.data(), n, n);
  rho = 0.5 * (rho + Operator(rho.adjoint())).eval();
  Complex tr = rho.trace();
  if (std::abs(tr) < 1e-10)
    throw NotConvergedError("steady_state: null vector has vanishing trace");
  rho /= tr;
  double residual = lindblad_rhs(rho, m).cwiseAbs().maxCoeff();
  if (residual > 1e-8 * std::max(1.0, m.rate_scale))
    throw NotConvergedError("steady_state: residual too large (degenerate generator?)");
  return rho;
}

// ---- wavefunction propagation ----

enum class SseScheme { ito_euler, stratonovich_heun, general_p };

struct TrajectoryConfig {
  double dt = 0.0;
  double t_end = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t trajectory_index = 0;
  SseScheme scheme = SseScheme::ito_euler;
  std::optional<bool> renormalize_each_step;  // default: scheme-dependent
  double p = 0.5;                             // evaluation point for general_p
  int record_stride = 1;                      // state recording cadence

  bool resolved_renormalize() const {
    if (renormalize_each_step) return *renormalize_each_step;
    switch (scheme) {
      case SseScheme::ito_euler: return true;
      case SseScheme::stratonovich_heun: return false;
      case SseScheme::general_p: return p == 0.0;
    }
    return true;
  }
};

// Shared per-model propagation engine.  Holds preallocated scratch, so use
// one instance per worker thread.
class Propagator {
 public:
  explicit Propagator(const LindbladModel& model) : m_(model) {
    h_nh_ = m_.hamiltonian;
    for (const Operator& l : m_.jumps) h_nh_ -= 0.5 * kI * (l.adjoint() * l);
    const int n = m_.dim;
    u_.resize(n);
    w_.resize(n);
    acc_.resize(n);
    pred_.resize(n);
    acc2_.resize(n);
    k1_.resize(n);
    k2_.resize(n);
    k3_.resize(n);
    tmp_.resize(n);
  }

  const LindbladModel& model() const { return m_; }

  // Deterministic drift of the measurement dynamics (Stratonovich form).
  Ket drift_deterministic(const Ket& psi) {
    check_dim(psi, "drift_deterministic");
    Ket out(psi.size());
    drift_det_into(psi, out);
    return out;
  }

  Ket drift_ito(const Ket& psi) {
    check_dim(psi, "drift_ito");
    Ket out(psi.size());
    drift_p_into(psi, 0.0, out);
    return out;
  }

  Ket drift_general_p(const Ket& psi, double p) {
    check_dim(psi, "drift_general_p");
    check_p(p);
    Ket out(psi.size());
    drift_p_into(psi, p, out);
    return out;
  }

  // d<psi|psi>/dt generated by the p-form drift at state psi.
  double norm_rate_general_p(const Ket& psi, double p) {
    check_dim(psi, "norm_rate_general_p");
    check_p(p);
    drift_p_into(psi, p, acc2_);
    return 2.0 * psi.dot(acc2_).real();
  }

  // One classical RK4 step of the deterministic dynamics, in place.  Returns
  // the drift norm at the step's start, which costs nothing extra and lets
  // callers watch for convergence onto a fixed point.
  double step_deterministic(Ket& psi, double dt) {
    drift_det_into(psi, k1_);
    tmp_ = psi + (0.5 * dt) * k1_;
    drift_det_into(tmp_, k2_);
    tmp_ = psi + (0.5 * dt) * k2_;
    drift_det_into(tmp_, k3_);
    tmp_ = psi + dt * k3_;
    drift_det_into(tmp_, acc2_);  // k4
    psi += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + acc2_);
    return k1_.norm();
  }

  // Integrate the deterministic dynamics for exactly t (t >= 0), using the
  // largest step <= dt_max that divides t evenly.
  Ket integrate_deterministic(Ket psi, double t, double dt_max) {
    if (!(dt_max > 0.0) || t < 0.0)
      throw std::invalid_argument("integrate_deterministic: need dt_max > 0, t >= 0");
    if (t == 0.0) return psi;
    const long n = long(std::ceil(t / dt_max - 1e-12));
    const double h = t / double(n);
    for (long i = 0; i < n; ++i) step_deterministic(psi, h);
    return psi;
  }

  // Euler–Maruyama step of the Ito SSE; dw has one increment per channel.
  void step_ito(Ket& psi, const double* dw, double dt, bool renormalize) {
    const double nn = psi.squaredNorm();
    acc_ = psi;
    acc_.noalias() += (-kI * dt) * (h_nh_ * psi);
    for (std::size_t k = 0; k < m_.jumps.size(); ++k) {
      u_.noalias() = m_.jumps[k] * psi;
      double x = 2.0 * psi.dot(u_).real() / nn;
      acc_ += (dt * 0.5 * x + dw[k]) * u_ - (dt * x * x / 8.0 + dw[k] * 0.5 * x) * psi;
    }
    psi = acc_;
    if (renormalize) psi /= psi.norm();
  }

  // Predictor-corrector step of the Stratonovich SSE; predictor and corrector
  // share the same Wiener increments.  The corrector is iterated to the fixed
  // point of the midpoint rule: psi' = psi + dt a((psi+psi')/2) + b(..) dW.
  // Because drift and noise fields are norm-orthogonal at every state, the
  // converged step preserves the norm to rounding, so long no-renormalization
  // runs stay on the unit sphere; a single explicit corrector pass would leak
  // norm at a systematic O(dt^2) rate per step through the quartic noise
  // moment.  Weak first order, like the single-pass version.
  void step_heun(Ket& psi, const double* dw, double dt, bool renormalize = false) {
    // Predictor: full Euler step with the Stratonovich drift.
    drift_det_into(psi, acc_);
    pred_ = psi + dt * acc_;
    add_noise(psi, dw, pred_);
    // Corrector: re-evaluate at the midpoint until self-consistent.
    const double nrm = psi.norm();
    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int iter = 0; iter < 50; ++iter) {
      tmp_ = 0.5 * (psi + pred_);
      drift_det_into(tmp_, acc_);
      acc2_ = psi + dt * acc_;
      add_noise(tmp_, dw, acc2_);
      double delta = (acc2_ - pred_).norm();
      pred_.swap(acc2_);
      if (delta <= 1e-14 * nrm || (delta >= prev && delta <= 1e-8 * nrm)) {
        converged = true;
        break;
      }
      prev = delta;
    }
    if (!converged)
      throw NotConvergedError("stratonovich step: corrector iteration stalled (dt too large)");
    psi = pred_;
    if (renormalize) psi /= psi.norm();
  }

  // Evaluation-point-p step: a fraction-p Euler predictor fixes the
  // evaluation state for drift and noise.  p=0 is exactly the Ito step.
  void step_general_p(Ket& psi, const double* dw, double dt, double p, bool renormalize) {
    check_p(p);
    if (p == 0.0) {
      step_ito(psi, dw, dt, renormalize);
      return;
    }
    drift_p_into(psi, p, acc2_);
    pred_ = psi + (p * dt) * acc2_;
    scale_ = p;
    add_noise(psi, dw, pred_);
    scale_ = 1.0;
    drift_p_into(pred_, p, acc2_);
    acc_ = psi + dt * acc2_;
    add_noise(pred_, dw, acc_);
    psi = acc_;
    if (renormalize) psi /= psi.norm();
  }

 private:
  void check_dim(const Ket& psi, const char* fn) const {
    if (psi.size() != m_.dim)
      throw std::invalid_argument(std::string(fn) + ": dimension mismatch");
  }
  static void check_p(double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("general_p: p must lie in [0,1]");
  }

  // out += scale * sum_k (u_k - <X_k>/2 psi) dw_k, evaluated at state psi.
  void add_noise(const Ket& psi, const double* dw, Ket& out) {
    const double nn = psi.squaredNorm();
    for (std::size_t k = 0; k < m_.jumps.size(); ++k) {
      u_.noalias() = m_.jumps[k] * psi;
      double x = 2.0 * psi.dot(u_).real() / nn;
      out += (scale_ * dw[k]) * u_ - (scale_ * dw[k] * 0.5 * x) * psi;
    }
  }

  // Expectation values below are normalized by <psi|psi>.  On unit states
  // this changes nothing; off the unit sphere it keeps the drift and noise
  // fields exactly norm-orthogonal, so discretization error cannot feed a
  // runaway in the norm (the whole foliation of spheres is invariant, not
  // just the unit one).
  void drift_det_into(const Ket& psi, Ket& out) {
    const double nn = psi.squaredNorm();
    out.noalias() = -kI * (h_nh_ * psi);
    for (const Operator& l : m_.jumps) {
      u_.noalias() = l * psi;
      w_.noalias() = l * u_;
      double x = 2.0 * psi.dot(u_).real() / nn;
      double ll = u_.squaredNorm() / nn;
      double re_l2 = psi.dot(w_).real() / nn;
      out += x * u_ - 0.5 * w_;
      out += (0.5 * ll - 0.5 * x * x + 0.5 * re_l2) * psi;
    }
  }

  void drift_p_into(const Ket& psi, double p, Ket& out) {
    const double nn = psi.squaredNorm();
    out.noalias() = -kI * (h_nh_ * psi);
    for (const Operator& l : m_.jumps) {
      u_.noalias() = l * psi;
      double x = 2.0 * psi.dot(u_).real() / nn;
      out += (0.5 * x) * u_ - (x * x / 8.0) * psi;
      if (p != 0.0) {
        w_.noalias() = l * u_;
        double ll = u_.squaredNorm() / nn;
        double re_l2 = psi.dot(w_).real() / nn;
        out -= p * (w_ - x * u_ + (0.75 * x * x - ll - re_l2) * psi);
      }
    }
  }

  LindbladModel m_;
  Operator h_nh_;
  Ket u_, w_, acc_, acc2_, pred_, k1_, k2_, k3_, tmp_;
  double scale_ = 1.0;
};

// ---- spec-level convenience wrappers ----

inline Ket deterministic_drift(const Ket& psi, const LindbladModel& m) {
  Propagator prop(m);
  return prop.drift_deterministic(psi);
}

inline Ket step_sse_ito(const Ket& psi, const LindbladModel& m, const Eigen::VectorXd& dw,
                        double dt, bool renormalize = true) {
  if (dw.size() != m.n_channels())
    throw std::invalid_argument("step_sse_ito: one increment per channel required");
  Propagator prop(m);
  Ket out = psi;
  prop.step_ito(out, dw.data(), dt, renormalize);
  return out;
}

inline Ket step_sse_stratonovich(const Ket& psi, const LindbladModel& m,
                                 const Eigen::VectorXd& dw, double dt) {
  if (dw.size() != m.n_channels())
    throw std::invalid_argument("step_sse_stratonovich: one increment per channel required");
  Propagator prop(m);
  Ket out = psi;
  prop.step_heun(out, dw.data(), dt);
  return out;
}

inline Ket step_sse_general_p(const Ket& psi, const LindbladModel& m, const Eigen::VectorXd& dw,
                              double dt, double p) {
  if (dw.size() != m.n_channels())
    throw std::invalid_argument("step_sse_general_p: one increment per channel required");
  Propagator prop(m);
  Ket out = psi;
  prop.step_general_p(out, dw.data(), dt, p, p == 0.0);
  return out;
}

// ---- trajectory simulation ----

struct TrajectoryResult {
  std::vector<double> times;     // recorded times (stride applied)
  std::vector<Ket> states;       // recorded states
  Eigen::MatrixXd currents;      // n_steps x M homodyne currents J_k = <X_k> + dW_k/dt
  double dt = 0.0;               // actual step used
};

// Run one SSE trajectory; identical (seed, trajectory_index) reproduce the
// series bitwise.  The current at step i uses the pre-step state.
inline TrajectoryResult simulate_trajectory(const Ket& psi0, const LindbladModel& m,
                                            const TrajectoryConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
    throw std::invalid_argument("simulate_trajectory: need dt > 0 and t_end > 0");
  if (cfg.record_stride < 1)
    throw std::invalid_argument("simulate_trajectory: record_stride >= 1");
  long n_steps = std::lround(cfg.t_end / cfg.dt);
  if (n_steps < 1) n_steps = 1;
  const double dt = cfg.t_end / double(n_steps);
  const int n_ch = m.n_channels();
  const bool renorm = cfg.resolved_renormalize();

  Propagator prop(m);
  GaussianStream noise(cfg.seed, cfg.trajectory_index);
  const double sqrt_dt = std::sqrt(dt);

  TrajectoryResult out;
  out.dt = dt;
  out.currents.resize(n_steps, n_ch);
  out.times.reserve(std::size_t(n_steps / cfg.record_stride) + 2);
  out.states.reserve(std::size_t(n_steps / cfg.record_stride) + 2);

  Ket psi = psi0;
  std::vector<double> dw(std::size_t(std::max(n_ch, 1)), 0.0);
  out.times.push_back(0.0);
  out.states.push_back(psi);
  for (long i = 0; i < n_steps; ++i) {
    for (int k = 0; k < n_ch; ++k) {
      dw[k] = sqrt_dt * noise.normal(std::uint64_t(i), std::uint32_t(k));
      Ket u = m.jumps[k] * psi;
      out.currents(i, k) = 2.0 * psi.dot(u).real() / psi.squaredNorm() + dw[k] / dt;
    }
    switch (cfg.scheme) {
      case SseScheme::ito_euler: prop.step_ito(psi, dw.data(), dt, renorm); break;
      case SseScheme::stratonovich_heun: prop.step_heun(psi, dw.data(), dt, renorm); break;
      case SseScheme::general_p: prop.step_general_p(psi, dw.data(), dt, cfg.p, renorm); break;
    }
    double nrm = psi.norm();
    if (!std::isfinite(nrm) || nrm < 0.25 || nrm > 4.0)
      throw DivergenceError("simulate_trajectory: state norm out of range", std::size_t(i));
    if ((i + 1) % cfg.record_stride == 0 || i + 1 == n_steps) {
      out.times.push_back(double(i + 1) * dt);
      out.states.push_back(psi);
    }
  }
  return out;
}

// Ensemble-mean density operator over n_traj trajectories; block-partitioned
// and merged in fixed order, so the result is independent of worker count.
inline Operator ensemble_mean_density(const Ket& psi0, const LindbladModel& m,
                                      const TrajectoryConfig& cfg, std::size_t n_traj,
                                      int workers = 0) {
  if (n_traj == 0) throw std::invalid_argument("ensemble_mean_density: n_traj >= 1");
  const std::size_t n_blocks = (n_traj + kEnsembleBlock - 1) / kEnsembleBlock;
  std::vector<Operator> partial(n_blocks, Operator::Zero(m.dim, m.dim));
  parallel_blocks(
      n_traj, kEnsembleBlock,
      [&](std::size_t b, std::size_t begin, std::size_t end) {
        Propagator prop(m);
        Operator sum = Operator::Zero(m.dim, m.dim);
        const int n_ch = m.n_channels();
        long n_steps = std::lround(cfg.t_end / cfg.dt);
        if (n_steps < 1) n_steps = 1;
        const double dt = cfg.t_end / double(n_steps);
        const double sqrt_dt = std::sqrt(dt);
        const bool renorm = cfg.resolved_renormalize();
        std::vector<double> dw(std::size_t(std::max(n_ch, 1)), 0.0);
        for (std::size_t j = begin; j < end; ++j) {
          GaussianStream noise(cfg.seed, cfg.trajectory_index + j);
          Ket psi = psi0;
          for (long i = 0; i < n_steps; ++i) {
            for (int k = 0; k < n_ch; ++k)
              dw[k] = sqrt_dt * noise.normal(std::uint64_t(i), std::uint32_t(k));
            switch (cfg.scheme) {
              case SseScheme::ito_euler: prop.step_ito(psi, dw.data(), dt, renorm); break;
              case SseScheme::stratonovich_heun: prop.step_heun(psi, dw.data(), dt, renorm); break;
              case SseScheme::general_p:
                prop.step_general_p(psi, dw.data(), dt, cfg.p, renorm);
                break;
            }
            double nrm = psi.norm();
            if (!std::isfinite(nrm) || nrm < 0.25 || nrm > 4.0)
              throw DivergenceError("ensemble_mean_density: trajectory diverged",
                                    std::size_t(i));
          }
          double nn = psi.squaredNorm();
          sum.noalias() += (psi * psi.adjoint()) / nn;
        }
        partial[b] = std::move(sum);
      },
      workers);
  Operator mean = Operator::Zero(m.dim, m.dim);
  for (const Operator& pb : partial) mean += pb;
  return mean / double(n_traj);
}

}  // namespace qphase
