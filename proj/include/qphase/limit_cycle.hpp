// limit_cycle.hpp — Locating the attracting periodic orbit of the
// deterministic nonlinear wavefunction dynamics, sampling it on a uniform
// phase grid, and evaluating the asymptotic (isochron) phase of a state.
//
// The period is detected from the self-overlap f(tau) = |<psi(t0)|psi(t0+tau)>|
// of the relaxed trajectory: the first local maximum above 1 - 1e-6 after the
// overlap has genuinely left its start marks one full return.  The peak
// location is then polished with a secant iteration on the analytic
// derivative of |<psi_ref|psi(tau)>|^2, which needs no extra differencing
// because d<psi_ref|psi>/dtau = <psi_ref|a(psi)>.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qphase/dynamics.hpp"
#include "qphase/errors.hpp"
#include "qphase/models.hpp"
#include "qphase/operator_algebra.hpp"

namespace qphase {

struct LimitCycleOptions {
  double t_relax = -1.0;      // < 0: max(20 / slowest channel rate, 4 beat periods)
  double scan_window = -1.0;  // < 0: max(resolved t_relax, 8 beat periods)
  double dt_factor = 0.02;    // RK4 step = dt_factor / model.rate_scale
  double valley = 0.99;       // overlap must dip below this before a peak counts
  double peak_threshold = 1.0 - 1e-6;
  int polish_periods = 2;     // whole periods integrated per polish round
};

struct LimitCycle {
  LindbladModel model;
  double T = 0.0;               // period
  double omega = 0.0;           // 2*pi / T
  std::vector<Ket> samples;     // gauge-fixed unit kets at theta_i = 2*pi*i/n
  double dt_sample = 0.0;       // RK4 step dividing the grid spacing exactly
  std::string theta_origin = "sample maximizing the first-channel quadrature";

  int n_grid() const { return int(samples.size()); }
};

namespace detail {

// Slowest nonzero per-channel decay rate, used to size the relaxation span.
inline double slowest_rate(const LindbladModel& m) {
  double slow = 0.0;
  for (const Operator& l : m.jumps) {
    double r = hermitian_norm(Operator(l.adjoint() * l));
    if (r > 1e-12 && (slow == 0.0 || r < slow)) slow = r;
  }
  return slow > 0.0 ? slow : m.rate_scale;
}

// Smallest nonzero spacing between Hamiltonian levels.  The orbit frequency
// tracks this spacing (up to nonlinear shifts), so a few beat periods
// 2*pi/gap bound the period search even when the channel-rate heuristic
// badly over- or underestimates the relaxation span.
inline double min_level_gap(const Operator& h) {
  if (h.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Operator> es(h, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::abs(ev(0)) + std::abs(ev(ev.size() - 1)) + 1.0;
  double gap = 0.0;
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    const double d = ev(i) - ev(i - 1);
    if (d > 1e-9 * scale && (gap == 0.0 || d < gap)) gap = d;
  }
  return gap;
}

}  // namespace detail

// Find the attracting cycle reachable from psi_init.  t_relax <= 0 selects
// the default relaxation span (20 / slowest nonzero channel rate).
inline LimitCycle find_limit_cycle(const LindbladModel& model, const Ket& psi_init,
                                   double t_relax, int n_grid,
                                   const LimitCycleOptions& opts = {}) {
  if (n_grid < 64) throw std::invalid_argument("find_limit_cycle: need n_grid >= 64");
  if (psi_init.size() != model.dim)
    throw std::invalid_argument("find_limit_cycle: state dimension mismatch");
  const double dt_c = opts.dt_factor / model.rate_scale;
  const double gap = detail::min_level_gap(model.hamiltonian);
  const double beat = gap > 0.0 ? 2.0 * std::numbers::pi / gap : 0.0;
  const double relax =
      t_relax > 0.0 ? t_relax : std::max(20.0 / detail::slowest_rate(model), 4.0 * beat);
  const double window =
      opts.scan_window > 0.0 ? opts.scan_window : std::max(relax, 8.0 * beat);

  Propagator prop(model);
  Ket psi = normalize(psi_init);

  // ---- relaxation, with fixed-point watch ----
  int quiet = 0;
  auto watch_fixed_point = [&](double drift_norm) {
    quiet = drift_norm < 1e-10 ? quiet + 1 : 0;
    if (quiet >= 1000)
      throw NoCycleError("find_limit_cycle: dynamics converged to a fixed point");
  };
  {
    const long n = std::lround(std::ceil(relax / dt_c));
    const double h = relax / double(n);
    for (long i = 0; i < n; ++i) watch_fixed_point(prop.step_deterministic(psi, h));
  }

  // Peak polish shared by detection and the post-polish re-measurement:
  // starting from `from` (the state at tau = span_lo), locate the maximum of
  // F(tau) = |<ref|psi(tau)>|^2 near `guess` by secant iteration on the
  // analytic derivative, and return {tau*, |<ref|psi(tau*)>|}.
  auto refine = [&](const Ket& ref, const Ket& from, double span_lo, double guess,
                    double span_hi) {
    Ket cur = from;
    double tau_cur = span_lo;
    auto advance_to = [&](double tau) {
      double d = tau - tau_cur;
      if (d < 0.0) {  // restart from the anchor rather than integrating backward
        cur = from;
        tau_cur = span_lo;
        d = tau - tau_cur;
      }
      if (d > 0.0) {
        const long k = std::lround(std::ceil(d / (dt_c / 8.0)));
        const double h = d / double(k);
        for (long i = 0; i < k; ++i) prop.step_deterministic(cur, h);
        tau_cur = tau;
      }
    };
    auto fprime = [&](double tau) {
      advance_to(tau);
      const Complex c = ref.dot(cur);
      const Complex cdot = ref.dot(prop.drift_deterministic(cur));
      return 2.0 * (std::conj(c) * cdot).real();
    };
    double t0 = guess - dt_c / 20.0, t1 = guess;
    double g0 = fprime(t0), g1 = fprime(t1);
    for (int it = 0; it < 40; ++it) {
      if (g1 == g0) break;
      double t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
      t2 = std::clamp(t2, span_lo, span_hi);
      const bool done = std::abs(t2 - t1) < 1e-10 * std::max(guess, 1.0);
      t0 = t1;
      g0 = g1;
      t1 = t2;
      if (done) break;
      g1 = fprime(t1);
    }
    advance_to(t1);
    return std::pair<double, double>(t1, std::abs(ref.dot(cur)) / cur.norm());
  };

  // ---- self-overlap scan for the first full return ----
  // Discrete local maxima of f(tau) = |<psi_ref|psi(tau)>| are candidate
  // returns once the overlap has genuinely left its start (valley rule); each
  // candidate peak is refined and accepted when the refined value clears the
  // threshold.  The best sub-threshold candidate is kept as a fallback: an
  // incompletely relaxed start caps the attainable overlap, and the polish
  // stage plus the closure gate below decide whether it was a real cycle.
  const Ket psi_ref = normalize(psi);
  Ket ring[3] = {psi_ref, psi_ref, psi_ref};  // states at tau_{j-2}, tau_{j-1}, tau_j
  double f2 = 1.0, f1 = 1.0;                  // f at tau_{j-2}, tau_{j-1}
  double running_min = 1.0;
  double last_drift = model.rate_scale;
  bool accepted = false;
  double T = 0.0;
  double fallback_T = 0.0, fallback_f = 0.0;
  const double candidate_floor = 0.9;
  const long n_scan = std::lround(std::ceil(window / dt_c));
  for (long j = 1; j <= n_scan && !accepted; ++j) {
    ring[0] = ring[1];
    ring[1] = ring[2];
    last_drift = prop.step_deterministic(ring[2] = psi, dt_c);
    psi = ring[2];
    double f = std::abs(psi_ref.dot(psi)) / psi.norm();
    watch_fixed_point(last_drift);
    if (j >= 3 && f1 >= f2 && f1 > f && f1 > candidate_floor && running_min < opts.valley) {
      const long peak_index = j - 1;
      const double tau_anchor = double(peak_index - 1) * dt_c;
      // Parabola vertex through the three samples seeds the secant polish.
      const double denom = f2 - 2.0 * f1 + f;
      double vertex = double(peak_index) * dt_c;
      if (denom < 0.0) vertex += 0.5 * dt_c * (f2 - f) / denom;
      auto [tau_star, f_star] =
          refine(psi_ref, ring[0], tau_anchor, vertex, tau_anchor + 4.0 * dt_c);
      if (f_star > opts.peak_threshold) {
        T = tau_star;
        accepted = true;
      } else if (f_star > fallback_f) {
        fallback_T = tau_star;
        fallback_f = f_star;
      }
    }
    running_min = std::min(running_min, f);
    f2 = f1;
    f1 = f;
  }
  if (!accepted) {
    if (fallback_f > 0.0) {
      T = fallback_T;
    } else {
      if (last_drift < 1e-6 * model.rate_scale)
        throw NoCycleError("find_limit_cycle: trajectory is settling onto a fixed point");
      throw PeriodNotFoundError(
          "find_limit_cycle: no self-overlap return above threshold in the scan window");
    }
  }

  // ---- alternate period re-measurement with whole-period polishing ----
  // A start that is still a distance d off the orbit biases the measured
  // return time by O(d) (the spiral is traversed, not the orbit), and that
  // bias in turn caps the consecutive-return fidelity.  Re-measuring after
  // every polish round shrinks both together, which a single pass cannot do.
  auto remeasure = [&](const Ket& ref) {
    const double w = std::max(4.0 * dt_c, 0.04 * T);
    const double lo = std::max(T - w, 0.5 * T);
    Ket from = prop.integrate_deterministic(ref, lo, dt_c);
    return refine(ref, from, lo, T, T + w).first;
  };
  psi = psi_ref;
  double ret = 0.0;
  // Rounds lengthen geometrically so weakly contracting orbits still converge
  // in a handful of re-measurements.
  int periods = std::max(opts.polish_periods, 1);
  for (int round = 0; round < 32 && ret < 1.0 - 1e-9; ++round) {
    psi = normalize(psi);
    T = remeasure(psi);
    for (int k = 0; k < periods; ++k) {
      Ket next = prop.integrate_deterministic(psi, T, dt_c);
      ret = std::abs(normalize(psi).dot(normalize(next)));
      psi = std::move(next);
    }
    periods = std::min(periods * 2, 32);
  }
  if (ret < 1.0 - 1e-9)
    throw NotConvergedError("find_limit_cycle: polish did not converge onto a closed orbit");
  psi = normalize(psi);
  T = remeasure(psi);

  // ---- uniform sampling over one period ----
  LimitCycle lc;
  lc.model = model;
  lc.T = T;
  lc.omega = 2.0 * std::numbers::pi / T;
  const long m = std::max<long>(1, std::lround(std::ceil((T / n_grid) / dt_c)));
  lc.dt_sample = T / double(n_grid * m);
  lc.samples.reserve(std::size_t(n_grid));
  std::vector<Ket> plain;  // normalized, not gauge-fixed, for the closure check
  plain.reserve(std::size_t(n_grid));
  for (int i = 0; i < n_grid; ++i) {
    plain.push_back(normalize(psi));
    for (long s = 0; s < m; ++s) prop.step_deterministic(psi, lc.dt_sample);
  }
  const double closure = std::abs(plain.front().dot(normalize(psi)));
  if (closure < 1.0 - 1e-8)
    throw NotConvergedError("find_limit_cycle: cycle failed to close after one period");

  // ---- theta = 0 at the sample maximizing the first-channel quadrature ----
  std::size_t origin = 0;
  if (!model.jumps.empty()) {
    const Operator x1 = model.jumps[0] + Operator(model.jumps[0].adjoint());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < plain.size(); ++i) {
      double v = expectation_real(plain[i], x1);
      if (v > best) {
        best = v;
        origin = i;
      }
    }
  }
  std::rotate(plain.begin(), plain.begin() + long(origin), plain.end());
  for (const Ket& s : plain) lc.samples.push_back(gauge_fix(s));
  return lc;
}

// State at phase theta (any real, wrapped mod 2*pi): linear interpolation of
// the two bracketing gauge-fixed samples, with the right sample first rotated
// so its overlap with the left one is real-positive.  Without that alignment
// a pivot change between neighbors would blend incompatible global phases.
inline Ket sample_cycle(const LimitCycle& lc, double theta) {
  const int n = lc.n_grid();
  if (n == 0) throw std::invalid_argument("sample_cycle: empty cycle");
  const double two_pi = 2.0 * std::numbers::pi;
  double t = theta / two_pi * double(n);
  t -= std::floor(t / double(n)) * double(n);  // into [0, n)
  long i = long(std::floor(t));
  if (i >= n) i = 0;
  const double s = t - double(i);
  const Ket& left = lc.samples[std::size_t(i)];
  if (s == 0.0) return left;
  const Ket& right = lc.samples[std::size_t((i + 1) % n)];
  const Complex ov = left.dot(right);
  const Complex align = std::abs(ov) > 0.0 ? Complex(std::polar(1.0, -std::arg(ov))) : Complex(1.0);
  Ket mix = (1.0 - s) * left + (s * align) * right;
  return gauge_fix(normalize(mix));
}

// Phase of the cycle point with maximum overlap against psi: coarse scan over
// the stored samples, then golden-section refinement on the interpolated
// cycle.  No closeness requirement — far-off states simply project onto the
// nearest phase.  The achieved overlap magnitude is reported through
// out_overlap when given.
inline double nearest_phase(const LimitCycle& lc, const Ket& psi, double* out_overlap = nullptr) {
  if (lc.samples.empty()) throw std::invalid_argument("nearest_phase: empty limit cycle");
  if (psi.size() != lc.samples.front().size())
    throw std::invalid_argument("nearest_phase: state dimension mismatch");
  const Ket end = normalize(psi);

  const int n = lc.n_grid();
  int best = 0;
  double best_ov = -1.0;
  for (int i = 0; i < n; ++i) {
    double ov = std::abs(lc.samples[std::size_t(i)].dot(end));
    if (ov > best_ov) {
      best_ov = ov;
      best = i;
    }
  }
  const double two_pi = 2.0 * std::numbers::pi;
  const double dtheta = two_pi / double(n);
  auto overlap = [&](double th) { return std::abs(sample_cycle(lc, th).dot(end)); };
  // Golden-section maximization on the bracketing two grid cells.
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = double(best - 1) * dtheta, b = double(best + 1) * dtheta;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = overlap(c), fd = overlap(d);
  while (b - a > 1e-12 * two_pi) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = overlap(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = overlap(d);
    }
  }
  const double theta = 0.5 * (a + b);
  if (out_overlap) *out_overlap = overlap(theta);
  return theta - std::floor(theta / two_pi) * two_pi;
}

// Asymptotic phase of psi: integrate the deterministic dynamics for exactly
// n_periods * T (landing back on the same isochron), then locate the cycle
// point of maximum overlap.  Unlike nearest_phase this demands that the
// settled state actually lies on the cycle.
inline double isochron_phase(const LimitCycle& lc, const Ket& psi, int n_periods) {
  if (psi.size() != lc.model.dim)
    throw std::invalid_argument("isochron_phase: state dimension mismatch");
  if (n_periods < 0) throw std::invalid_argument("isochron_phase: n_periods >= 0");
  Propagator prop(lc.model);
  Ket end = normalize(psi);
  if (n_periods > 0)
    end = normalize(prop.integrate_deterministic(end, double(n_periods) * lc.T, lc.dt_sample));

  double ov = 0.0;
  const double theta = nearest_phase(lc, end, &ov);
  if (ov * ov < 1.0 - 1e-4)
    throw NotConvergedError("isochron_phase: endpoint is not close enough to the cycle");
  return theta;
}

}  // namespace qphase
