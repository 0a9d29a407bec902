// Tests for the validation layer: fidelity and trace distance against closed
// forms and cross-inequalities, histogram-to-density reconstruction on a real
// cycle, Wigner and Husimi transforms against Gaussian references, the
// classical oscillator formulas against direct integration, and histogram
// distances.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "qphase/analysis.hpp"
#include "qphase/limit_cycle.hpp"
#include "qphase/models.hpp"
#include "qphase/rng.hpp"

using namespace qphase;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Ket random_ket(int dim, std::mt19937& rng) {
  std::normal_distribution<double> gauss;
  Ket v(dim);
  for (int i = 0; i < dim; ++i) v[i] = Complex(gauss(rng), gauss(rng));
  return normalize(v);
}

Operator random_density(int dim, std::mt19937& rng) {
  std::normal_distribution<double> gauss;
  Operator g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Operator rho = g * g.adjoint();
  return rho / rho.trace().real();
}

Operator coherent_density(const Complex& beta, int dim) {
  Ket c(dim);
  Complex amp = std::exp(Complex(-0.5 * std::norm(beta), 0.0));
  for (int k = 0; k < dim; ++k) {
    c[k] = amp;
    amp *= beta / std::sqrt(double(k + 1));
  }
  return c * c.adjoint();
}

Operator fock_density(int level, int dim) {
  Operator rho = Operator::Zero(dim, dim);
  rho(level, level) = 1.0;
  return rho;
}

const LimitCycle& bitflip_cycle() {
  static const LimitCycle lc = [] {
    Ket psi(2);
    psi << Complex(1.0, 0.0), Complex(0.5, -0.2);
    return find_limit_cycle(build_preset("bitflip"), normalize(psi), -1.0, 64);
  }();
  return lc;
}

Histogram uniform_histogram(int n_bins) {
  Histogram h;
  h.density = Eigen::VectorXd::Constant(n_bins, 1.0 / kTwoPi);
  h.total_samples = 1000;
  return h;
}

}  // namespace

TEST_CASE("fidelity matches closed forms on pure and diagonal states") {
  std::mt19937 rng(42);

  Operator rho = random_density(5, rng);
  CHECK_THAT(fidelity(rho, rho), WithinAbs(1.0, 1e-10));

  Ket e0 = Ket::Zero(3), e1 = Ket::Zero(3);
  e0[0] = 1.0;
  e1[1] = 1.0;
  CHECK_THAT(fidelity(e0 * e0.adjoint(), e1 * e1.adjoint()), WithinAbs(0.0, 1e-12));

  for (int trial = 0; trial < 5; ++trial) {
    Ket a = random_ket(4, rng), b = random_ket(4, rng);
    const double overlap = std::norm(a.dot(b));
    CHECK_THAT(fidelity(a * a.adjoint(), b * b.adjoint()), WithinAbs(overlap, 1e-10));
  }

  // commuting diagonal states: classical Bhattacharyya coefficient squared
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd p(4), q(4);
    for (int i = 0; i < 4; ++i) {
      p[i] = unif(rng);
      q[i] = unif(rng);
    }
    p /= p.sum();
    q /= q.sum();
    Operator dp = Operator::Zero(4, 4), dq = Operator::Zero(4, 4);
    double bhatt = 0.0;
    for (int i = 0; i < 4; ++i) {
      dp(i, i) = p[i];
      dq(i, i) = q[i];
      bhatt += std::sqrt(p[i] * q[i]);
    }
    CHECK_THAT(fidelity(dp, dq), WithinAbs(bhatt * bhatt, 1e-10));
  }

  Operator r1 = random_density(5, rng), r2 = random_density(5, rng);
  CHECK_THAT(fidelity(r1, r2), WithinAbs(fidelity(r2, r1), 1e-8));
}

TEST_CASE("fidelity decreases monotonically under depolarizing mixing") {
  std::mt19937 rng(7);
  const int dim = 4;
  const Operator eye = Operator::Identity(dim, dim);

  // pure reference: exact linear law (1 - lambda) + lambda / dim
  Ket psi = random_ket(dim, rng);
  Operator proj = psi * psi.adjoint();
  for (double lam : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    Operator mixed = (1.0 - lam) * proj + (lam / dim) * eye;
    CHECK_THAT(fidelity(proj, mixed), WithinAbs(1.0 - lam + lam / dim, 1e-10));
  }

  // mixed reference: still strictly decreasing along the mixing path
  Operator rho = random_density(dim, rng);
  double prev = 2.0;
  for (double lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Operator mixed = (1.0 - lam) * rho + (lam / dim) * eye;
    const double f = fidelity(rho, mixed);
    CHECK(f < prev + 1e-14);
    if (lam > 0.0) CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("invalid states are rejected") {
  std::mt19937 rng(3);
  const Operator good = random_density(3, rng);

  Operator traceless = good * 2.0;
  CHECK_THROWS_AS(fidelity(good, traceless), std::invalid_argument);

  Operator skew = good;
  skew(0, 1) += Complex(0.0, 1e-6);
  CHECK_THROWS_AS(fidelity(skew, good), std::invalid_argument);

  Operator negative = Operator::Zero(2, 2);
  negative(0, 0) = 1.0 + 1e-5;
  negative(1, 1) = -1e-5;
  CHECK_THROWS_AS(fidelity(negative, fock_density(0, 2)), std::invalid_argument);

  Operator rounding = Operator::Zero(2, 2);
  rounding(0, 0) = 1.0 + 1e-9;
  rounding(1, 1) = -1e-9;
  CHECK_THAT(fidelity(rounding, fock_density(0, 2)), WithinAbs(1.0, 1e-6));

  CHECK_THROWS_AS(fidelity(good, random_density(4, rng)), std::invalid_argument);
  CHECK_THROWS_AS(trace_distance(good, random_density(4, rng)), std::invalid_argument);

  Operator not_hermitian = Operator::Zero(2, 2);
  not_hermitian(0, 1) = 1.0;
  CHECK_THROWS_AS(trace_distance(not_hermitian, Operator::Zero(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("trace distance matches closed forms and bounds fidelity") {
  std::mt19937 rng(11);

  Operator rho = random_density(4, rng);
  CHECK_THAT(trace_distance(rho, rho), WithinAbs(0.0, 1e-12));

  Ket e0 = Ket::Zero(2), e1 = Ket::Zero(2);
  e0[0] = 1.0;
  e1[1] = 1.0;
  CHECK_THAT(trace_distance(e0 * e0.adjoint(), e1 * e1.adjoint()), WithinAbs(1.0, 1e-12));

  // diagonal qubit pair: distance is just the population difference
  for (double p : {0.2, 0.6}) {
    for (double q : {0.1, 0.9}) {
      Operator a = Operator::Zero(2, 2), b = Operator::Zero(2, 2);
      a(0, 0) = p;
      a(1, 1) = 1.0 - p;
      b(0, 0) = q;
      b(1, 1) = 1.0 - q;
      CHECK_THAT(trace_distance(a, b), WithinAbs(std::abs(p - q), 1e-12));
    }
  }

  // any projector distinguishes the pair by at most the trace distance
  for (int trial = 0; trial < 5; ++trial) {
    Operator r1 = random_density(4, rng), r2 = random_density(4, rng);
    const double td = trace_distance(r1, r2);
    Ket v = random_ket(4, rng);
    const Operator e = v * v.adjoint();
    const double gap = std::abs(((r1 - r2) * e).trace().real());
    CHECK(gap <= td + 1e-12);

    // two-sided bounds interlocking with fidelity
    const double f = fidelity(r1, r2);
    CHECK(1.0 - std::sqrt(f) <= td + 1e-10);
    CHECK(td <= std::sqrt(1.0 - f) + 1e-10);
  }

  // for pure states the upper bound is tight
  Ket a = random_ket(3, rng), b = random_ket(3, rng);
  const Operator pa = a * a.adjoint(), pb = b * b.adjoint();
  CHECK_THAT(trace_distance(pa, pb), WithinAbs(std::sqrt(1.0 - fidelity(pa, pb)), 1e-8));
}

TEST_CASE("density reconstruction assembles the cycle mixture") {
  const LimitCycle& lc = bitflip_cycle();

  // all mass in one bin: the projector onto that cycle point
  Histogram delta;
  delta.density = Eigen::VectorXd::Zero(32);
  delta.density[10] = 1.0 / delta.bin_width();
  delta.total_samples = 500;
  const Ket psi = sample_cycle(lc, delta.bin_center(10));
  const Operator rho_delta = reconstruct_density(delta, lc);
  CHECK((rho_delta - psi * psi.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  // uniform mass: a valid mixed state accepted by the distance layer
  const Histogram flat = uniform_histogram(48);
  const Operator rho_flat = reconstruct_density(flat, lc);
  CHECK(is_hermitian(rho_flat, 1e-12));
  CHECK_THAT(rho_flat.trace().real(), WithinAbs(1.0, 1e-10));
  Eigen::SelfAdjointEigenSolver<Operator> es(rho_flat, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  CHECK_THAT(fidelity(rho_flat, rho_flat), WithinAbs(1.0, 1e-10));

  // expectation values are the histogram averages of the cycle expectations
  std::mt19937 rng(19);
  Histogram bumpy;
  bumpy.density = Eigen::VectorXd::Zero(32);
  for (int i = 0; i < 32; ++i) bumpy.density[i] = 1.0 + 0.3 * std::sin(kTwoPi * i / 32.0);
  bumpy.density /= bumpy.density.sum() * bumpy.bin_width();
  bumpy.total_samples = 1000;
  const Operator rho_bumpy = reconstruct_density(bumpy, lc);
  Operator x = Operator::Zero(2, 2);
  x(0, 1) = Complex(0.3, -0.4);
  x(1, 0) = Complex(0.3, 0.4);
  x(0, 0) = 0.7;
  double want = 0.0;
  for (int i = 0; i < 32; ++i) {
    const Ket c = sample_cycle(lc, bumpy.bin_center(i));
    want += bumpy.density[i] * bumpy.bin_width() * c.dot(x * c).real();
  }
  CHECK_THAT((rho_bumpy * x).trace().real(), WithinAbs(want, 1e-12));

  CHECK_THROWS_AS(reconstruct_density(Histogram{}, lc), std::invalid_argument);
  CHECK_THROWS_AS(reconstruct_density(flat, LimitCycle{}), std::invalid_argument);
}

TEST_CASE("wigner reproduces closed-form states") {
  // vacuum: centered unit Gaussian over the plane
  const Operator vac = fock_density(0, 5);
  CHECK_THAT(wigner_point(vac, 0.0, 0.0), WithinAbs(1.0 / kPi, 1e-6));
  for (double x : {-1.3, 0.4, 2.0})
    for (double p : {-0.7, 0.0, 1.9})
      CHECK_THAT(wigner_point(vac, x, p),
                 WithinAbs(std::exp(-x * x - p * p) / kPi, 1e-10));

  // first excited level: negative at the origin, node on the known ring
  const Operator one = fock_density(1, 5);
  CHECK_THAT(wigner_point(one, 0.0, 0.0), WithinAbs(-1.0 / kPi, 1e-12));
  CHECK_THAT(wigner_point(one, std::sqrt(0.5), 0.0), WithinAbs(0.0, 1e-12));

  // displaced ground state: shifted Gaussian, off-diagonal terms exercised
  const Complex beta(0.8, 0.4);
  const Operator rho = coherent_density(beta, 30);
  const double x0 = std::numbers::sqrt2 * beta.real();
  const double p0 = std::numbers::sqrt2 * beta.imag();
  double worst = 0.0;
  for (double x = -2.0; x <= 3.0; x += 0.7)
    for (double p = -2.0; p <= 3.0; p += 0.7)
      worst = std::max(worst, std::abs(wigner_point(rho, x, p) -
                                       std::exp(-(x - x0) * (x - x0) -
                                                (p - p0) * (p - p0)) /
                                           kPi));
  CHECK(worst < 1e-12);
}

TEST_CASE("wigner grids are normalized, oriented, and symmetric for diagonal states") {
  Operator mix = 0.5 * fock_density(0, 5) + 0.3 * fock_density(1, 5) +
                 0.2 * fock_density(2, 5);

  const PhaseSpaceGrid g = wigner(mix);
  CHECK(g.x.size() == 201);
  CHECK(g.p.size() == 201);
  CHECK_THAT(g.x[g.x.size() - 1], WithinAbs(std::sqrt(10.0) + 2.0, 1e-12));
  CHECK_THAT(g.integral(), WithinAbs(1.0, 0.05));

  // level-diagonal states depend on the radius only
  for (double r : {0.5, 1.3}) {
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < 8; ++k) {
      const double ang = kTwoPi * k / 8.0;
      const double w = wigner_point(mix, r * std::cos(ang), r * std::sin(ang));
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    CHECK(hi - lo < 1e-6);
  }

  // orientation: values(i, j) sits at (x[i], p[j])
  const Operator shifted = coherent_density(Complex(1.0, 0.0), 30);
  PhaseSpaceSpec spec;
  spec.x_half = 4.0;
  spec.p_half = 4.0;
  spec.nx = 81;
  spec.np = 81;
  const PhaseSpaceGrid gs = wigner(shifted, spec);
  Eigen::Index imax = 0, jmax = 0;
  gs.values.maxCoeff(&imax, &jmax);
  CHECK_THAT(gs.x[imax], WithinAbs(std::numbers::sqrt2, 0.11));
  CHECK_THAT(gs.p[jmax], WithinAbs(0.0, 0.11));

  PhaseSpaceSpec bad;
  bad.nx = 1;
  CHECK_THROWS_AS(wigner(mix, bad), std::invalid_argument);
}

TEST_CASE("wigner warns when the top level carries population") {
  std::stringstream captured;
  std::streambuf* old = std::cerr.rdbuf(captured.rdbuf());
  PhaseSpaceSpec tiny;
  tiny.nx = 5;
  tiny.np = 5;
  wigner(fock_density(4, 5), tiny);
  std::cerr.rdbuf(old);
  CHECK(captured.str().find("wigner") != std::string::npos);

  std::stringstream quiet;
  old = std::cerr.rdbuf(quiet.rdbuf());
  wigner(fock_density(0, 5), tiny);
  std::cerr.rdbuf(old);
  CHECK(quiet.str().empty());
}

TEST_CASE("husimi is nonnegative and matches coherent overlaps") {
  const Operator vac = fock_density(0, 5);
  CHECK_THAT(husimi_point(vac, 0.0, 0.0), WithinAbs(1.0 / kPi, 1e-12));

  const Complex beta(0.8, 0.4);
  const Operator rho = coherent_density(beta, 30);
  double worst = 0.0;
  for (double x = -2.0; x <= 3.0; x += 0.7)
    for (double p = -2.0; p <= 3.0; p += 0.7) {
      const Complex alpha = Complex(x, p) / std::numbers::sqrt2;
      worst = std::max(worst, std::abs(husimi_point(rho, x, p) -
                                       std::exp(-std::norm(alpha - beta)) / kPi));
    }
  CHECK(worst < 1e-12);

  std::mt19937 rng(23);
  const Operator mixed = random_density(6, rng);
  PhaseSpaceSpec spec;
  spec.nx = 41;
  spec.np = 41;
  const PhaseSpaceGrid g = husimi_q(mixed, spec);
  CHECK(g.values.minCoeff() >= 0.0);

  // the stated convention carries the coherent-plane measure: the x-p
  // integral is twice the state norm
  const PhaseSpaceGrid gv = husimi_q(0.5 * fock_density(0, 5) +
                                     0.5 * fock_density(1, 5));
  CHECK_THAT(gv.integral(), WithinAbs(2.0, 0.02));
}

TEST_CASE("spin husimi peaks along the coherent direction and covers the sphere") {
  // spin-1/2 up: closed-form cap density
  Operator up = fock_density(0, 2);
  CHECK_THAT(husimi_spin_point(up, 0.0, 0.0), WithinAbs(2.0 / (4.0 * kPi), 1e-12));
  CHECK_THAT(husimi_spin_point(up, kPi, 0.0), WithinAbs(0.0, 1e-12));
  CHECK_THAT(husimi_spin_point(up, kPi / 2.0, 1.0),
             WithinAbs(1.0 / (4.0 * kPi), 1e-12));

  // spin-3/2 coherent state: self-overlap saturates the weight at its own
  // direction and is strictly smaller elsewhere
  const double t0 = 1.1, f0 = 2.3;
  const int n = 4;
  const double j2 = 3.0;
  Ket c(n);
  double binom = 1.0;
  for (int i = 0; i < n; ++i) {
    c[i] = std::sqrt(binom) * std::pow(std::cos(0.5 * t0), j2 - i) *
           std::pow(std::sin(0.5 * t0), double(i)) * std::exp(kI * (double(i) * f0));
    binom *= (j2 - i) / double(i + 1);
  }
  const Operator rho = c * c.adjoint();
  const double peak = husimi_spin_point(rho, t0, f0);
  CHECK_THAT(peak, WithinAbs(double(n) / (4.0 * kPi), 1e-12));
  for (double dt : {-0.4, 0.3})
    CHECK(husimi_spin_point(rho, t0 + dt, f0 + 0.2) < peak);

  // sphere integral with the sin(theta) weight
  const PhaseSpaceGrid g = husimi_q_spin(rho, 96, 96);
  double sphere = 0.0;
  const double dth = kPi / 96.0, dph = kTwoPi / 96.0;
  for (int i = 0; i < 96; ++i)
    for (int j = 0; j < 96; ++j) sphere += g.values(i, j) * std::sin(g.x[i]) * dth * dph;
  CHECK_THAT(sphere, WithinAbs(1.0, 2e-3));

  CHECK_THROWS_AS(husimi_spin_point(Operator::Identity(1, 1), 0.5, 0.5),
                  std::invalid_argument);
}

TEST_CASE("semiclassical reference matches the amplitude equation") {
  const double delta = 0.7, g1g = 2.0, g1d = 0.5, g2d = 0.1;
  const SemiclassicalVdp ref = semiclassical_vdp(delta, g1g, g1d, g2d);
  CHECK_THAT(ref.epsilon, WithinAbs(1.5, 1e-15));
  CHECK_THAT(ref.r_star, WithinAbs(std::sqrt(7.5), 1e-12));
  CHECK_THAT(ref.x_amplitude, WithinAbs(std::sqrt(15.0), 1e-12));
  CHECK_THAT(ref.omega, WithinAbs(delta, 0.0));
  CHECK_THAT(ref.prc_amplitude * ref.x_amplitude, WithinAbs(1.0, 1e-15));
  CHECK_THAT(ref.prc_reference(0.0), WithinAbs(0.0, 1e-15));
  CHECK_THAT(ref.prc_reference(kPi / 2.0), WithinAbs(-ref.prc_amplitude, 1e-15));

  // direct integration of the amplitude flow settles onto the predicted ring
  // and rotates at the predicted rate
  auto flow = [&](const Complex& a) {
    return (kI * delta + 0.5 * ref.epsilon - g2d * std::norm(a)) * a;
  };
  Complex a(1.0, 0.0);
  const double dt = 0.01;
  for (int s = 0; s < 4000; ++s) {
    const Complex k1 = flow(a);
    const Complex k2 = flow(a + 0.5 * dt * k1);
    const Complex k3 = flow(a + 0.5 * dt * k2);
    const Complex k4 = flow(a + dt * k3);
    a += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  CHECK_THAT(std::abs(a), WithinAbs(ref.r_star, 1e-6));
  const Complex k1 = flow(a);
  CHECK_THAT(std::imag(k1 / a), WithinAbs(ref.omega, 1e-9));

  CHECK(semiclassical_vdp(-2.0, 1.0, 0.0, 0.1).omega == -2.0);
  CHECK_THROWS_AS(semiclassical_vdp(1.0, 0.5, 0.5, 0.1), NoCycleError);
  CHECK_THROWS_AS(semiclassical_vdp(1.0, 0.2, 0.5, 0.1), NoCycleError);
  CHECK_THROWS_AS(semiclassical_vdp(1.0, 2.0, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("classical noise produces slow phase diffusion at large amplitude") {
  // weak pump far above threshold: a wide ring whose phase barely diffuses
  const double delta = 1.0, g1g = 1e-3, g1d = 0.0, g2d = 5e-6;
  const SemiclassicalVdp ref = semiclassical_vdp(delta, g1g, g1d, g2d);
  CHECK_THAT(ref.r_star, WithinAbs(10.0, 1e-12));

  const double t_end = kTwoPi / delta;
  const int n_steps = 6283;
  const double h = t_end / n_steps;
  const int n_traj = 200;
  Eigen::VectorXd winding(n_traj);
  for (int k = 0; k < n_traj; ++k) {
    GaussianStream stream(987654u, std::uint64_t(k));
    Complex a(ref.r_star, 0.0);
    double acc = 0.0;
    for (int s = 0; s < n_steps; ++s) {
      const Complex drift = (kI * delta + 0.5 * ref.epsilon - g2d * std::norm(a)) * a;
      const Complex next =
          a + h * drift + std::sqrt(g1g * h) * stream.normal(std::uint64_t(s), 0);
      acc += std::arg(next / a);
      a = next;
    }
    winding[k] = acc;
  }
  const double mean = winding.mean();
  const double sd = std::sqrt((winding.array() - mean).square().sum() / (n_traj - 1));
  CHECK_THAT(mean, WithinAbs(kTwoPi, 0.02));
  CHECK(sd < 1e-2);
}

TEST_CASE("nearest phase inverts the cycle parameterization") {
  const LimitCycle& lc = bitflip_cycle();

  for (int i : {0, 7, 20, 41, 63}) {
    double ov = 0.0;
    const double th = nearest_phase(lc, lc.samples[std::size_t(i)], &ov);
    const double want = kTwoPi * double(i) / 64.0;
    double diff = std::abs(th - want);
    diff = std::min(diff, kTwoPi - diff);
    CHECK(diff < 1e-6);
    CHECK_THAT(ov, WithinAbs(1.0, 1e-9));
  }

  // global phase of the state is irrelevant
  const Ket rotated = std::exp(kI * 0.93) * lc.samples[12];
  double diff = std::abs(nearest_phase(lc, rotated) - kTwoPi * 12.0 / 64.0);
  CHECK(std::min(diff, kTwoPi - diff) < 1e-6);

  // a state pushed off the cycle still projects, with a reported overlap < 1
  std::mt19937 rng(31);
  Ket off = lc.samples[30] + 0.2 * random_ket(2, rng);
  double ov = 0.0;
  const double th = nearest_phase(lc, normalize(off), &ov);
  CHECK(th >= 0.0);
  CHECK(th < kTwoPi);
  CHECK(ov < 1.0);

  CHECK_THROWS_AS(nearest_phase(LimitCycle{}, lc.samples[0]), std::invalid_argument);
  CHECK_THROWS_AS(nearest_phase(lc, Ket::Ones(5)), std::invalid_argument);
}

TEST_CASE("trajectory phase histograms are deterministic and track the cycle") {
  // noiseless rotation: stratified starts sweep the circle uniformly
  SpinOps s = make_spin(1);
  LindbladModel rot = make_model("precession", s.sz, {Operator::Zero(2, 2)});
  Ket psi(2);
  psi << Complex(1.0, 0.0), Complex(0.7, 0.0);
  const LimitCycle lc_rot = find_limit_cycle(rot, normalize(psi), -1.0, 64);

  SsePhaseOptions opt;
  opt.n_traj = 16;
  opt.t_end = 20.0;
  opt.dt = 0.01;
  opt.seed = 555;
  opt.n_bins = 16;
  const Histogram h_rot = sse_phase_histogram(lc_rot, opt);
  CHECK_THAT(h_rot.density.sum() * h_rot.bin_width(), WithinAbs(1.0, 1e-12));
  const Histogram flat = [&] {
    Histogram f;
    f.density = Eigen::VectorXd::Constant(16, 1.0 / kTwoPi);
    f.total_samples = 1;
    return f;
  }();
  CHECK(compare_distributions(h_rot, flat) < 0.05);

  // monitored qubit: bitwise reproducible, seed- and worker-sensitive only
  // through the declared inputs
  const LimitCycle& lc = bitflip_cycle();
  SsePhaseOptions mo;
  mo.n_traj = 8;
  mo.t_end = 20.0;
  mo.dt = 0.005;
  mo.seed = 99;
  mo.n_bins = 32;
  mo.sample_stride = 10;
  const Histogram h1 = sse_phase_histogram(lc, mo);
  const Histogram h2 = sse_phase_histogram(lc, mo);
  CHECK(h1.total_samples == h2.total_samples);
  CHECK((h1.density - h2.density).cwiseAbs().maxCoeff() == 0.0);

  const long n_steps = 4000, discard = 800;
  CHECK(h1.total_samples == 8 * ((n_steps - discard) / 10));

  SsePhaseOptions other = mo;
  other.seed = 100;
  CHECK((sse_phase_histogram(lc, other).density - h1.density).cwiseAbs().maxCoeff() >
        0.0);

  setenv("QPHASE_THREADS", "3", 1);
  const Histogram h3 = sse_phase_histogram(lc, mo);
  unsetenv("QPHASE_THREADS");
  CHECK((h3.density - h1.density).cwiseAbs().maxCoeff() == 0.0);

  // the stratonovich scheme samples the same stationary law
  SsePhaseOptions so = mo;
  so.scheme = SseScheme::stratonovich_heun;
  const Histogram hs = sse_phase_histogram(lc, so);
  CHECK(hs.total_samples == h1.total_samples);
  CHECK(compare_distributions(hs, h1) < 0.25);

  SsePhaseOptions bad = mo;
  bad.n_traj = 0;
  CHECK_THROWS_AS(sse_phase_histogram(lc, bad), std::invalid_argument);
  bad = mo;
  bad.dt = -1.0;
  CHECK_THROWS_AS(sse_phase_histogram(lc, bad), std::invalid_argument);
  bad = mo;
  bad.n_bins = 1;
  CHECK_THROWS_AS(sse_phase_histogram(lc, bad), std::invalid_argument);
  bad = mo;
  bad.sample_stride = 0;
  CHECK_THROWS_AS(sse_phase_histogram(lc, bad), std::invalid_argument);
  bad = mo;
  bad.discard_fraction = 1.0;
  CHECK_THROWS_AS(sse_phase_histogram(lc, bad), std::invalid_argument);
  bad = mo;
  bad.scheme = SseScheme::general_p;
  CHECK_THROWS_AS(sse_phase_histogram(lc, bad), std::invalid_argument);
  bad = mo;
  bad.t_end = 10.0 * mo.dt;
  bad.sample_stride = 1000;
  CHECK_THROWS_AS(sse_phase_histogram(lc, bad), std::invalid_argument);
  CHECK_THROWS_AS(sse_phase_histogram(LimitCycle{}, mo), std::invalid_argument);
}

TEST_CASE("histogram distances are bounded and detect disjoint support") {
  const Histogram flat = uniform_histogram(64);
  CHECK_THAT(compare_distributions(flat, flat), WithinAbs(0.0, 1e-15));

  Histogram left, right;
  left.density = Eigen::VectorXd::Zero(16);
  right.density = Eigen::VectorXd::Zero(16);
  left.density[0] = 1.0 / left.bin_width();
  right.density[5] = 1.0 / right.bin_width();
  CHECK_THAT(compare_distributions(left, right), WithinAbs(1.0, 1e-12));
  CHECK_THAT(compare_distributions(right, left),
             WithinAbs(compare_distributions(left, right), 1e-15));

  // modulated versus uniform: the absolute-cosine area
  Histogram wavy = uniform_histogram(64);
  for (int i = 0; i < 64; ++i)
    wavy.density[i] = (1.0 + 0.5 * std::cos(wavy.bin_center(i))) / kTwoPi;
  CHECK_THAT(compare_distributions(flat, wavy), WithinAbs(1.0 / kTwoPi, 1e-3));

  CHECK_THROWS_AS(compare_distributions(flat, uniform_histogram(32)),
                  std::invalid_argument);
  CHECK_THROWS_AS(compare_distributions(Histogram{}, Histogram{}),
                  std::invalid_argument);
}
