// Tests for dense operator constructors, the su(N) generator basis, and the
// counter-based Gaussian stream.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "qphase/operator_algebra.hpp"
#include "qphase/rng.hpp"

using namespace qphase;
using Catch::Matchers::WithinAbs;

namespace {

// Independent oracle: dense matrix product by explicit index loops, no Eigen
// arithmetic involved.
Operator slow_multiply(const Operator& a, const Operator& b) {
  Operator c = Operator::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

double max_abs_diff(const Operator& a, const Operator& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("annihilation operator has sqrt(m+1) superdiagonal") {
  Operator a = make_annihilation(4);
  Operator expect = Operator::Zero(4, 4);
  expect(0, 1) = 1.0;
  expect(1, 2) = std::sqrt(2.0);
  expect(2, 3) = std::sqrt(3.0);
  REQUIRE(max_abs_diff(a, expect) == 0.0);
  REQUIRE_THROWS_AS(make_annihilation(1), std::invalid_argument);
}

TEST_CASE("truncated commutator [a, a^dag] picks up the boundary defect") {
  // Oracle: build the ladder entries by hand and multiply with explicit loops.
  Operator a = Operator::Zero(4, 4);
  a(0, 1) = 1.0;
  a(1, 2) = std::sqrt(2.0);
  a(2, 3) = std::sqrt(3.0);
  Operator ad = a.adjoint();
  Operator comm_oracle = slow_multiply(a, ad) - slow_multiply(ad, a);

  Operator lib = commutator(make_annihilation(4), make_annihilation(4).adjoint());
  REQUIRE(max_abs_diff(lib, comm_oracle) < 1e-14);

  Operator expect = Operator::Zero(4, 4);
  expect.diagonal() << 1.0, 1.0, 1.0, -3.0;
  REQUIRE(max_abs_diff(lib, expect) < 1e-14);
}

TEST_CASE("spin-1/2 operators are half the Pauli matrices") {
  SpinOps s = make_spin(1);
  Operator sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0, 0.5, 0.5, 0;
  sy << 0, Complex(0, -0.5), Complex(0, 0.5), 0;
  sz << 0.5, 0, 0, -0.5;
  REQUIRE(max_abs_diff(s.sx, sx) < 1e-15);
  REQUIRE(max_abs_diff(s.sy, sy) < 1e-15);
  REQUIRE(max_abs_diff(s.sz, sz) < 1e-15);

  // Ladder convention: S+ = (Sx + i Sy)/sqrt(2) has a single 1/sqrt(2) entry.
  Operator sp = spin_plus(s);
  REQUIRE_THAT(std::abs(sp(0, 1) - Complex(1.0 / std::sqrt(2.0), 0)), WithinAbs(0.0, 1e-15));
  REQUIRE_THAT(sp.cwiseAbs().sum(), WithinAbs(1.0 / std::sqrt(2.0), 1e-15));
}

TEST_CASE("spin-1 satisfies the su(2) algebra") {
  SpinOps s = make_spin(2);
  REQUIRE(max_abs_diff(commutator(s.sx, s.sy), kI * s.sz) < 1e-12);
  REQUIRE(max_abs_diff(commutator(s.sy, s.sz), kI * s.sx) < 1e-12);
  REQUIRE(max_abs_diff(commutator(s.sz, s.sx), kI * s.sy) < 1e-12);
  Operator casimir = s.sx * s.sx + s.sy * s.sy + s.sz * s.sz;
  REQUIRE(max_abs_diff(casimir, 2.0 * Operator::Identity(3, 3)) < 1e-12);
}

TEST_CASE("spin-3/2 matrices match frozen literals") {
  SpinOps s = make_spin(3);
  Operator sz = Operator::Zero(4, 4);
  sz.diagonal() << 1.5, 0.5, -0.5, -1.5;
  REQUIRE(max_abs_diff(s.sz, sz) < 1e-15);

  const double r3 = std::sqrt(3.0);
  Operator sx = Operator::Zero(4, 4);
  sx(0, 1) = sx(1, 0) = r3 / 2;
  sx(1, 2) = sx(2, 1) = 1.0;
  sx(2, 3) = sx(3, 2) = r3 / 2;
  REQUIRE(max_abs_diff(s.sx, sx) < 1e-15);

  Operator sy = Operator::Zero(4, 4);
  sy(0, 1) = Complex(0, -r3 / 2);
  sy(1, 0) = Complex(0, r3 / 2);
  sy(1, 2) = Complex(0, -1.0);
  sy(2, 1) = Complex(0, 1.0);
  sy(2, 3) = Complex(0, -r3 / 2);
  sy(3, 2) = Complex(0, r3 / 2);
  REQUIRE(max_abs_diff(s.sy, sy) < 1e-15);
}

TEST_CASE("generator basis reduces to scaled Pauli matrices at N=2") {
  GeneratorBasis b = make_generator_basis(2);
  REQUIRE(b.count() == 3);
  const double s = 1.0 / std::sqrt(2.0);
  Operator px(2, 2), py(2, 2), pz(2, 2);
  px << 0, 1, 1, 0;
  py << 0, Complex(0, -1), Complex(0, 1), 0;
  pz << 1, 0, 0, -1;
  REQUIRE(max_abs_diff(b.sym(0, 1), s * px) < 1e-15);
  REQUIRE(max_abs_diff(b.asym(0, 1), s * py) < 1e-15);
  REQUIRE(max_abs_diff(b.diag(1), s * pz) < 1e-15);
}

TEST_CASE("generator basis at N=3 matches the standard su(3) matrices") {
  GeneratorBasis b = make_generator_basis(3);
  REQUIRE(b.count() == 8);
  const double s = 1.0 / std::sqrt(2.0);

  // Frozen reference matrices (scaled by 1/sqrt(2) to unit HS norm).
  Operator l1 = Operator::Zero(3, 3), l4 = Operator::Zero(3, 3), l6 = Operator::Zero(3, 3);
  l1(0, 1) = l1(1, 0) = 1;
  l4(0, 2) = l4(2, 0) = 1;
  l6(1, 2) = l6(2, 1) = 1;
  Operator l2 = Operator::Zero(3, 3), l5 = Operator::Zero(3, 3), l7 = Operator::Zero(3, 3);
  l2(0, 1) = Complex(0, -1);
  l2(1, 0) = Complex(0, 1);
  l5(0, 2) = Complex(0, -1);
  l5(2, 0) = Complex(0, 1);
  l7(1, 2) = Complex(0, -1);
  l7(2, 1) = Complex(0, 1);
  Operator l3 = Operator::Zero(3, 3), l8 = Operator::Zero(3, 3);
  l3.diagonal() << 1, -1, 0;
  l8.diagonal() << 1, 1, -2;
  l8 /= std::sqrt(3.0);

  REQUIRE(max_abs_diff(b.sym(0, 1), s * l1) < 1e-15);
  REQUIRE(max_abs_diff(b.sym(0, 2), s * l4) < 1e-15);
  REQUIRE(max_abs_diff(b.sym(1, 2), s * l6) < 1e-15);
  REQUIRE(max_abs_diff(b.asym(0, 1), s * l2) < 1e-15);
  REQUIRE(max_abs_diff(b.asym(0, 2), s * l5) < 1e-15);
  REQUIRE(max_abs_diff(b.asym(1, 2), s * l7) < 1e-15);
  REQUIRE(max_abs_diff(b.diag(1), s * l3) < 1e-15);
  REQUIRE(max_abs_diff(b.diag(2), s * l8) < 1e-15);
}

TEST_CASE("generator basis is trace-orthonormal for N = 2..8") {
  for (int n = 2; n <= 8; ++n) {
    GeneratorBasis b = make_generator_basis(n);
    REQUIRE(int(b.generators.size()) == n * n - 1);
    for (int m = 0; m < b.count(); ++m) {
      REQUIRE(is_hermitian(b.generators[m], 1e-14));
      REQUIRE_THAT(std::abs(b.generators[m].trace()), WithinAbs(0.0, 1e-13));
      for (int l = m; l < b.count(); ++l) {
        Complex g = hs_inner(b.generators[m], b.generators[l]);
        double expect = (m == l) ? 1.0 : 0.0;
        REQUIRE_THAT(std::abs(g - expect), WithinAbs(0.0, 1e-12));
      }
    }
  }
}

TEST_CASE("random traceless Hermitian matrices expand exactly in the basis") {
  std::mt19937_64 rng(20240817);
  std::normal_distribution<double> gauss;
  for (int n : {2, 3, 5, 8}) {
    GeneratorBasis b = make_generator_basis(n);
    for (int rep = 0; rep < 25; ++rep) {
      Operator h(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h(i, j) = Complex(gauss(rng), gauss(rng));
      h = 0.5 * (h + Operator(h.adjoint())).eval();
      h -= (h.trace() / double(n)) * Operator::Identity(n, n);

      Operator rebuilt = Operator::Zero(n, n);
      for (const Operator& e : b.generators) {
        Complex c = hs_inner(e, h);
        REQUIRE_THAT(std::abs(c.imag()), WithinAbs(0.0, 1e-12));
        rebuilt += c.real() * e;
      }
      REQUIRE(max_abs_diff(rebuilt, h) < 1e-10);
    }
  }
}

TEST_CASE("expectation values and gauge fixing behave as specified") {
  Operator a = make_annihilation(3);
  Operator num = a.adjoint() * a;
  Ket ground = Ket::Zero(3);
  ground[0] = 1.0;
  REQUIRE_THAT(expectation_real(ground, num), WithinAbs(0.0, 1e-15));

  Ket mix = Ket::Zero(3);
  mix[0] = std::sqrt(0.25);
  mix[1] = std::sqrt(0.75);
  REQUIRE_THAT(expectation_real(mix, num), WithinAbs(0.75, 1e-14));
  REQUIRE_THROWS_AS(expectation_real(mix, a), std::invalid_argument);

  // Gauge fixing is insensitive to an overall phase and leaves the pivot
  // amplitude real non-negative.
  Ket psi(3);
  psi << Complex(0.1, 0.2), Complex(-0.6, 0.3), Complex(0.2, -0.1);
  psi.normalize();
  Ket fixed = gauge_fix(psi);
  Ket rotated = std::exp(kI * 1.234) * psi;
  REQUIRE((gauge_fix(rotated) - fixed).norm() < 1e-14);
  REQUIRE(std::abs(std::arg(fixed[1])) < 1e-14);  // pivot is index 1
  REQUIRE_THAT(std::abs(std::abs(psi[1]) - fixed[1].real()), WithinAbs(0.0, 1e-14));
  REQUIRE_THROWS_AS(gauge_fix(Ket::Zero(3).eval()), std::invalid_argument);
}

TEST_CASE("gaussian stream is deterministic and addressable out of order") {
  GaussianStream g(1234, 7);
  double a = g.normal(1000, 1);
  double b = g.normal(0, 0);
  GaussianStream g2(1234, 7);
  REQUIRE(g2.normal(0, 0) == b);
  REQUIRE(g2.normal(1000, 1) == a);
  // Different trajectory index gives an unrelated stream.
  GaussianStream g3(1234, 8);
  REQUIRE(g3.normal(0, 0) != b);
}

TEST_CASE("gaussian stream has standard-normal moments") {
  GaussianStream g(99, 0);
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    double z = g.normal(i, 0);
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  double mean = s1 / n, var = s2 / n, kurt = s4 / n;
  // 5-sigma bands for the sample moments of N(0,1).
  REQUIRE_THAT(mean, WithinAbs(0.0, 5.0 / std::sqrt(double(n))));
  REQUIRE_THAT(var, WithinAbs(1.0, 5.0 * std::sqrt(2.0 / n)));
  REQUIRE_THAT(kurt, WithinAbs(3.0, 5.0 * std::sqrt(96.0 / n)));
}

TEST_CASE("noise realization scales increments by sqrt(dt)") {
  NoiseRealization nr = NoiseRealization::generate(5, 2, 64, 3, 0.01);
  REQUIRE(nr.dw.rows() == 64);
  REQUIRE(nr.dw.cols() == 3);
  GaussianStream g(5, 2);
  REQUIRE_THAT(nr.dw(10, 1), WithinAbs(0.1 * g.normal(10, 1), 1e-18));
}
