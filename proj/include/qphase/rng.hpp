// rng.hpp — Counter-based Gaussian noise: Philox4x32-10 keyed by
// (seed, trajectory index), addressed by (step, channel).  Draws are pure
// functions of their address, so ensembles are reproducible regardless of
// execution order or worker count.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace qphase {

namespace detail {

struct U128 {
  std::uint32_t w[4];
};

inline void philox_round(U128& ctr, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint64_t kMul0 = 0xD2511F53ull;
  constexpr std::uint64_t kMul1 = 0xCD9E8D57ull;
  std::uint64_t p0 = kMul0 * ctr.w[0];
  std::uint64_t p1 = kMul1 * ctr.w[2];
  U128 out;
  out.w[0] = std::uint32_t(p1 >> 32) ^ ctr.w[1] ^ k0;
  out.w[1] = std::uint32_t(p1);
  out.w[2] = std::uint32_t(p0 >> 32) ^ ctr.w[3] ^ k1;
  out.w[3] = std::uint32_t(p0);
  ctr = out;
}

inline U128 philox4x32_10(U128 ctr, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    philox_round(ctr, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform in (0,1): 53 mantissa bits from two 32-bit words, offset off zero.
inline double to_unit_double(std::uint32_t hi, std::uint32_t lo) {
  std::uint64_t u = (std::uint64_t(hi) << 32) | lo;
  return double(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace detail

// Stream of independent standard normal draws addressed by (step, channel).
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t trajectory) {
    std::uint64_t key = detail::splitmix64(seed ^ detail::splitmix64(trajectory));
    key0_ = std::uint32_t(key);
    key1_ = std::uint32_t(key >> 32);
  }

  // Standard normal draw for the given address.
  double normal(std::uint64_t step, std::uint32_t channel) const {
    detail::U128 ctr{{std::uint32_t(step), std::uint32_t(step >> 32), channel, 0x51E57A4Eu}};
    detail::U128 r = detail::philox4x32_10(ctr, key0_, key1_);
    double u1 = detail::to_unit_double(r.w[0], r.w[1]);
    double u2 = detail::to_unit_double(r.w[2], r.w[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint32_t key0_, key1_;
};

// Materialized Wiener increments for one trajectory: dW(step, channel) with
// variance dt per step.
struct NoiseRealization {
  Eigen::MatrixXd dw;  // n_steps x n_channels

  static NoiseRealization generate(std::uint64_t seed, std::uint64_t trajectory,
                                   Eigen::Index n_steps, Eigen::Index n_channels,
                                   double dt) {
    if (n_steps < 0 || n_channels < 0 || !(dt > 0.0))
      throw std::invalid_argument("NoiseRealization::generate: bad shape or dt");
    GaussianStream g(seed, trajectory);
    NoiseRealization nr;
    nr.dw.resize(n_steps, n_channels);
    const double s = std::sqrt(dt);
    for (Eigen::Index i = 0; i < n_steps; ++i)
      for (Eigen::Index k = 0; k < n_channels; ++k)
        nr.dw(i, k) = s * g.normal(std::uint64_t(i), std::uint32_t(k));
    return nr;
  }
};

}  // namespace qphase
