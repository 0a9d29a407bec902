// models.hpp — Catalog of open-system oscillator models: Hamiltonian plus
// jump operators with rates folded in as L_k = sqrt(gamma) O, so the
// measurement equations can assume unit-rate channels throughout.
#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qphase/operator_algebra.hpp"

namespace qphase {

struct LindbladModel {
  std::string name;
  int dim = 0;
  Operator hamiltonian;
  std::vector<Operator> jumps;
  std::map<std::string, double> params;  // constructor arguments, by key
  double rate_scale = 0.0;               // max(|H|, max_k |L_k^dag L_k|), spectral norms

  int n_channels() const { return int(jumps.size()); }
};

namespace detail {

inline double compute_rate_scale(const Operator& h, const std::vector<Operator>& jumps) {
  double s = hermitian_norm(h);
  for (const Operator& l : jumps) s = std::max(s, hermitian_norm(Operator(l.adjoint() * l)));
  return s;
}

// Drop channels whose rate vanished; if that would leave no channel at all,
// keep the explicit zero operators so degenerate (purely unitary) variants of
// an oscillator model remain representable.
inline std::vector<Operator> prune_zero_channels(std::vector<Operator> jumps) {
  std::vector<Operator> kept;
  for (Operator& l : jumps)
    if (l.cwiseAbs().maxCoeff() > 0.0) kept.push_back(std::move(l));
  if (kept.empty()) return jumps;
  return kept;
}

inline LindbladModel finish(std::string name, Operator h, std::vector<Operator> jumps,
                            std::map<std::string, double> params) {
  if (!is_hermitian(h, 1e-12))
    throw std::invalid_argument("build_model: Hamiltonian is not Hermitian");
  LindbladModel m;
  m.name = std::move(name);
  m.dim = int(h.rows());
  m.hamiltonian = std::move(h);
  m.jumps = prune_zero_channels(std::move(jumps));
  m.params = std::move(params);
  m.rate_scale = compute_rate_scale(m.hamiltonian, m.jumps);
  return m;
}

inline void require_nonnegative(const char* fn, std::initializer_list<std::pair<const char*, double>> vals) {
  for (auto& [key, v] : vals)
    if (v < 0.0)
      throw std::invalid_argument(std::string(fn) + ": parameter " + key + " must be >= 0");
}

}  // namespace detail

// Assemble a model from explicit operators (rates already folded into the
// jumps).  Zero-amplitude channels are dropped unless that would empty the
// channel list.
inline LindbladModel make_model(std::string name, Operator h, std::vector<Operator> jumps,
                                std::map<std::string, double> params = {}) {
  for (const Operator& l : jumps)
    if (l.rows() != h.rows() || l.cols() != h.cols())
      throw std::invalid_argument("make_model: jump dimension mismatch");
  return detail::finish(std::move(name), std::move(h), std::move(jumps), std::move(params));
}

// Van der Pol oscillator in the rotating frame:
//   H = -delta a^dag a + i omega (a^dag - a) + i eta (a^2 e^{-i lambda} - a^dag^2 e^{i lambda}),
// one-photon gain g1g, one-photon loss g1d, two-photon loss g2d.
inline LindbladModel build_qvdp(double delta, double omega_drive, double eta, double lambda_sq,
                                double g1g, double g1d, double g2d, int n_levels) {
  detail::require_nonnegative("build_qvdp", {{"eta", eta}, {"gamma1g", g1g}, {"gamma1d", g1d}, {"gamma2d", g2d}});
  if (n_levels < 3) throw std::invalid_argument("build_qvdp: need n_levels >= 3");
  Operator a = make_annihilation(n_levels);
  Operator ad = a.adjoint();
  Complex sq = eta * std::exp(-kI * lambda_sq);
  Operator h = -delta * (ad * a) + kI * omega_drive * (ad - a) +
               kI * (sq * (a * a) - std::conj(sq) * (ad * ad));
  std::vector<Operator> jumps = {std::sqrt(g1g) * ad, std::sqrt(g1d) * a, std::sqrt(g2d) * (a * a)};
  return detail::finish("qvdp", std::move(h), std::move(jumps),
                        {{"delta", delta},
                         {"omega_drive", omega_drive},
                         {"eta", eta},
                         {"lambda", lambda_sq},
                         {"gamma1g", g1g},
                         {"gamma1d", g1d},
                         {"gamma2d", g2d}});
}

// Two-level oscillator: H = delta Sz, pumping S+ and damping S-.
inline LindbladModel build_qubit(double delta, double gp, double gm) {
  detail::require_nonnegative("build_qubit", {{"gamma_p", gp}, {"gamma_m", gm}});
  SpinOps s = make_spin(1);
  std::vector<Operator> jumps = {std::sqrt(gp) * spin_plus(s), std::sqrt(gm) * spin_minus(s)};
  return detail::finish("qubit", delta * s.sz, std::move(jumps),
                        {{"delta", delta}, {"gamma_p", gp}, {"gamma_m", gm}});
}

// Spin-1 oscillator with thermal pumping/damping through the Sz-weighted
// ladder products; at zero occupation it relaxes to the dark state Sz=0.
inline LindbladModel build_spin1(double delta, double gp, double gm, double np_occ, double nm_occ) {
  detail::require_nonnegative(
      "build_spin1", {{"gamma_p", gp}, {"gamma_m", gm}, {"n_p", np_occ}, {"n_m", nm_occ}});
  SpinOps s = make_spin(2);
  Operator sp = spin_plus(s), sm = spin_minus(s);
  std::vector<Operator> jumps = {std::sqrt(gp * (1.0 + np_occ)) * (sp * s.sz),
                                 std::sqrt(gm * (1.0 + nm_occ)) * (sm * s.sz),
                                 std::sqrt(gp * np_occ) * (s.sz * sm),
                                 std::sqrt(gm * nm_occ) * (s.sz * sp)};
  return detail::finish("spin1", delta * s.sz, std::move(jumps),
                        {{"delta", delta},
                         {"gamma_p", gp},
                         {"gamma_m", gm},
                         {"n_p", np_occ},
                         {"n_m", nm_occ}});
}

// Spin-3/2 oscillator: H = delta Sz with S+Sz pumping and S-Sz damping.
inline LindbladModel build_spin32(double delta, double gp, double gm) {
  detail::require_nonnegative("build_spin32", {{"gamma_p", gp}, {"gamma_m", gm}});
  SpinOps s = make_spin(3);
  std::vector<Operator> jumps = {std::sqrt(gp) * (spin_plus(s) * s.sz),
                                 std::sqrt(gm) * (spin_minus(s) * s.sz)};
  return detail::finish("spin32", delta * s.sz, std::move(jumps),
                        {{"delta", delta}, {"gamma_p", gp}, {"gamma_m", gm}});
}

// Qubit with bit-flip noise: H = omega sigma_z, single channel sqrt(gamma) sigma_x.
inline LindbladModel build_bitflip_qubit(double omega, double gamma) {
  detail::require_nonnegative("build_bitflip_qubit", {{"gamma", gamma}});
  Operator sz(2, 2), sx(2, 2);
  sz << 1, 0, 0, -1;
  sx << 0, 1, 1, 0;
  std::vector<Operator> jumps = {std::sqrt(gamma) * sx};
  return detail::finish("bitflip_qubit", omega * sz, std::move(jumps),
                        {{"omega", omega}, {"gamma", gamma}});
}

// Three-level Lambda atom: diagonal H, decay from the top level |2> into a
// cos/sin superposition of |0>,|1>, plus a mixing channel between |0> and |1>.
inline LindbladModel build_lambda_atom(double omega0, double omega1, double omega2, double g1,
                                       double g2, double phi, double eta_phase, double alpha) {
  detail::require_nonnegative("build_lambda_atom", {{"gamma1", g1}, {"gamma2", g2}});
  Operator h = Operator::Zero(3, 3);
  h.diagonal() << omega0, omega1, omega2;
  Operator l1 = Operator::Zero(3, 3);
  l1(0, 2) = std::cos(phi);
  l1(1, 2) = std::exp(kI * eta_phase) * std::sin(phi);
  Operator l2 = Operator::Zero(3, 3);
  l2(0, 1) = std::cos(alpha);
  l2(1, 0) = std::sin(alpha);
  std::vector<Operator> jumps = {std::sqrt(g1) * l1, std::sqrt(g2) * l2};
  return detail::finish("lambda_atom", std::move(h), std::move(jumps),
                        {{"omega0", omega0},
                         {"omega1", omega1},
                         {"omega2", omega2},
                         {"gamma1", g1},
                         {"gamma2", g2},
                         {"phi", phi},
                         {"eta", eta_phase},
                         {"alpha", alpha}});
}

// ---- dispatch by name ----

inline double param_or(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline double param_req(const std::map<std::string, double>& p, const std::string& key,
                        const char* fn) {
  auto it = p.find(key);
  if (it == p.end())
    throw std::invalid_argument(std::string(fn) + ": missing parameter '" + key + "'");
  return it->second;
}

inline LindbladModel build_model(const std::string& name, const std::map<std::string, double>& p,
                                 int n_levels = 0) {
  if (name == "qvdp") {
    int n = n_levels > 0 ? n_levels : 6;
    return build_qvdp(param_or(p, "delta", 1.0), param_or(p, "omega_drive", 0.0),
                      param_or(p, "eta", 0.0), param_or(p, "lambda", 0.0),
                      param_req(p, "gamma1g", "build_model"), param_or(p, "gamma1d", 0.0),
                      param_req(p, "gamma2d", "build_model"), n);
  }
  if (name == "qubit")
    return build_qubit(param_req(p, "delta", "build_model"), param_req(p, "gamma_p", "build_model"),
                       param_req(p, "gamma_m", "build_model"));
  if (name == "spin1")
    return build_spin1(param_req(p, "delta", "build_model"), param_req(p, "gamma_p", "build_model"),
                       param_req(p, "gamma_m", "build_model"), param_or(p, "n_p", 0.0),
                       param_or(p, "n_m", 0.0));
  if (name == "spin32")
    return build_spin32(param_req(p, "delta", "build_model"),
                        param_req(p, "gamma_p", "build_model"),
                        param_req(p, "gamma_m", "build_model"));
  if (name == "bitflip_qubit")
    return build_bitflip_qubit(param_req(p, "omega", "build_model"),
                               param_req(p, "gamma", "build_model"));
  if (name == "lambda_atom")
    return build_lambda_atom(param_req(p, "omega0", "build_model"),
                             param_req(p, "omega1", "build_model"),
                             param_req(p, "omega2", "build_model"),
                             param_req(p, "gamma1", "build_model"),
                             param_req(p, "gamma2", "build_model"), param_or(p, "phi", 0.0),
                             param_or(p, "eta", 0.0), param_or(p, "alpha", 0.0));
  throw std::invalid_argument("build_model: unknown model '" + name + "'");
}

// Named parameter presets used across tests and the bundled run configs.
struct ModelPreset {
  std::string preset;
  std::string model;
  std::map<std::string, double> params;
  int n_levels = 0;  // 0 = model-determined
};

inline const std::vector<ModelPreset>& model_presets() {
  static const std::vector<ModelPreset> presets = [] {
    const double pi = std::numbers::pi;
    std::vector<ModelPreset> v;
    v.push_back({"vdp_quantum", "qvdp",
                 {{"delta", 1.0}, {"gamma1g", 0.1}, {"gamma2d", 1.0}}, 4});
    v.push_back({"vdp_squeezed", "qvdp",
                 {{"delta", 1.0}, {"eta", 0.2}, {"lambda", pi}, {"gamma1g", 0.1}, {"gamma2d", 1.0}}, 6});
    v.push_back({"vdp_moderate", "qvdp",
                 {{"delta", 1.0}, {"gamma1g", 0.5}, {"gamma2d", 1.0}}, 6});
    v.push_back({"vdp_classical", "qvdp",
                 {{"delta", 5.0}, {"gamma1g", 20.0}, {"gamma2d", 1.0}}, 40});
    v.push_back({"qubit_osc", "qubit",
                 {{"delta", 3.0}, {"gamma_p", 0.1}, {"gamma_m", 0.05}}, 0});
    v.push_back({"spin1_thermal", "spin1",
                 {{"delta", 2.0}, {"gamma_p", 0.01}, {"gamma_m", 0.005}, {"n_p", 0.2}, {"n_m", 0.3}},
                 0});
    v.push_back({"spin1_zero_temp", "spin1",
                 {{"delta", 2.0}, {"gamma_p", 0.01}, {"gamma_m", 0.005}}, 0});
    v.push_back({"spin32_osc", "spin32",
                 {{"delta", 2.0 * pi}, {"gamma_p", 1.0}, {"gamma_m", 0.1}}, 0});
    v.push_back({"bitflip", "bitflip_qubit", {{"omega", 1.0}, {"gamma", 0.1}}, 0});
    // Oscillating Lambda-atom set found by a numeric scan with the cycle finder.
    v.push_back({"lambda_osc", "lambda_atom",
                 {{"omega0", 0.0},
                  {"omega1", 2.0},
                  {"omega2", 5.0},
                  {"gamma1", 4.0},
                  {"gamma2", 0.5},
                  {"phi", pi / 4},
                  {"eta", 0.0},
                  {"alpha", pi / 3}},
                 0});
    return v;
  }();
  return presets;
}

inline LindbladModel build_preset(const std::string& preset) {
  for (const ModelPreset& p : model_presets())
    if (p.preset == preset) return build_model(p.model, p.params, p.n_levels);
  throw std::invalid_argument("build_preset: unknown preset '" + preset + "'");
}

}  // namespace qphase
