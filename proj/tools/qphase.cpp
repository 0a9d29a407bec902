// qphase.cpp — command-line front end chaining model construction, cycle finding,
// response tables, phase reduction, trajectory sampling, reconstruction, and
// phase-space output into reproducible file artifacts.
#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <qphase/analysis.hpp>
#include <qphase/dynamics.hpp>
#include <qphase/errors.hpp>
#include <qphase/io.hpp>
#include <qphase/limit_cycle.hpp>
#include <qphase/models.hpp>
#include <qphase/operator_algebra.hpp>
#include <qphase/phase_equation.hpp>
#include <qphase/prc.hpp>

namespace {

namespace fs = std::filesystem;
using qphase::fmt17;
using qphase::Json;

// ---- shared helpers ----

// Accept either a catalog preset name or a model config file path.
qphase::LindbladModel resolve_model(const std::string& arg) {
  if (fs::exists(arg)) return qphase::model_from_json(qphase::load_json(arg));
  try {
    return qphase::build_preset(arg);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("model: '" + arg +
                                "' is neither a preset name nor an existing config file");
  }
}

// Deterministic generic start ket with support on every level and no special
// symmetry, so the relaxation phase of the cycle search has something to damp.
qphase::Ket default_start(int dim) {
  qphase::Ket psi(dim);
  for (int k = 0; k < dim; ++k)
    psi[k] = std::polar(std::pow(0.7, double(k)), 0.7 * double(k));
  return qphase::normalize(psi);
}

qphase::SseScheme parse_scheme(const std::string& s, const std::string& who) {
  if (s == "ito") return qphase::SseScheme::ito_euler;
  if (s == "stratonovich") return qphase::SseScheme::stratonovich_heun;
  throw std::invalid_argument(who + ": scheme must be 'ito' or 'stratonovich'");
}

qphase::Operator load_operator_file(const std::string& path) {
  return qphase::operator_from_json(qphase::load_json(path));
}

qphase::LimitCycle load_cycle_file(const std::string& path) {
  return qphase::limit_cycle_from_json(qphase::load_json(path));
}

// ---- model ----

int cmd_model_list() {
  std::cout << "preset            builder        levels  params\n";
  for (const qphase::ModelPreset& p : qphase::model_presets()) {
    std::string params;
    for (const auto& [k, v] : p.params) {
      if (!params.empty()) params += ' ';
      params += k + '=' + fmt17(v);
    }
    std::string line = p.preset;
    line.resize(std::max<std::size_t>(line.size() + 2, 18), ' ');
    std::string b = p.model;
    b.resize(std::max<std::size_t>(b.size() + 2, 15), ' ');
    std::cout << line << b << p.n_levels << "       " << params << "\n";
  }
  return 0;
}

int cmd_model_show(const std::string& name) {
  const qphase::LindbladModel m = resolve_model(name);
  Json j = qphase::model_to_json(m);
  j["hamiltonian"] = qphase::operator_to_json(m.hamiltonian);
  Json jumps = Json::array();
  for (const qphase::Operator& l : m.jumps) jumps.push_back(qphase::operator_to_json(l));
  j["jumps"] = std::move(jumps);
  std::cout << j.dump(2) << "\n";
  return 0;
}

// ---- limit-cycle ----

struct CycleArgs {
  std::string model, out;
  int n_grid = 128;
  double t_relax = -1.0;
};

int cmd_limit_cycle(const CycleArgs& a) {
  const qphase::LindbladModel m = resolve_model(a.model);
  const qphase::LimitCycle lc =
      qphase::find_limit_cycle(m, default_start(m.dim), a.t_relax, a.n_grid);
  qphase::save_json(a.out, qphase::limit_cycle_to_json(lc));
  std::cout << "period " << fmt17(lc.T) << "\nfrequency " << fmt17(lc.omega) << "\n";
  return 0;
}

// ---- prc ----

struct PrcArgs {
  std::string lc, out, hp;
  int n_theta = 0;  // 0 = match the cycle grid
  double eps = 1e-4;
  bool no_richardson = false;
  int settle = -1;
  bool allow_large = false;
  bool direct = false;
};

int cmd_prc(const PrcArgs& a) {
  const qphase::LimitCycle lc = load_cycle_file(a.lc);
  qphase::PRCOptions opts;
  opts.eps = a.eps;
  opts.richardson = !a.no_richardson;
  opts.n_periods = a.settle;
  opts.allow_large = a.allow_large;
  const int nt = a.n_theta > 0 ? a.n_theta : lc.n_grid();

  qphase::PRCTable t;
  if (a.direct) {
    if (a.hp.empty()) throw std::invalid_argument("prc: --direct needs --hp");
    const qphase::Operator hp = load_operator_file(a.hp);
    t.theta_grid.resize(nt);
    t.z.resize(nt, 1);
    t.epsilon_used = opts.eps;
    for (int i = 0; i < nt; ++i) {
      t.theta_grid[i] = 2.0 * std::numbers::pi * double(i) / double(nt);
      t.z(i, 0) = qphase::prc_direct(lc, hp, t.theta_grid[i], opts);
    }
  } else {
    if (!a.hp.empty())
      throw std::invalid_argument("prc: --hp is only meaningful together with --direct");
    const int dim = int(lc.samples.front().size());
    t = qphase::prc_table(lc, qphase::make_generator_basis(dim), nt, opts);
  }
  qphase::save_prc_csv(a.out, t);
  std::cout << "rows " << t.n_theta() << " columns " << t.z.cols() << "\n";
  return 0;
}

// ---- build-sde ----

struct SdeArgs {
  std::string lc, prc, out, perturb;
  double eps = 0.05;
};

int cmd_build_sde(const SdeArgs& a) {
  const qphase::LimitCycle lc = load_cycle_file(a.lc);
  const qphase::PRCTable prc = qphase::load_prc_csv(a.prc);
  const int dim = int(lc.samples.front().size());
  const qphase::GeneratorBasis basis = qphase::make_generator_basis(dim);
  qphase::PhaseSDE sde = qphase::build_phase_sde(lc, prc, lc.model, basis);
  if (!a.perturb.empty())
    sde = qphase::add_perturbation(sde, load_operator_file(a.perturb), a.eps, prc, basis);
  qphase::save_json(a.out, qphase::phase_sde_to_json(sde));
  std::cout << "frequency " << fmt17(sde.omega) << "\nchannels " << sde.y.cols() << "\n";
  return 0;
}

// ---- simulate-sse ----

struct SseArgs {
  std::string model, out;
  double dt = 0.0, t_end = 0.0;
  std::uint64_t seed = 0, traj_index = 0;
  std::string scheme = "ito";
  int stride = 1;
  bool amplitudes = false;
};

int cmd_simulate_sse(const SseArgs& a) {
  if (a.stride < 1) throw std::invalid_argument("simulate-sse: --stride must be >= 1");
  const qphase::LindbladModel m = resolve_model(a.model);
  qphase::TrajectoryConfig cfg;
  cfg.dt = a.dt;
  cfg.t_end = a.t_end;
  cfg.seed = a.seed;
  cfg.trajectory_index = a.traj_index;
  cfg.scheme = parse_scheme(a.scheme, "simulate-sse");
  cfg.record_stride = 1;
  const qphase::TrajectoryResult res = simulate_trajectory(default_start(m.dim), m, cfg);

  std::string out = "t,channel";
  if (a.amplitudes)
    for (int i = 0; i < m.dim; ++i)
      out += ",re_" + std::to_string(i) + ",im_" + std::to_string(i);
  out += ",J\n";
  const long n_steps = long(res.currents.rows());
  long rows = 0;
  for (long i = 0; i < n_steps; i += a.stride) {
    std::string amp;
    if (a.amplitudes) {
      const qphase::Ket& psi = res.states[std::size_t(i)];
      for (int c = 0; c < m.dim; ++c)
        amp += "," + fmt17(psi[c].real()) + "," + fmt17(psi[c].imag());
    }
    for (int k = 0; k < int(res.currents.cols()); ++k) {
      out += fmt17(res.times[std::size_t(i)]) + "," + std::to_string(k) + amp + "," +
             fmt17(res.currents(i, k)) + "\n";
      ++rows;
    }
  }
  qphase::save_text(a.out, out);
  std::cout << "rows " << rows << "\n";
  return 0;
}

// ---- simulate-phase ----

struct PhaseArgs {
  std::string sde, out;
  int n_traj = 0;
  double t_end = 0.0, dt = 0.0;
  std::uint64_t seed = 0;
  int n_bins = 64;
  std::string scheme = "ito";
};

int cmd_simulate_phase(const PhaseArgs& a) {
  const qphase::PhaseSDE sde = qphase::phase_sde_from_json(qphase::load_json(a.sde));
  double dt = a.dt;
  if (dt <= 0.0) {
    if (sde.omega == 0.0)
      throw std::invalid_argument(
          "simulate-phase: --dt is required when the reduced frequency vanishes");
    dt = 2.0 * std::numbers::pi / std::abs(sde.omega) / 1000.0;
  }
  const qphase::Histogram h = qphase::stationary_distribution(
      sde, a.n_traj, a.t_end, dt, a.seed, a.n_bins, parse_scheme(a.scheme, "simulate-phase"));
  qphase::save_histogram_csv(a.out, h);
  std::cout << "samples " << h.total_samples << "\nmax_density " << fmt17(h.density.maxCoeff())
            << "\n";
  return 0;
}

// ---- reconstruct ----

struct ReconstructArgs {
  std::string hist, lc, out;
};

int cmd_reconstruct(const ReconstructArgs& a) {
  const qphase::Histogram h = qphase::load_histogram_csv(a.hist);
  const qphase::LimitCycle lc = load_cycle_file(a.lc);
  const qphase::Operator rho = qphase::reconstruct_density(h, lc);
  qphase::save_json(a.out, qphase::operator_to_json(rho));
  std::cout << "dim " << rho.rows() << "\n";
  return 0;
}

// ---- wigner ----

struct WignerArgs {
  std::string rho, out;
  double x_half = 0.0, p_half = 0.0;
  int nx = 201, np = 201;
};

int cmd_wigner(const WignerArgs& a) {
  const qphase::Operator rho = load_operator_file(a.rho);
  qphase::PhaseSpaceSpec spec;
  spec.x_half = a.x_half;
  spec.p_half = a.p_half;
  spec.nx = a.nx;
  spec.np = a.np;
  const qphase::PhaseSpaceGrid grid = qphase::wigner(rho, spec);
  qphase::save_grid_csv(a.out, grid.x, grid.p, grid.values);
  std::cout << "integral " << fmt17(grid.integral()) << "\n";
  return 0;
}

// ---- fidelity ----

struct FidelityArgs {
  std::string a, b;
};

int cmd_fidelity(const FidelityArgs& args) {
  const qphase::Operator r1 = load_operator_file(args.a);
  const qphase::Operator r2 = load_operator_file(args.b);
  std::cout << fmt17(qphase::fidelity(r1, r2)) << "\n";
  return 0;
}

// ---- run (pipeline) ----

struct RunArgs {
  std::string config;
  bool resume = false;
  int workers = 0;
};

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("run config: unknown key '" + it.key() + "' in " + where);
  }
}

double get_num(const Json& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number())
    throw std::invalid_argument(std::string("run config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

int get_int(const Json& j, const char* key, int dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number_integer())
    throw std::invalid_argument(std::string("run config: '") + key + "' must be an integer");
  return j.at(key).get<int>();
}

bool get_bool(const Json& j, const char* key, bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_boolean())
    throw std::invalid_argument(std::string("run config: '") + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

int cmd_run(const RunArgs& a) {
  if (a.workers > 0) {
    const std::string w = std::to_string(a.workers);
    ::setenv("QPHASE_THREADS", w.c_str(), 1);
  }
  const Json cfg = qphase::load_json(a.config);
  if (!cfg.is_object())
    throw std::invalid_argument("run config: top level must be an object");
  check_keys(cfg,
             {"model", "out_dir", "seed", "stages", "limit_cycle", "prc", "perturbation",
              "phase", "sse"},
             "the top level");
  if (!cfg.contains("model")) throw std::invalid_argument("run config: missing 'model'");
  if (!cfg.contains("out_dir")) throw std::invalid_argument("run config: missing 'out_dir'");

  const qphase::LindbladModel model = cfg.at("model").is_string()
                                          ? resolve_model(cfg.at("model").get<std::string>())
                                          : qphase::model_from_json(cfg.at("model"));

  // stage toggles
  bool on_lc = true, on_prc = true, on_sde = true, on_phase = true, on_sse = true,
       on_reconstruct = true, on_analyze = true;
  if (cfg.contains("stages")) {
    const Json& s = cfg.at("stages");
    check_keys(s,
               {"limit_cycle", "prc", "sde", "phase_histogram", "sse_histogram",
                "reconstruct", "analyze"},
               "'stages'");
    on_lc = get_bool(s, "limit_cycle", true);
    on_prc = get_bool(s, "prc", true);
    on_sde = get_bool(s, "sde", true);
    on_phase = get_bool(s, "phase_histogram", true);
    on_sse = get_bool(s, "sse_histogram", true);
    on_reconstruct = get_bool(s, "reconstruct", true);
    on_analyze = get_bool(s, "analyze", true);
  }
  if ((on_phase || on_sse) && !cfg.contains("seed"))
    throw std::invalid_argument("run config: 'seed' is required when sampling stages are enabled");
  const std::uint64_t seed =
      cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : 0;

  // per-stage parameter sections
  const Json jlc = cfg.contains("limit_cycle") ? cfg.at("limit_cycle") : Json::object();
  check_keys(jlc, {"n_grid", "t_relax"}, "'limit_cycle'");
  const Json jprc = cfg.contains("prc") ? cfg.at("prc") : Json::object();
  check_keys(jprc, {"eps", "richardson", "settle", "n_theta", "allow_large"}, "'prc'");
  const Json jpert = cfg.contains("perturbation") ? cfg.at("perturbation") : Json::object();
  check_keys(jpert, {"hp", "eps"}, "'perturbation'");
  const Json jphase = cfg.contains("phase") ? cfg.at("phase") : Json::object();
  check_keys(jphase, {"dt", "t_end", "n_traj", "n_bins", "scheme"}, "'phase'");
  const Json jsse = cfg.contains("sse") ? cfg.at("sse") : Json::object();
  check_keys(jsse, {"dt", "t_end", "n_traj", "n_bins", "sample_stride", "discard", "scheme"},
             "'sse'");

  std::optional<qphase::Operator> hp;
  const double hp_eps = get_num(jpert, "eps", 0.05);
  if (jpert.contains("hp")) {
    const Json& h = jpert.at("hp");
    if (h.is_string()) {
      const std::string path = h.get<std::string>();
      if (!fs::exists(path))
        throw std::invalid_argument("run config: perturbation file '" + path +
                                    "' does not exist");
      hp = load_operator_file(path);
    } else {
      hp = qphase::operator_from_json(h);
    }
    if (hp->rows() != model.dim)
      throw std::invalid_argument("run config: perturbation dimension does not match the model");
  }

  const fs::path dir = cfg.at("out_dir").get<std::string>();
  fs::create_directories(dir);
  const fs::path lc_path = dir / "lc.json", prc_path = dir / "prc.csv",
                 sde_path = dir / "sde.json", hist_path = dir / "hist.csv",
                 sse_hist_path = dir / "sse_hist.csv", rho_path = dir / "rho.json";

  Json report = Json::object();
  report["model"] = model.name;
  report["seed"] = seed;
  report["failed_stage"] = nullptr;
  Json done = Json::array();

  std::optional<qphase::LimitCycle> lc;
  std::optional<qphase::PRCTable> prc;
  std::optional<qphase::PhaseSDE> sde;
  std::optional<qphase::Histogram> hist, sse_hist;
  std::optional<qphase::Operator> rho;
  std::optional<qphase::GeneratorBasis> basis;

  std::string current = "setup";
  auto need_lc = [&]() -> const qphase::LimitCycle& {
    if (!lc)
      throw std::invalid_argument("run: stage '" + current +
                                  "' needs lc.json; enable the limit_cycle stage or place the "
                                  "artifact in out_dir");
    return *lc;
  };
  auto need_prc = [&]() -> const qphase::PRCTable& {
    if (!prc)
      throw std::invalid_argument("run: stage '" + current +
                                  "' needs prc.csv; enable the prc stage or place the artifact "
                                  "in out_dir");
    return *prc;
  };
  auto need_sde = [&]() -> const qphase::PhaseSDE& {
    if (!sde)
      throw std::invalid_argument("run: stage '" + current +
                                  "' needs sde.json; enable the sde stage or place the artifact "
                                  "in out_dir");
    return *sde;
  };
  auto need_hist = [&]() -> const qphase::Histogram& {
    if (!hist)
      throw std::invalid_argument("run: stage '" + current +
                                  "' needs hist.csv; enable the phase_histogram stage or place "
                                  "the artifact in out_dir");
    return *hist;
  };
  auto ensure_basis = [&](int dim) -> const qphase::GeneratorBasis& {
    if (!basis || basis->dim != dim) basis = qphase::make_generator_basis(dim);
    return *basis;
  };

  try {
    current = "limit_cycle";
    if (on_lc) {
      if (a.resume && fs::exists(lc_path)) {
        lc = load_cycle_file(lc_path.string());
      } else {
        lc = qphase::find_limit_cycle(model, default_start(model.dim),
                                      get_num(jlc, "t_relax", -1.0),
                                      get_int(jlc, "n_grid", 128));
        qphase::save_json(lc_path, qphase::limit_cycle_to_json(*lc));
      }
      done.push_back("limit_cycle");
    } else if (fs::exists(lc_path)) {
      lc = load_cycle_file(lc_path.string());
    }

    current = "prc";
    if (on_prc) {
      if (a.resume && fs::exists(prc_path)) {
        prc = qphase::load_prc_csv(prc_path);
      } else {
        const qphase::LimitCycle& c = need_lc();
        qphase::PRCOptions opts;
        opts.eps = get_num(jprc, "eps", 1e-4);
        opts.richardson = get_bool(jprc, "richardson", true);
        opts.n_periods = get_int(jprc, "settle", -1);
        opts.allow_large = get_bool(jprc, "allow_large", false);
        const int dim = int(c.samples.front().size());
        const int nt_cfg = get_int(jprc, "n_theta", 0);
        const int nt = nt_cfg > 0 ? nt_cfg : c.n_grid();
        prc = qphase::prc_table(c, ensure_basis(dim), nt, opts);
        qphase::save_prc_csv(prc_path, *prc);
      }
      done.push_back("prc");
    } else if (fs::exists(prc_path)) {
      prc = qphase::load_prc_csv(prc_path);
    }

    current = "sde";
    if (on_sde) {
      if (a.resume && fs::exists(sde_path)) {
        sde = qphase::phase_sde_from_json(qphase::load_json(sde_path));
      } else {
        const qphase::LimitCycle& c = need_lc();
        const qphase::PRCTable& t = need_prc();
        const int dim = int(c.samples.front().size());
        sde = qphase::build_phase_sde(c, t, c.model, ensure_basis(dim));
        if (hp) sde = qphase::add_perturbation(*sde, *hp, hp_eps, t, ensure_basis(dim));
        qphase::save_json(sde_path, qphase::phase_sde_to_json(*sde));
      }
      done.push_back("sde");
    } else if (fs::exists(sde_path)) {
      sde = qphase::phase_sde_from_json(qphase::load_json(sde_path));
    }

    current = "phase_histogram";
    if (on_phase) {
      if (a.resume && fs::exists(hist_path)) {
        hist = qphase::load_histogram_csv(hist_path);
      } else {
        const qphase::PhaseSDE& s = need_sde();
        double dt = get_num(jphase, "dt", 0.0);
        double t_end = get_num(jphase, "t_end", 0.0);
        if (dt <= 0.0 || t_end <= 0.0) {
          if (s.omega == 0.0)
            throw std::invalid_argument(
                "run config: phase stage needs explicit dt and t_end when the reduced "
                "frequency vanishes");
          const double period = 2.0 * std::numbers::pi / std::abs(s.omega);
          if (dt <= 0.0) dt = period / 1000.0;
          if (t_end <= 0.0) t_end = 300.0 * period;
        }
        hist = qphase::stationary_distribution(
            s, get_int(jphase, "n_traj", 8), t_end, dt, seed, get_int(jphase, "n_bins", 64),
            parse_scheme(jphase.contains("scheme") ? jphase.at("scheme").get<std::string>()
                                                   : "ito",
                         "run config"));
        qphase::save_histogram_csv(hist_path, *hist);
      }
      done.push_back("phase_histogram");
    } else if (fs::exists(hist_path)) {
      hist = qphase::load_histogram_csv(hist_path);
    }

    current = "sse_histogram";
    if (on_sse) {
      if (a.resume && fs::exists(sse_hist_path)) {
        sse_hist = qphase::load_histogram_csv(sse_hist_path);
      } else {
        const qphase::LimitCycle& c = need_lc();
        qphase::SsePhaseOptions o;
        o.n_traj = get_int(jsse, "n_traj", 64);
        o.n_bins = get_int(jsse, "n_bins", 64);
        o.sample_stride = get_int(jsse, "sample_stride", 8);
        o.discard_fraction = get_num(jsse, "discard", 0.2);
        o.dt = get_num(jsse, "dt", 0.0);
        if (o.dt <= 0.0) o.dt = 1e-3 / c.model.rate_scale;
        o.t_end = get_num(jsse, "t_end", 0.0);
        if (o.t_end <= 0.0) o.t_end = 30.0 * c.T;
        o.seed = seed + 1;  // decorrelate from the phase-equation sampler
        o.scheme = parse_scheme(
            jsse.contains("scheme") ? jsse.at("scheme").get<std::string>() : "ito",
            "run config");
        sse_hist = qphase::sse_phase_histogram(c, o);
        qphase::save_histogram_csv(sse_hist_path, *sse_hist);
      }
      done.push_back("sse_histogram");
    } else if (fs::exists(sse_hist_path)) {
      sse_hist = qphase::load_histogram_csv(sse_hist_path);
    }

    current = "reconstruct";
    if (on_reconstruct) {
      if (a.resume && fs::exists(rho_path)) {
        rho = load_operator_file(rho_path.string());
      } else {
        rho = qphase::reconstruct_density(need_hist(), need_lc());
        qphase::save_json(rho_path, qphase::operator_to_json(*rho));
      }
      done.push_back("reconstruct");
    } else if (fs::exists(rho_path)) {
      rho = load_operator_file(rho_path.string());
    }

    current = "analyze";
    if (on_analyze) {
      if (lc) {
        report["T"] = lc->T;
        report["omega"] = lc->omega;
      }
      if (sde) report["omega_reduced"] = sde->omega;
      if (hist)
        report["max_density_ratio"] = hist->density.maxCoeff() * 2.0 * std::numbers::pi;
      if (hist && sse_hist) report["tv_phase_sse"] = qphase::compare_distributions(*hist, *sse_hist);
      if (rho) {
        const qphase::LindbladModel& m2 = lc ? lc->model : model;
        if (m2.dim <= 10) {
          const qphase::Operator ss = qphase::steady_state(m2);
          report["fidelity_reconstruction"] = qphase::fidelity(*rho, ss);
          report["trace_distance_reconstruction"] = qphase::trace_distance(*rho, ss);
        }
      }
      done.push_back("analyze");
    }
  } catch (const std::exception& e) {
    report["failed_stage"] = current;
    report["error"] = std::string(e.what());
    report["stages"] = std::move(done);
    qphase::save_json(dir / "report.json", report);
    std::cerr << "run: stage '" << current << "' failed: " << e.what() << "\n";
    return dynamic_cast<const std::invalid_argument*>(&e) != nullptr ? 2 : 1;
  }

  report["stages"] = std::move(done);
  qphase::save_json(dir / "report.json", report);
  std::cout << "run: " << report["stages"].size() << " stages completed into " << dir.string()
            << "\n";
  if (lc)
    std::cout << "period " << fmt17(lc->T) << "\nfrequency " << fmt17(lc->omega) << "\n";
  return 0;
}

}  // namespace

// ---- entry point ----

int main(int argc, char** argv) {
  CLI::App app{"phase reduction pipeline for monitored quantum limit-cycle oscillators"};
  app.require_subcommand(1);

  CLI::App* model_cmd = app.add_subcommand("model", "inspect the built-in model catalog");
  model_cmd->require_subcommand(1);
  CLI::App* model_list = model_cmd->add_subcommand("list", "print the preset catalog");
  CLI::App* model_show =
      model_cmd->add_subcommand("show", "dump a model's operators as json");
  std::string show_name;
  model_show->add_option("name", show_name, "preset name or model config file")->required();

  CycleArgs cyc;
  CLI::App* cyc_cmd =
      app.add_subcommand("limit-cycle", "find the deterministic cycle of a model");
  cyc_cmd->add_option("--model", cyc.model, "preset name or model config file")->required();
  cyc_cmd->add_option("--out", cyc.out, "output cycle json path")->required();
  cyc_cmd->add_option("--n-grid", cyc.n_grid, "phase samples stored on the cycle");
  cyc_cmd->add_option("--t-relax", cyc.t_relax, "relaxation time before the period search (<0: auto)");

  PrcArgs prc;
  CLI::App* prc_cmd = app.add_subcommand("prc", "tabulate phase response curves");
  prc_cmd->add_option("--lc", prc.lc, "cycle json from limit-cycle")->required();
  prc_cmd->add_option("--out", prc.out, "output csv path")->required();
  prc_cmd->add_option("--n-theta", prc.n_theta, "phase nodes (0: match the cycle grid)");
  prc_cmd->add_option("--eps", prc.eps, "kick angle for the finite difference");
  prc_cmd->add_flag("--no-richardson", prc.no_richardson, "single-step finite difference");
  prc_cmd->add_option("--settle", prc.settle, "settling periods (<0: auto)");
  prc_cmd->add_flag("--allow-large", prc.allow_large,
                    "permit full generator tables above dimension 12");
  prc_cmd->add_option("--hp", prc.hp, "perturbation operator json (with --direct)");
  prc_cmd->add_flag("--direct", prc.direct,
                    "single-column response for the --hp operator instead of the basis table");

  SdeArgs sdea;
  CLI::App* sde_cmd = app.add_subcommand("build-sde", "assemble the reduced phase equation");
  sde_cmd->add_option("--lc", sdea.lc, "cycle json")->required();
  sde_cmd->add_option("--prc", sdea.prc, "response table csv")->required();
  sde_cmd->add_option("--out", sdea.out, "output phase equation json")->required();
  sde_cmd->add_option("--perturb", sdea.perturb, "perturbation operator json");
  sde_cmd->add_option("--eps", sdea.eps, "perturbation strength");

  SseArgs sse;
  CLI::App* sse_cmd =
      app.add_subcommand("simulate-sse", "run one monitored trajectory and dump the record");
  sse_cmd->add_option("--model", sse.model, "preset name or model config file")->required();
  sse_cmd->add_option("--dt", sse.dt, "integration step")->required();
  sse_cmd->add_option("--t-end", sse.t_end, "integration horizon")->required();
  sse_cmd->add_option("--seed", sse.seed, "noise seed")->required();
  sse_cmd->add_option("--out", sse.out, "output csv path")->required();
  sse_cmd->add_option("--traj-index", sse.traj_index, "counter index of the noise stream");
  sse_cmd->add_option("--scheme", sse.scheme, "ito or stratonovich");
  sse_cmd->add_option("--stride", sse.stride, "write every n-th step");
  sse_cmd->add_flag("--amplitudes", sse.amplitudes, "include state amplitudes per row");

  PhaseArgs pha;
  CLI::App* pha_cmd =
      app.add_subcommand("simulate-phase", "sample the reduced phase equation's stationary law");
  pha_cmd->add_option("--sde", pha.sde, "phase equation json")->required();
  pha_cmd->add_option("--n-traj", pha.n_traj, "trajectory count")->required();
  pha_cmd->add_option("--t-end", pha.t_end, "horizon per trajectory")->required();
  pha_cmd->add_option("--seed", pha.seed, "noise seed")->required();
  pha_cmd->add_option("--out", pha.out, "output histogram csv")->required();
  pha_cmd->add_option("--dt", pha.dt, "integration step (0: period/1000)");
  pha_cmd->add_option("--n-bins", pha.n_bins, "histogram bins");
  pha_cmd->add_option("--scheme", pha.scheme, "ito or stratonovich");

  ReconstructArgs rec;
  CLI::App* rec_cmd =
      app.add_subcommand("reconstruct", "assemble the density from a phase histogram");
  rec_cmd->add_option("--hist", rec.hist, "histogram csv")->required();
  rec_cmd->add_option("--lc", rec.lc, "cycle json")->required();
  rec_cmd->add_option("--out", rec.out, "output density json")->required();

  WignerArgs wig;
  CLI::App* wig_cmd = app.add_subcommand("wigner", "render a density as a phase-space grid");
  wig_cmd->add_option("--rho", wig.rho, "density json")->required();
  wig_cmd->add_option("--out", wig.out, "output grid csv")->required();
  wig_cmd->add_option("--x-half", wig.x_half, "half-width in x (0: auto)");
  wig_cmd->add_option("--p-half", wig.p_half, "half-width in p (0: auto)");
  wig_cmd->add_option("--nx", wig.nx, "grid points in x");
  wig_cmd->add_option("--np", wig.np, "grid points in p");

  FidelityArgs fid;
  CLI::App* fid_cmd = app.add_subcommand("fidelity", "overlap of two densities");
  fid_cmd->add_option("--a", fid.a, "first density json")->required();
  fid_cmd->add_option("--b", fid.b, "second density json")->required();

  RunArgs run;
  CLI::App* run_cmd = app.add_subcommand("run", "execute the configured pipeline stages");
  run_cmd->add_option("--config", run.config, "run config json")->required();
  run_cmd->add_flag("--resume", run.resume, "reuse existing artifacts in out_dir");
  run_cmd->add_option("--workers", run.workers, "worker threads (0: QPHASE_THREADS or cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (model_list->parsed()) return cmd_model_list();
    if (model_show->parsed()) return cmd_model_show(show_name);
    if (cyc_cmd->parsed()) return cmd_limit_cycle(cyc);
    if (prc_cmd->parsed()) return cmd_prc(prc);
    if (sde_cmd->parsed()) return cmd_build_sde(sdea);
    if (sse_cmd->parsed()) return cmd_simulate_sse(sse);
    if (pha_cmd->parsed()) return cmd_simulate_phase(pha);
    if (rec_cmd->parsed()) return cmd_reconstruct(rec);
    if (wig_cmd->parsed()) return cmd_wigner(wig);
    if (fid_cmd->parsed()) return cmd_fidelity(fid);
    if (run_cmd->parsed()) return cmd_run(run);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand dispatched\n";
  return 2;
}
