// io.hpp — JSON and CSV serialization for operators, models, and the
// pipeline artifacts.  All floating-point text output uses %.17g so that a
// write/read round trip reproduces doubles bit-identically.
#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qphase/limit_cycle.hpp"
#include "qphase/models.hpp"
#include "qphase/operator_algebra.hpp"
#include "qphase/phase_equation.hpp"
#include "qphase/prc.hpp"

namespace qphase {

using Json = nlohmann::json;

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- file helpers ----

inline void save_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_text: cannot open " + path.string());
  out << text;
  if (!out) throw std::runtime_error("save_text: write failed for " + path.string());
}

inline std::string load_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_text: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_json(const std::filesystem::path& path, const Json& j) {
  save_text(path, j.dump(2) + "\n");
}

// Parse JSON, rewriting failures as origin:line:column diagnostics.
inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t stop =
        std::min(text.size(), e.byte > 0 ? std::size_t(e.byte) - 1 : std::size_t(0));
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw std::invalid_argument(origin + ":" + std::to_string(line) + ":" +
                                std::to_string(col) + ": " + e.what());
  }
}

inline Json load_json(const std::filesystem::path& path) {
  return parse_json_text(load_text(path), path.string());
}

// ---- operators ----

inline Json operator_to_json(const Operator& o) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < o.rows(); ++i) {
    Json rrow = Json::array(), irow = Json::array();
    for (Eigen::Index j = 0; j < o.cols(); ++j) {
      rrow.push_back(o(i, j).real());
      irow.push_back(o(i, j).imag());
    }
    re.push_back(std::move(rrow));
    im.push_back(std::move(irow));
  }
  return Json{{"n", o.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline Operator operator_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("re") || !j.contains("im"))
    throw std::invalid_argument("operator_from_json: need fields n, re, im");
  int n = j.at("n").get<int>();
  if (n < 1) throw std::invalid_argument("operator_from_json: bad dimension");
  const Json& re = j.at("re");
  const Json& im = j.at("im");
  if (int(re.size()) != n || int(im.size()) != n)
    throw std::invalid_argument("operator_from_json: row count mismatch");
  Operator o(n, n);
  for (int i = 0; i < n; ++i) {
    if (int(re[i].size()) != n || int(im[i].size()) != n)
      throw std::invalid_argument("operator_from_json: column count mismatch");
    for (int k = 0; k < n; ++k)
      o(i, k) = Complex(re[i][k].get<double>(), im[i][k].get<double>());
  }
  return o;
}

inline Json ket_to_json(const Ket& psi) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    re.push_back(psi[i].real());
    im.push_back(psi[i].imag());
  }
  return Json{{"re", std::move(re)}, {"im", std::move(im)}};
}

inline Ket ket_from_json(const Json& j) {
  const Json& re = j.at("re");
  const Json& im = j.at("im");
  if (re.size() != im.size() || re.empty())
    throw std::invalid_argument("ket_from_json: bad component arrays");
  Ket psi(re.size());
  for (std::size_t i = 0; i < re.size(); ++i)
    psi[Eigen::Index(i)] = Complex(re[i].get<double>(), im[i].get<double>());
  return psi;
}

// ---- model configs: {"model": name, "params": {...}, "n_levels": int} ----

inline Json model_to_json(const LindbladModel& m) {
  Json params = Json::object();
  for (const auto& [k, v] : m.params) params[k] = v;
  return Json{{"model", m.name}, {"params", std::move(params)}, {"n_levels", m.dim}};
}

inline LindbladModel model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("model"))
    throw std::invalid_argument("model_from_json: need field 'model'");
  std::string name = j.at("model").get<std::string>();
  std::map<std::string, double> params;
  if (j.contains("params"))
    for (auto& [k, v] : j.at("params").items()) params[k] = v.get<double>();
  int n_levels = j.value("n_levels", 0);
  return build_model(name, params, n_levels);
}

// ---- limit cycles ----

inline Json limit_cycle_to_json(const LimitCycle& lc) {
  Json samples = Json::array();
  for (const Ket& s : lc.samples) samples.push_back(ket_to_json(s));
  return Json{{"model", model_to_json(lc.model)},
              {"T", lc.T},
              {"omega", lc.omega},
              {"dt_sample", lc.dt_sample},
              {"theta_origin", lc.theta_origin},
              {"samples", std::move(samples)}};
}

inline LimitCycle limit_cycle_from_json(const Json& j) {
  for (const char* key : {"model", "T", "omega", "dt_sample", "samples"})
    if (!j.is_object() || !j.contains(key))
      throw std::invalid_argument(std::string("limit_cycle_from_json: missing field '") +
                                  key + "'");
  LimitCycle lc;
  lc.model = model_from_json(j.at("model"));
  lc.T = j.at("T").get<double>();
  lc.omega = j.at("omega").get<double>();
  lc.dt_sample = j.at("dt_sample").get<double>();
  lc.theta_origin = j.value("theta_origin", std::string());
  if (!(lc.T > 0.0) || !(lc.omega > 0.0) || !(lc.dt_sample > 0.0))
    throw std::invalid_argument("limit_cycle_from_json: T, omega, dt_sample must be > 0");
  const Json& samples = j.at("samples");
  if (!samples.is_array() || samples.size() < 4)
    throw std::invalid_argument("limit_cycle_from_json: need at least 4 samples");
  lc.samples.reserve(samples.size());
  for (const Json& s : samples) {
    Ket k = ket_from_json(s);
    if (k.size() != lc.model.dim)
      throw std::invalid_argument(
          "limit_cycle_from_json: sample dimension does not match the model");
    lc.samples.push_back(std::move(k));
  }
  return lc;
}

// ---- CSV helpers ----

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_double(const std::string& s, const char* fn) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || (end && *end != '\0' && *end != '\r'))
    throw std::invalid_argument(std::string(fn) + ": bad numeric field '" + s + "'");
  return v;
}

// Lines of a CSV body, header verified, blank trailing lines ignored.
inline std::vector<std::string> csv_rows(const std::string& text, const std::string& header,
                                         const char* fn) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      if (line != header)
        throw std::invalid_argument(std::string(fn) + ": expected header '" + header +
                                    "', got '" + line + "'");
      first = false;
      continue;
    }
    if (!line.empty()) rows.push_back(line);
  }
  if (first) throw std::invalid_argument(std::string(fn) + ": empty file");
  return rows;
}

}  // namespace detail

// ---- phase response tables: theta,l,Z rows, theta-major ----

inline void save_prc_csv(const std::filesystem::path& path, const PRCTable& t) {
  if (t.n_theta() < 1 || t.z.rows() != t.theta_grid.size() || t.z.cols() < 1)
    throw std::invalid_argument("save_prc_csv: empty or inconsistent table");
  std::string out = "theta,l,Z\n";
  for (int i = 0; i < t.n_theta(); ++i)
    for (int l = 0; l < int(t.z.cols()); ++l)
      out += fmt17(t.theta_grid[i]) + "," + std::to_string(l) + "," + fmt17(t.z(i, l)) +
             "\n";
  save_text(path, out);
}

inline PRCTable load_prc_csv(const std::filesystem::path& path) {
  const auto rows = detail::csv_rows(load_text(path), "theta,l,Z", "load_prc_csv");
  if (rows.empty()) throw std::invalid_argument("load_prc_csv: no data rows");

  // column count = generator index span of the first theta group
  int n_cols = 0;
  for (const std::string& row : rows) {
    const auto f = detail::split_csv_line(row);
    if (f.size() != 3) throw std::invalid_argument("load_prc_csv: need 3 fields per row");
    if (std::stoi(f[1]) != n_cols) break;
    ++n_cols;
  }
  if (n_cols < 1 || rows.size() % std::size_t(n_cols) != 0)
    throw std::invalid_argument("load_prc_csv: ragged table");
  const int n_theta = int(rows.size()) / n_cols;

  PRCTable t;
  t.theta_grid.resize(n_theta);
  t.z.resize(n_theta, n_cols);
  for (int i = 0; i < n_theta; ++i) {
    for (int l = 0; l < n_cols; ++l) {
      const auto f = detail::split_csv_line(rows[std::size_t(i * n_cols + l)]);
      const double theta = detail::parse_double(f[0], "load_prc_csv");
      if (std::stoi(f[1]) != l)
        throw std::invalid_argument("load_prc_csv: generator index out of order");
      if (l == 0)
        t.theta_grid[i] = theta;
      else if (theta != t.theta_grid[i])
        throw std::invalid_argument("load_prc_csv: theta changed inside a group");
      t.z(i, l) = detail::parse_double(f[2], "load_prc_csv");
    }
  }
  return t;
}

// ---- reduced phase equations ----

inline Json phase_sde_to_json(const PhaseSDE& sde) {
  if (sde.n_theta() < 3 || sde.n_channels() < 1)
    throw std::invalid_argument("phase_sde_to_json: empty equation");
  Json theta = Json::array(), y = Json::array(), dy = Json::array(),
       perturb = Json::array();
  for (int i = 0; i < sde.n_theta(); ++i) {
    theta.push_back(sde.theta_grid[i]);
    Json yr = Json::array(), dr = Json::array();
    for (int k = 0; k < sde.n_channels(); ++k) {
      yr.push_back(sde.y(i, k));
      dr.push_back(sde.dy(i, k));
    }
    y.push_back(std::move(yr));
    dy.push_back(std::move(dr));
    if (sde.has_perturbation()) perturb.push_back(sde.perturb[i]);
  }
  return Json{{"omega", sde.omega},
              {"theta", std::move(theta)},
              {"y", std::move(y)},
              {"dy", std::move(dy)},
              {"perturb", std::move(perturb)}};
}

inline PhaseSDE phase_sde_from_json(const Json& j) {
  for (const char* key : {"omega", "theta", "y", "dy"})
    if (!j.is_object() || !j.contains(key))
      throw std::invalid_argument(std::string("phase_sde_from_json: missing field '") +
                                  key + "'");
  PhaseSDE sde;
  sde.omega = j.at("omega").get<double>();
  const Json& theta = j.at("theta");
  const Json& y = j.at("y");
  const Json& dy = j.at("dy");
  const int n = int(theta.size());
  if (n < 3 || int(y.size()) != n || int(dy.size()) != n)
    throw std::invalid_argument("phase_sde_from_json: need matching theta/y/dy, n >= 3");
  const int n_ch = int(y.at(0).size());
  if (n_ch < 1) throw std::invalid_argument("phase_sde_from_json: need >= 1 channel");
  sde.theta_grid.resize(n);
  sde.y.resize(n, n_ch);
  sde.dy.resize(n, n_ch);
  for (int i = 0; i < n; ++i) {
    sde.theta_grid[i] = theta.at(i).get<double>();
    if (int(y.at(i).size()) != n_ch || int(dy.at(i).size()) != n_ch)
      throw std::invalid_argument("phase_sde_from_json: ragged y/dy rows");
    for (int k = 0; k < n_ch; ++k) {
      sde.y(i, k) = y.at(i).at(k).get<double>();
      sde.dy(i, k) = dy.at(i).at(k).get<double>();
    }
  }
  if (j.contains("perturb") && !j.at("perturb").empty()) {
    const Json& p = j.at("perturb");
    if (int(p.size()) != n)
      throw std::invalid_argument("phase_sde_from_json: perturb length mismatch");
    sde.perturb.resize(n);
    for (int i = 0; i < n; ++i) sde.perturb[i] = p.at(i).get<double>();
  }
  sde.rebuild_interpolants();
  return sde;
}

// ---- phase histograms: theta,density rows at bin centers ----

inline void save_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
  if (h.n_bins() < 1) throw std::invalid_argument("save_histogram_csv: empty histogram");
  std::string out = "theta,density\n";
  for (int i = 0; i < h.n_bins(); ++i)
    out += fmt17(h.bin_center(i)) + "," + fmt17(h.density[i]) + "\n";
  save_text(path, out);
}

inline Histogram load_histogram_csv(const std::filesystem::path& path) {
  const auto rows =
      detail::csv_rows(load_text(path), "theta,density", "load_histogram_csv");
  if (rows.size() < 2) throw std::invalid_argument("load_histogram_csv: need >= 2 bins");
  Histogram h;
  h.density.resize(Eigen::Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto f = detail::split_csv_line(rows[i]);
    if (f.size() != 2)
      throw std::invalid_argument("load_histogram_csv: need 2 fields per row");
    const double theta = detail::parse_double(f[0], "load_histogram_csv");
    h.density[Eigen::Index(i)] = detail::parse_double(f[1], "load_histogram_csv");
    const double want = h.bin_center(int(i));
    if (std::abs(theta - want) > 1e-9)
      throw std::invalid_argument("load_histogram_csv: row " + std::to_string(i) +
                                  " is not at its bin center");
  }
  return h;
}

// ---- phase-space grids: x,p,value rows ----

inline void save_grid_csv(const std::filesystem::path& path,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                          const Eigen::MatrixXd& values) {
  if (values.rows() != x.size() || values.cols() != p.size() || x.size() < 1)
    throw std::invalid_argument("save_grid_csv: inconsistent grid");
  std::string out = "x,p,value\n";
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index jj = 0; jj < p.size(); ++jj)
      out += fmt17(x[i]) + "," + fmt17(p[jj]) + "," + fmt17(values(i, jj)) + "\n";
  save_text(path, out);
}

}  // namespace qphase
