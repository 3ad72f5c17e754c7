#pragma once

// Command-line front end: compute, sweep, validate, spectrum, phase-portrait.
// Flags may also come from a JSON config file; flags override the file.

#include "qgeom/fidelity.hpp"
#include "qgeom/spectrum.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

namespace qgeom::cli {

using json = nlohmann::json;

enum ExitCode { kOk = 0, kValidationFailed = 1, kUsage = 2, kNumerical = 3 };

class UsageError : public Error {
public:
  using Error::Error;
};

inline const std::vector<std::string> &output_names() {
  static const std::vector<std::string> names{"qmt", "qgt", "berry_curvature", "berry_connection",
                                              "det", "subdet", "fidelity_chi"};
  return names;
}

inline const std::vector<std::string> &parameter_flags() {
  static const std::vector<std::string> names{"lambda", "omega", "b", "c", "k1", "k2", "a"};
  return names;
}

struct GridAxis {
  double min = 0.0, max = 0.0;
  int count = 1;
  bool log = false;

  double at(int i) const {
    if (count == 1) return min;
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    if (log) return std::exp(std::log(min) + t * (std::log(max) - std::log(min)));
    return min + t * (max - min);
  }
};

struct Options {
  std::string command;
  std::string model;
  double hbar = 1.0;
  std::string format; // empty: per-command default
  std::string destination;
  int jobs = 1;
  std::optional<double> quad_rel_tol;
  std::optional<double> fd_step;
  int n = 0;
  std::vector<std::string> outputs;
  std::map<std::string, double> params;
  std::map<std::string, GridAxis> grid;
  std::string subdet_drop;
  // validate
  int samples = 5;
  std::uint64_t seed = 1;
  int gauge_trials = 3;
  double misnormalize = 1.0;
  // spectrum
  int k = 4;
  int grid_points = 2000;
  // phase-portrait
  std::vector<double> energies;
  int levels = 0;
  int curve_samples = 200;
  double span = 8.0;

  EngineConfig engine() const {
    EngineConfig cfg;
    if (quad_rel_tol) cfg.quad.rel_tol = *quad_rel_tol;
    if (fd_step) cfg.fd.base_step = *fd_step;
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// Formatting

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline json to_json(const RMatrix &m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const RVector &v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline GridAxis parse_axis(const std::string &text) {
  // min:max:count[:log|:linear]
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() < 3 || parts.size() > 4) throw UsageError("grid axis must be min:max:count[:log]");
  GridAxis a;
  try {
    a.min = std::stod(parts[0]);
    a.max = std::stod(parts[1]);
    a.count = std::stoi(parts[2]);
  } catch (const std::exception &) {
    throw UsageError("malformed grid axis '" + text + "'");
  }
  if (parts.size() == 4) {
    if (parts[3] == "log") a.log = true;
    else if (parts[3] != "linear") throw UsageError("grid scale must be linear or log");
  }
  return a;
}

// ---------------------------------------------------------------------------
// Config file

inline void apply_config(Options &o, const json &j) {
  auto get = [&](const char *key, auto &target) {
    if (j.contains(key)) j.at(key).get_to(target);
  };
  get("model", o.model);
  get("hbar", o.hbar);
  get("format", o.format);
  get("out", o.destination);
  get("jobs", o.jobs);
  get("n", o.n);
  get("outputs", o.outputs);
  get("subdet_drop", o.subdet_drop);
  get("samples", o.samples);
  get("seed", o.seed);
  get("gauge_trials", o.gauge_trials);
  get("k", o.k);
  get("grid_points", o.grid_points);
  get("energies", o.energies);
  get("levels", o.levels);
  get("curve_samples", o.curve_samples);
  get("span", o.span);
  if (j.contains("quad_rel_tol")) o.quad_rel_tol = j.at("quad_rel_tol").get<double>();
  if (j.contains("fd_step")) o.fd_step = j.at("fd_step").get<double>();
  for (const auto &name : parameter_flags())
    if (j.contains(name)) o.params[name] = j.at(name).get<double>();
  if (j.contains("fixed"))
    for (const auto &[k, v] : j.at("fixed").items()) o.params[k] = v.get<double>();
  if (j.contains("grid"))
    for (const auto &[k, v] : j.at("grid").items()) {
      GridAxis a;
      a.min = v.at("min").get<double>();
      a.max = v.at("max").get<double>();
      a.count = v.value("count", 1);
      const std::string scale = v.value("scale", std::string("linear"));
      if (scale != "linear" && scale != "log") throw UsageError("grid scale must be linear or log");
      a.log = scale == "log";
      o.grid[k] = a;
    }
}

// ---------------------------------------------------------------------------
// Records

struct Record {
  std::vector<std::pair<std::string, double>> params;
  std::optional<RMatrix> qmt, berry_curvature, chi;
  std::optional<CMatrix> qgt;
  std::optional<RVector> beta;
  std::optional<double> det, subdet;
  double quad_err = 0.0, norm_deviation = 0.0, connection_residue = 0.0, hermiticity_residue = 0.0;
  std::string error;
};

inline bool wants(const Options &o, const std::string &name) {
  return std::find(o.outputs.begin(), o.outputs.end(), name) != o.outputs.end();
}

inline std::size_t subdet_index(const ModelSpec &m, const Options &o) {
  if (o.subdet_drop.empty()) return m.num_params() - 1;
  const auto &names = m.names();
  const auto it = std::find(names.begin(), names.end(), o.subdet_drop);
  if (it == names.end()) throw UsageError("subdet parameter '" + o.subdet_drop + "' not in " + m.name);
  return static_cast<std::size_t>(it - names.begin());
}

inline RMatrix drop_index(const RMatrix &g, std::size_t drop) {
  const auto m = g.rows(), d = static_cast<Eigen::Index>(drop);
  RMatrix s(m - 1, m - 1);
  for (Eigen::Index i = 0, si = 0; i < m; ++i) {
    if (i == d) continue;
    for (Eigen::Index j = 0, sj = 0; j < m; ++j) {
      if (j == d) continue;
      s(si, sj++) = g(i, j);
    }
    ++si;
  }
  return s;
}

inline Record evaluate(const ModelSpec &m, const ParameterPoint &p, const Options &o) {
  Record r;
  for (std::size_t i = 0; i < p.size(); ++i) r.params.emplace_back(p.names()[i], p[i]);
  try {
    const auto cfg = o.engine();
    const QuantumNumber n{o.n, 0};
    m.check_state(n);
    const auto t = qgt(m.system, p, n, cfg);
    if (wants(o, "qmt")) r.qmt = t.qmt;
    if (wants(o, "qgt")) r.qgt = t.qgt;
    if (wants(o, "berry_curvature")) r.berry_curvature = t.berry_curvature;
    if (wants(o, "berry_connection")) r.beta = t.berry_connection;
    if (wants(o, "det")) r.det = t.qmt.determinant();
    if (wants(o, "subdet")) r.subdet = drop_index(t.qmt, subdet_index(m, o)).determinant();
    if (wants(o, "fidelity_chi")) r.chi = fidelity_susceptibility(m.system, p, n, {}, cfg).chi;
    r.quad_err = t.quad_error;
    r.norm_deviation = t.norm_deviation;
    r.connection_residue = t.connection_residue;
    r.hermiticity_residue = t.hermiticity_residue;
  } catch (const UsageError &) {
    throw;
  } catch (const std::exception &e) {
    r.error = e.what();
  }
  return r;
}

inline std::vector<std::string> csv_header(const ModelSpec &m, const Options &o) {
  const std::size_t k = m.num_params();
  auto idx = [](std::size_t i, std::size_t j) { return std::to_string(i + 1) + std::to_string(j + 1); };
  std::vector<std::string> h = m.names();
  if (wants(o, "qmt"))
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) h.push_back("G_" + idx(i, j));
  if (wants(o, "qgt")) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) h.push_back("QGT_re_" + idx(i, j));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) h.push_back("QGT_im_" + idx(i, j));
  }
  if (wants(o, "berry_curvature"))
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) h.push_back("F_" + idx(i, j));
  if (wants(o, "berry_connection"))
    for (std::size_t i = 0; i < k; ++i) h.push_back("beta_" + std::to_string(i + 1));
  if (wants(o, "det")) h.push_back("det");
  if (wants(o, "subdet")) h.push_back("subdet");
  if (wants(o, "fidelity_chi"))
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) h.push_back("chi_" + idx(i, j));
  h.push_back("quad_err");
  h.push_back("error");
  return h;
}

inline std::string csv_row(const Record &r, const ModelSpec &m, const Options &o) {
  const auto k = static_cast<Eigen::Index>(m.num_params());
  std::vector<std::string> cells;
  for (const auto &[name, v] : r.params) cells.push_back(fmt17(v));
  const bool ok = r.error.empty();
  auto matrix = [&](const std::optional<RMatrix> &mat, bool upper) {
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = upper ? i + 1 : 0; j < k; ++j)
        cells.push_back(ok && mat ? fmt17((*mat)(i, j)) : "");
  };
  if (wants(o, "qmt")) matrix(r.qmt, false);
  if (wants(o, "qgt")) {
    std::optional<RMatrix> re, im;
    if (r.qgt) {
      re = r.qgt->real();
      im = r.qgt->imag();
    }
    matrix(re, false);
    matrix(im, false);
  }
  if (wants(o, "berry_curvature")) matrix(r.berry_curvature, true);
  if (wants(o, "berry_connection"))
    for (Eigen::Index i = 0; i < k; ++i) cells.push_back(ok && r.beta ? fmt17((*r.beta)[i]) : "");
  if (wants(o, "det")) cells.push_back(ok && r.det ? fmt17(*r.det) : "");
  if (wants(o, "subdet")) cells.push_back(ok && r.subdet ? fmt17(*r.subdet) : "");
  if (wants(o, "fidelity_chi")) matrix(r.chi, false);
  cells.push_back(ok ? fmt17(r.quad_err) : "");
  cells.push_back(csv_escape(r.error));
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
  return line;
}

inline json json_record(const Record &r) {
  json j;
  json params = json::object();
  for (const auto &[name, v] : r.params) params[name] = v;
  j["params"] = params;
  if (!r.error.empty()) {
    j["error"] = r.error;
    return j;
  }
  if (r.qmt) j["qmt"] = to_json(*r.qmt);
  if (r.qgt) j["qgt"] = {{"re", to_json(RMatrix(r.qgt->real()))}, {"im", to_json(RMatrix(r.qgt->imag()))}};
  if (r.berry_curvature) j["berry_curvature"] = to_json(*r.berry_curvature);
  if (r.beta) j["berry_connection"] = to_json(*r.beta);
  if (r.det) j["det"] = *r.det;
  if (r.subdet) j["subdet"] = *r.subdet;
  if (r.chi) j["fidelity_chi"] = to_json(*r.chi);
  j["diag"] = {{"quad_err", r.quad_err},
               {"norm_deviation", r.norm_deviation},
               {"connection_residue", r.connection_residue},
               {"hermiticity_residue", r.hermiticity_residue}};
  return j;
}

// ---------------------------------------------------------------------------
// Commands

inline ParameterPoint point_from_flags(const ModelSpec &m, const Options &o) {
  std::vector<double> v;
  for (const auto &name : m.names()) {
    const auto it = o.params.find(name);
    if (it == o.params.end()) throw UsageError("missing parameter --" + name + " for " + m.name);
    v.push_back(it->second);
  }
  const auto p = m.point(v);
  if (!m.system.parameter_domain.admissible(p.span()))
    throw UsageError("parameters outside the domain of " + m.name);
  return p;
}

inline std::string format_or(const Options &o, const std::string &fallback) {
  const std::string f = o.format.empty() ? fallback : o.format;
  if (f != "csv" && f != "jsonl") throw UsageError("format must be csv or jsonl");
  return f;
}

inline void write_line(std::ostream &out, const std::string &line) { out << line << '\n'; }

inline json config_echo(const ModelSpec &m, const Options &o) {
  const auto cfg = o.engine();
  return {{"model", m.name},          {"hbar", m.hbar()},
          {"n", o.n},                 {"quad_rel_tol", cfg.quad.rel_tol},
          {"fd_step", cfg.fd.base_step}};
}

inline int cmd_compute(const ModelSpec &m, const Options &o, std::ostream &out, std::ostream &err) {
  const auto p = point_from_flags(m, o);
  const auto r = evaluate(m, p, o);
  const std::string f = format_or(o, "jsonl");
  if (f == "csv") {
    const auto h = csv_header(m, o);
    std::string line;
    for (std::size_t i = 0; i < h.size(); ++i) line += (i ? "," : "") + h[i];
    write_line(out, line);
    write_line(out, csv_row(r, m, o));
  } else {
    auto j = json_record(r);
    j["config"] = config_echo(m, o);
    write_line(out, j.dump());
  }
  if (!r.error.empty()) {
    err << json{{"error", {{"command", "compute"}, {"message", r.error}}}}.dump() << '\n';
    return kNumerical;
  }
  return kOk;
}

inline int cmd_sweep(const ModelSpec &m, const Options &o, std::ostream &out, std::ostream &err) {
  const auto &names = m.names();
  const auto &pd = m.system.parameter_domain;
  for (const auto &[name, axis] : o.grid) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw UsageError("grid parameter '" + name + "' not in " + m.name);
    if (axis.count < 1) throw UsageError("grid count must be at least 1");
    if (axis.log && !(axis.min > 0.0 && axis.max > 0.0))
      throw UsageError("log grid for '" + name + "' needs positive bounds");
    const auto i = static_cast<std::size_t>(it - names.begin());
    if (i < pd.ranges.size() && (!pd.ranges[i].contains(axis.min) || !pd.ranges[i].contains(axis.max)))
      throw UsageError("grid bounds for '" + name + "' leave the parameter domain");
  }
  if (o.grid.empty()) throw UsageError("sweep needs at least one --grid axis");

  // lexicographic over grid indices, first model parameter outermost
  std::vector<std::vector<double>> points(1);
  for (const auto &name : names) {
    std::vector<double> values;
    if (auto g = o.grid.find(name); g != o.grid.end())
      for (int i = 0; i < g->second.count; ++i) values.push_back(g->second.at(i));
    else if (auto f = o.params.find(name); f != o.params.end())
      values.push_back(f->second);
    else
      throw UsageError("parameter '" + name + "' is neither swept nor fixed");
    std::vector<std::vector<double>> next;
    for (const auto &p : points)
      for (double v : values) {
        next.push_back(p);
        next.back().push_back(v);
      }
    points = std::move(next);
  }
  // subdet index errors are usage errors, so surface them before the pool starts
  if (wants(o, "subdet")) subdet_index(m, o);

  std::vector<Record> records(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < points.size();) {
      const auto p = m.point(points[i]);
      if (!pd.admissible(p.span())) {
        records[i] = Record{};
        for (std::size_t j = 0; j < p.size(); ++j) records[i].params.emplace_back(names[j], p[j]);
        records[i].error = "point outside the parameter domain";
        continue;
      }
      records[i] = evaluate(m, p, o);
    }
  };
  const int jobs = o.jobs > 0 ? o.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();

  const std::string f = format_or(o, "csv");
  if (f == "csv") {
    const auto h = csv_header(m, o);
    std::string line;
    for (std::size_t i = 0; i < h.size(); ++i) line += (i ? "," : "") + h[i];
    write_line(out, line);
  }
  std::size_t failures = 0;
  for (const auto &r : records) {
    failures += !r.error.empty();
    write_line(out, f == "csv" ? csv_row(r, m, o) : json_record(r).dump());
  }
  err << "sweep: " << records.size() << " points, " << failures << " failures\n";
  return kOk;
}

struct CheckResult {
  std::string name;
  std::string point;
  double deviation = 0.0;
  double tolerance = 0.0;
  std::string error;
  bool passed() const { return error.empty() && deviation <= tolerance; }
};

inline std::string describe(const ParameterPoint &p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ";" : "") + p.names()[i] + "=" + fmt17(p[i]);
  return s;
}

inline int cmd_validate(const ModelSpec &base, const Options &o, std::ostream &out, std::ostream &err) {
  ModelSpec m = base;
  if (o.misnormalize != 1.0) {
    // test hook: scale the state so its norm is wrong
    const double f = o.misnormalize;
    auto eval = m.system.psi.eval;
    m.system.psi.eval = [eval, f](const Coord &x, Params p, const QuantumNumber &n) { return f * eval(x, p, n); };
    if (m.system.psi.has_analytic_grad()) {
      auto grad = m.system.psi.param_grad;
      m.system.psi.param_grad = [grad, f](const Coord &x, Params p, const QuantumNumber &n, int r) {
        return f * grad(x, p, n, r);
      };
    }
  }
  const QuantumNumber n{o.n, 0};
  m.check_state(n);
  const auto cfg = o.engine();

  std::vector<ParameterPoint> pts;
  bool any_flag = false;
  for (const auto &name : m.names()) any_flag = any_flag || o.params.count(name);
  if (any_flag) pts.push_back(point_from_flags(m, o));
  else pts = m.sample(static_cast<std::size_t>(std::max(1, o.samples)), o.seed);

  std::vector<CheckResult> results;
  std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto &p : pts) {
    const std::string where = describe(p);
    GeometricTensors t;
    bool have = false;
    {
      CheckResult c{"normalization", where, 0.0, 1e-7, {}};
      try {
        t = qgt(m.system, p, n, cfg);
        have = true;
        c.deviation = std::max(t.norm_deviation, t.normalization_identity);
      } catch (const std::exception &e) {
        c.error = e.what();
      }
      results.push_back(c);
    }
    {
      CheckResult c{"route", where, 0.0, 1e-4, {}};
      try {
        if (!have) throw NumericalError("geometric route unavailable");
        const auto chi = fidelity_susceptibility(m.system, p, n, {}, cfg).chi;
        c.deviation = max_abs(RMatrix(chi - t.qmt));
      } catch (const std::exception &e) {
        c.error = e.what();
      }
      results.push_back(c);
    }
    {
      CheckResult c{"gauge", where, 0.0, 1e-7, {}};
      try {
        if (!have) throw NumericalError("geometric route unavailable");
        std::uniform_real_distribution<> U(-2.0, 2.0);
        for (int trial = 0; trial < o.gauge_trials; ++trial) {
          std::vector<double> coef(p.size() + 1);
          for (auto &v : coef) v = U(rng);
          auto alpha = [coef](Params q) {
            double s = coef.back();
            for (std::size_t i = 0; i < q.size(); ++i) s += coef[i] * std::sin((1.0 + i) * q[i]);
            return s;
          };
          auto dalpha = [coef](Params q, int r) {
            const auto i = static_cast<std::size_t>(r);
            return coef[i] * (1.0 + i) * std::cos((1.0 + i) * q[i]);
          };
          const System g = gauge_transform(m.system, alpha, dalpha);
          const auto tg = qgt(g, g.point(p.values()), n, cfg);
          c.deviation = std::max({c.deviation, max_abs(RMatrix(tg.qmt - t.qmt)),
                                  max_abs(RMatrix(tg.berry_curvature - t.berry_curvature)),
                                  max_abs(CMatrix(tg.qgt - t.qgt))});
        }
      } catch (const std::exception &e) {
        c.error = e.what();
      }
      results.push_back(c);
    }
  }

  const std::string f = format_or(o, "csv");
  if (f == "csv") write_line(out, "check,point,max_deviation,tolerance,status,error");
  std::string first_failure;
  for (const auto &c : results) {
    const std::string status = c.passed() ? "pass" : "fail";
    if (!c.passed() && first_failure.empty()) first_failure = c.name;
    if (f == "csv")
      write_line(out, c.name + "," + csv_escape(c.point) + "," + fmt17(c.deviation) + "," +
                          fmt17(c.tolerance) + "," + status + "," + csv_escape(c.error));
    else
      write_line(out, json{{"check", c.name}, {"point", c.point}, {"max_deviation", c.deviation},
                           {"tolerance", c.tolerance}, {"status", status}, {"error", c.error}}
                          .dump());
  }
  if (!first_failure.empty()) {
    err << "validate: check '" << first_failure << "' failed\n";
    return kValidationFailed;
  }
  return kOk;
}

inline int cmd_spectrum(const ModelSpec &m, const Options &o, std::ostream &out, std::ostream &) {
  const auto p = point_from_flags(m, o);
  if (o.k < 0) throw UsageError("k must be non-negative");
  if (o.grid_points < 3) throw UsageError("grid size must be at least 3");
  const std::string f = format_or(o, "csv");
  if (f == "csv") write_line(out, "n,energy,residual");
  if (o.k == 0) return kOk;
  if (o.k > 10) throw UsageError("spectrum supports at most 10 levels");
  const auto grid = make_grid(m, p, static_cast<std::size_t>(o.grid_points), o.k);
  const auto pairs = eigensolve(build_hamiltonian(m, p, grid), o.k);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (f == "csv")
      write_line(out, std::to_string(i) + "," + fmt17(pairs[i].energy) + "," + fmt17(pairs[i].residual));
    else
      write_line(out, json{{"n", i}, {"energy", pairs[i].energy}, {"residual", pairs[i].residual}}.dump());
  }
  return kOk;
}

inline int cmd_phase_portrait(const Options &o, std::ostream &out, std::ostream &err) {
  const auto lam = o.params.find("lambda"), om = o.params.find("omega");
  if (lam == o.params.end() || om == o.params.end())
    throw UsageError("phase-portrait needs --lambda and --omega");
  if (lam->second == 0.0) throw UsageError("lambda must be nonzero");
  std::vector<double> energies = o.energies;
  for (int j = 0; j < o.levels; ++j) energies.push_back((j + 0.5) * o.hbar * om->second);
  if (energies.empty()) throw UsageError("phase-portrait needs --energies or --levels");

  const std::string f = format_or(o, "csv");
  if (f == "csv") write_line(out, "energy,index,x,p");
  for (double e : energies) {
    const auto pts = phase_portrait_level(e, om->second, lam->second, o.curve_samples, o.span);
    const std::string note = pts.empty() ? "energy below the potential minimum" : "";
    if (!note.empty()) err << "phase-portrait: E = " << fmt17(e) << ": " << note << '\n';
    if (f == "csv") {
      for (std::size_t i = 0; i < pts.size(); ++i)
        write_line(out, fmt17(e) + "," + std::to_string(i) + "," + fmt17(pts[i][0]) + "," + fmt17(pts[i][1]));
    } else {
      json j{{"energy", e}, {"points", json::array()}};
      for (const auto &pt : pts) j["points"].push_back({pt[0], pt[1]});
      if (!note.empty()) j["note"] = note;
      write_line(out, j.dump());
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char *const *argv, std::ostream &out = std::cout,
               std::ostream &err = std::cerr) {
  CLI::App app{"Quantum geometric tensors of parameter-dependent curved-space states", "qgeom"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, model_name, format, out_arg, outputs_csv, subdet_drop, energies_csv;
  double hbar = 1.0, quad_rel_tol = 0.0, fd_step = 0.0, misnormalize = 1.0, span = 8.0;
  int jobs = 1, n = 0, samples = 5, gauge_trials = 3, k = 4, grid_points = 2000, levels = 0,
      curve_samples = 200;
  std::uint64_t seed = 1;
  std::vector<std::string> grid_specs;
  std::map<std::string, double> param_values;

  std::map<std::string, CLI::Option *> opt;
  opt["config"] = app.add_option("--config", config_path, "JSON file mirroring the flags");
  opt["model"] = app.add_option("--model", model_name, "model name");
  opt["hbar"] = app.add_option("--hbar", hbar, "reduced Planck constant (default 1)");
  opt["format"] = app.add_option("--format", format, "csv or jsonl");
  opt["out"] = app.add_option("--out", out_arg, "output path, or comma-separated quantities to emit");
  opt["outputs"] = app.add_option("--outputs", outputs_csv, "comma-separated quantities to emit");
  opt["jobs"] = app.add_option("--jobs", jobs, "worker threads for sweeps (0: all cores)");
  opt["quad_rel_tol"] = app.add_option("--quad-rel-tol", quad_rel_tol, "quadrature relative tolerance");
  opt["fd_step"] = app.add_option("--fd-step", fd_step, "finite-difference base step");
  opt["n"] = app.add_option("--n", n, "quantum number");
  for (const auto &name : parameter_flags())
    opt["param:" + name] = app.add_option("--" + name, param_values[name], "model parameter " + name);

  auto *compute = app.add_subcommand("compute", "tensors at one parameter point");
  auto *sweep = app.add_subcommand("sweep", "tensors over a parameter grid");
  opt["grid"] = sweep->add_option("--grid", grid_specs, "name=min:max:count[:log], repeatable");
  opt["subdet_drop"] = app.add_option("--subdet-drop", subdet_drop, "parameter removed for subdet");
  auto *validate = app.add_subcommand("validate", "dual-route, gauge and normalization checks");
  opt["samples"] = validate->add_option("--samples", samples, "random points when none is given");
  opt["seed"] = validate->add_option("--seed", seed, "sampling seed");
  opt["gauge_trials"] = validate->add_option("--gauge-trials", gauge_trials, "random gauges per point");
  opt["misnormalize"] = validate->add_option("--misnormalize", misnormalize)->group("");
  auto *spectrum = app.add_subcommand("spectrum", "lowest Laplace-Beltrami eigenvalues");
  opt["k"] = spectrum->add_option("--k", k, "number of levels");
  opt["grid_points"] = spectrum->add_option("--grid-points", grid_points, "grid size");
  auto *portrait = app.add_subcommand("phase-portrait", "classical level sets of the morse-like model");
  opt["energies"] = portrait->add_option("--energies", energies_csv, "comma-separated energies");
  opt["levels"] = portrait->add_option("--levels", levels, "use the lowest quantized energies");
  opt["curve_samples"] = portrait->add_option("--samples", curve_samples, "points per branch");
  opt["span"] = portrait->add_option("--span", span, "extent of each branch in lambda x");

  auto fail = [&](int code, const std::string &type, const std::string &msg) {
    err << json{{"error", {{"type", type}, {"message", msg}}}}.dump() << '\n';
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError &e) {
    return fail(kUsage, "usage", e.what());
  }

  auto set = [&](const char *key) { return opt.at(key)->count() > 0; };
  auto split = [](const std::string &s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ',');)
      if (!p.empty()) parts.push_back(p);
    return parts;
  };

  try {
    Options o;
    for (auto *sub : {compute, sweep, validate, spectrum, portrait})
      if (sub->parsed()) o.command = sub->get_name();

    if (set("config")) {
      std::ifstream in(config_path);
      if (!in) throw UsageError("cannot read config file '" + config_path + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception &e) {
        throw UsageError(std::string("malformed config: ") + e.what());
      }
      try {
        apply_config(o, j);
      } catch (const json::exception &e) {
        throw UsageError(std::string("bad config value: ") + e.what());
      }
    }
    if (set("model")) o.model = model_name;
    if (set("hbar")) o.hbar = hbar;
    if (set("format")) o.format = format;
    if (set("jobs")) o.jobs = jobs;
    if (set("quad_rel_tol")) o.quad_rel_tol = quad_rel_tol;
    if (set("fd_step")) o.fd_step = fd_step;
    if (set("n")) o.n = n;
    if (set("subdet_drop")) o.subdet_drop = subdet_drop;
    if (set("samples")) o.samples = samples;
    if (set("seed")) o.seed = seed;
    if (set("gauge_trials")) o.gauge_trials = gauge_trials;
    if (set("misnormalize")) o.misnormalize = misnormalize;
    if (set("k")) o.k = k;
    if (set("grid_points")) o.grid_points = grid_points;
    if (set("levels")) o.levels = levels;
    if (set("curve_samples")) o.curve_samples = curve_samples;
    if (set("span")) o.span = span;
    if (set("energies")) {
      o.energies.clear();
      for (const auto &e : split(energies_csv)) {
        try {
          o.energies.push_back(std::stod(e));
        } catch (const std::exception &) {
          throw UsageError("malformed energy '" + e + "'");
        }
      }
    }
    for (const auto &name : parameter_flags())
      if (set(("param:" + name).c_str())) o.params[name] = param_values[name];
    for (const auto &g : grid_specs) {
      const auto eq = g.find('=');
      if (eq == std::string::npos) throw UsageError("grid axis must be name=min:max:count[:log]");
      o.grid[g.substr(0, eq)] = parse_axis(g.substr(eq + 1));
    }
    if (set("outputs")) o.outputs = split(outputs_csv);
    if (set("out")) {
      // a list of known quantities selects outputs; anything else is a path
      const auto parts = split(out_arg);
      const bool quantities = !parts.empty() && std::all_of(parts.begin(), parts.end(), [](const std::string &s) {
        return std::find(output_names().begin(), output_names().end(), s) != output_names().end();
      });
      if (quantities) o.outputs = parts;
      else o.destination = out_arg;
    }
    if (o.outputs.empty()) o.outputs = {"qmt", "berry_curvature", "det"};
    for (const auto &q : o.outputs)
      if (std::find(output_names().begin(), output_names().end(), q) == output_names().end())
        throw UsageError("unknown output '" + q + "'");
    if (!(o.hbar > 0.0)) throw UsageError("hbar must be positive");

    std::ofstream file;
    std::ostream *dest = &out;
    if (!o.destination.empty() && o.destination != "stdout") {
      file.open(o.destination);
      if (!file) throw UsageError("cannot open output '" + o.destination + "'");
      dest = &file;
    }

    if (o.command == "phase-portrait") return cmd_phase_portrait(o, *dest, err);
    if (o.model.empty()) throw UsageError("--model is required");
    const ModelSpec &m = model(o.model, o.hbar);
    if (o.command == "compute") return cmd_compute(m, o, *dest, err);
    if (o.command == "sweep") return cmd_sweep(m, o, *dest, err);
    if (o.command == "validate") return cmd_validate(m, o, *dest, err);
    return cmd_spectrum(m, o, *dest, err);
  } catch (const UsageError &e) {
    return fail(kUsage, "usage", e.what());
  } catch (const UnknownModel &e) {
    return fail(kUsage, "unknown model", e.what());
  } catch (const DimensionError &e) {
    return fail(kUsage, "dimension", e.what());
  } catch (const DomainError &e) {
    return fail(kUsage, "domain", e.what());
  } catch (const std::exception &e) {
    return fail(kNumerical, "numerical", e.what());
  }
}

} // namespace qgeom::cli
