#pragma once

// Built-in systems with closed-form states and reference tensors.
//
//   anharmonic-1d           g = 4 lambda x^2,          params (lambda, omega)
//   morse-like              g = lambda^2/4 e^{-lambda x}, params (lambda, omega)
//   coupled-anharmonic-2d   g = diag(a^2 x^2, b^2 y^2),  params (k1, k2, a, b)
//   generalized-anharmonic  g = 4 lambda x^2,          params (lambda, b, c)
//   flat-oscillator         g = 1,                     params (omega)
//
// The 1-D curved states are oscillator eigenfunctions in a flat coordinate:
// s = sign(x) sqrt(lambda) x^2 for the x^2 metrics and u = exp(-lambda x / 2)
// for the exponential one.

#include "qgeom/core.hpp"
#include "qgeom/geometry.hpp"

#include <boost/math/tools/roots.hpp>

#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <variant>

namespace qgeom {

class UnknownModel : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Special functions

/// Physicists' Hermite polynomial by the three-term recurrence.
inline double hermite(int n, double z) {
  if (n < 0) throw DomainError("hermite order must be non-negative");
  double h0 = 1.0;
  if (n == 0) return h0;
  double h1 = 2.0 * z;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * z * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Orthonormal Hermite functions h_n(z) and h_{n-1}(z) (the latter 0 for n = 0).
/// Stable for large n and |z|, unlike H_n(z) e^{-z^2/2} evaluated directly.
inline std::pair<double, double> hermite_function(int n, double z) {
  if (n < 0) throw DomainError("hermite order must be non-negative");
  double prev = 0.0;
  double cur = std::exp(-0.5 * z * z) / std::sqrt(std::sqrt(std::numbers::pi));
  for (int k = 0; k < n; ++k) {
    const double next = std::sqrt(2.0 / (k + 1)) * z * cur - std::sqrt(double(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

// ---------------------------------------------------------------------------
// Model description

/// Flat 1-D coordinate u used by the spectral solver, with g_uu(u) and V(u).
struct SpectralChart {
  /// true: u in (0, L) with a zero-flux wall at u = 0; false: u in (-L, L).
  bool half_line = false;
  std::function<double(double, Params)> sqrt_guu;
  std::function<double(double, Params)> potential;
  std::function<double(double, Params)> to_x;
  std::function<double(double, Params)> to_u;
  /// Half-width L in u covering the lowest k levels.
  std::function<double(Params, int)> extent;
};

struct ModelSpec {
  std::string name;
  std::string summary;
  System system;
  std::function<double(const Coord &, Params)> potential;
  std::optional<SpectralChart> spectral;
  /// Largest supported quantum number; -1 for unbounded.
  int max_n = -1;
  /// Per-parameter box [lo, hi] used for random validation points.
  std::vector<std::array<double, 2>> sample_box;

  // analytic references; empty when unavailable
  std::function<double(int, Params, int, int)> qmt_entry;
  std::function<RMatrix(int, Params)> berry_curvature;
  std::function<RVector(int, Params)> berry_connection;
  std::function<double(int, Params)> energy;
  std::function<double(int, Params)> norm_const;

  const std::vector<std::string> &names() const { return system.names; }
  std::size_t num_params() const { return system.num_params(); }
  double hbar() const { return system.hbar; }

  ParameterPoint point(std::vector<double> v) const { return system.point(std::move(v)); }

  void check_state(const QuantumNumber &n) const {
    if (n[0] < 0 || n[1] < 0) throw DomainError("quantum numbers must be non-negative");
    if (max_n >= 0 && (n[0] > max_n || n[1] > max_n))
      throw DomainError(name + " supports quantum numbers up to " + std::to_string(max_n));
  }

  /// Uniform random admissible points in the sample box.
  std::vector<ParameterPoint> sample(std::size_t count, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::vector<ParameterPoint> out;
    while (out.size() < count) {
      std::vector<double> v;
      for (const auto &b : sample_box) v.push_back(std::uniform_real_distribution<>(b[0], b[1])(rng));
      if (system.parameter_domain.admissible(v)) out.push_back(point(std::move(v)));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Analytic references

enum class Quantity { Qmt, QmtEntry, BerryCurvature, BerryConnection, Energy, NormConst };

using Reference = std::variant<double, RVector, RMatrix>;

inline Reference analytic_reference(const ModelSpec &model, Quantity q, int n,
                                    const ParameterPoint &lambda, std::pair<int, int> entry = {}) {
  model.check_state({n, 0});
  model.system.check_point(lambda);
  const Params p = lambda.span();
  auto missing = [&](const std::string &what) {
    return NoAnalyticReference("no analytic reference for " + what + " of " + model.name);
  };
  switch (q) {
  case Quantity::QmtEntry:
    if (!model.qmt_entry) throw missing("the metric");
    return model.qmt_entry(n, p, entry.first, entry.second);
  case Quantity::Qmt: {
    if (!model.qmt_entry) throw missing("the metric");
    const auto m = static_cast<Eigen::Index>(p.size());
    RMatrix g(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        g(i, j) = model.qmt_entry(n, p, static_cast<int>(i), static_cast<int>(j));
    return g;
  }
  case Quantity::BerryCurvature:
    if (!model.berry_curvature) throw missing("the Berry curvature");
    return model.berry_curvature(n, p);
  case Quantity::BerryConnection:
    if (!model.berry_connection) throw missing("the Berry connection");
    return model.berry_connection(n, p);
  case Quantity::Energy:
    if (!model.energy) throw missing("the energy");
    return model.energy(n, p);
  case Quantity::NormConst:
    if (!model.norm_const) throw missing("the normalization constant");
    return model.norm_const(n, p);
  }
  throw missing("this quantity");
}

// ---------------------------------------------------------------------------
// Shared pieces

namespace detail {

inline double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }

inline MetricFamily metric_4lambda_x2() {
  MetricFamily g;
  g.dim = 1;
  g.eval = [](const Coord &x, Params p) {
    SmallMatrix m(1, 1);
    m(0, 0) = 4.0 * p[0] * x[0] * x[0];
    return m;
  };
  g.log_det_grad = [](const Coord &, Params p, int r) { return r == 0 ? 1.0 / p[0] : 0.0; };
  return g;
}

/// Oscillator amplitude (omega/hbar)^{1/4} h_n(xi) and d/dxi of it, with xi = sqrt(omega/hbar) s.
struct OscillatorValue {
  double psi;
  double dpsi_dxi;
  double xi;
};

inline OscillatorValue oscillator(int n, double s, double omega, double hbar) {
  const double xi = std::sqrt(omega / hbar) * s;
  const auto [h, hm] = hermite_function(n, xi);
  const double scale = std::sqrt(std::sqrt(omega / hbar));
  return {scale * h, scale * (-xi * h + std::sqrt(2.0 * n) * hm), xi};
}

// Half-width of the flat-coordinate box holding the lowest k levels.
inline double oscillator_extent(double omega, double hbar, int k) {
  return (std::sqrt(2.0 * std::max(k, 1) + 1.0) + 7.0) * std::sqrt(hbar / omega);
}

inline SpectralChart x2_chart(std::function<double(Params)> lam, std::function<double(Params)> om,
                              double hbar) {
  SpectralChart c;
  c.sqrt_guu = [lam](double, Params p) { return std::sqrt(lam(p)); };
  c.potential = [lam, om](double u, Params p) {
    const double w = om(p);
    return 0.5 * w * w * lam(p) * u * u;
  };
  c.to_x = [](double u, Params) { return sgn(u) * std::sqrt(std::abs(u)); };
  c.to_u = [](double x, Params) { return sgn(x) * x * x; };
  c.extent = [lam, om, hbar](Params p, int k) {
    return oscillator_extent(om(p), hbar, k) / std::sqrt(lam(p));
  };
  return c;
}

} // namespace detail

// ---------------------------------------------------------------------------
// anharmonic-1d

inline ModelSpec anharmonic_1d(double hbar = 1.0) {
  WavefunctionFamily psi;
  psi.dim = 1;
  psi.eval = [hbar](const Coord &x, Params p, const QuantumNumber &n) -> cplx {
    const double s = detail::sgn(x[0]) * std::sqrt(p[0]) * x[0] * x[0];
    return detail::oscillator(n[0], s, p[1], hbar).psi;
  };
  psi.param_grad = [hbar](const Coord &x, Params p, const QuantumNumber &n, int r) -> cplx {
    const double lam = p[0], om = p[1];
    const double s = detail::sgn(x[0]) * std::sqrt(lam) * x[0] * x[0];
    const auto o = detail::oscillator(n[0], s, om, hbar);
    if (o.psi == 0.0 && o.dpsi_dxi == 0.0) return 0.0;
    if (r == 0) return o.dpsi_dxi * o.xi / (2.0 * lam);
    return o.psi / (4.0 * om) + o.dpsi_dxi * o.xi / (2.0 * om);
  };

  ParameterDomain pd{{ParameterRange::positive(), ParameterRange::positive()}, {}};
  ModelSpec m;
  m.name = "anharmonic-1d";
  m.summary = "quartic oscillator on g = 4 lambda x^2";
  m.system = System(detail::metric_4lambda_x2(), psi, Domain::full_line(0.0), pd,
                    {"lambda", "omega"}, hbar);
  m.potential = [](const Coord &x, Params p) {
    return 0.5 * p[1] * p[1] * p[0] * std::pow(x[0], 4);
  };
  m.spectral = detail::x2_chart([](Params p) { return p[0]; }, [](Params p) { return p[1]; }, hbar);
  m.sample_box = {{0.5, 2.0}, {0.5, 2.0}};
  m.qmt_entry = [](int n, Params p, int i, int j) {
    const double v[2] = {1.0 / p[0], 1.0 / p[1]};
    return (n * n + n + 1) / 8.0 * v[i] * v[j];
  };
  m.berry_curvature = [](int, Params) { return RMatrix::Zero(2, 2).eval(); };
  m.berry_connection = [](int, Params) { return RVector::Zero(2).eval(); };
  m.energy = [hbar](int n, Params p) { return (n + 0.5) * hbar * p[1]; };
  m.norm_const = [hbar](int n, Params p) {
    return std::pow(p[1] / (std::numbers::pi * hbar), 0.25) /
           std::sqrt(std::pow(2.0, n) * std::tgamma(n + 1.0));
  };
  return m;
}

// ---------------------------------------------------------------------------
// morse-like

/// Closed form of G_lambda_lambda for the ground state.
inline double morse_qmt_lambda_lambda(double lambda, double omega, double hbar = 1.0) {
  const double g = std::numbers::egamma;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double l4 = std::log(4.0);
  const double w = omega / hbar;
  const double bracket = 4.0 + 2.0 * (g - 4.0) * g + pi2 + 2.0 * l4 * l4 +
                         4.0 * (g - 2.0) * std::log(4.0 * w) + 2.0 * std::log(w) * std::log(16.0 * w);
  return bracket / (16.0 * lambda * lambda);
}

/// Classical H(x, p) = (2/lambda^2) e^{lambda x} p^2 + (omega^2/2) e^{-lambda x}.
inline double phase_portrait_hamiltonian(double x, double p, double omega, double lambda) {
  if (lambda == 0.0) throw DomainError("lambda must be nonzero");
  return 2.0 / (lambda * lambda) * std::exp(lambda * x) * p * p +
         0.5 * omega * omega * std::exp(-lambda * x);
}

/// x where H(x, 0) = E.
inline double morse_turning_point(double energy, double omega, double lambda) {
  if (lambda == 0.0) throw DomainError("lambda must be nonzero");
  if (!(energy > 0.0)) throw DomainError("turning point needs E > 0");
  return -std::log(2.0 * energy / (omega * omega)) / lambda;
}

/// Level set H = E as one polyline (x, p), lower branch then upper branch,
/// passing through the turning point. Sampling is uniform in s = lambda x over
/// [s_t, s_t + span], so lambda -> -lambda mirrors x exactly. Empty for E <= 0.
inline std::vector<std::array<double, 2>> phase_portrait_level(double energy, double omega,
                                                               double lambda, int samples,
                                                               double span = 8.0) {
  if (lambda == 0.0) throw DomainError("lambda must be nonzero");
  if (samples < 2) throw DomainError("phase portrait needs at least 2 samples");
  std::vector<std::array<double, 2>> out;
  if (!(energy > 0.0)) return out;
  const double st = lambda * morse_turning_point(energy, omega, lambda);
  std::vector<std::array<double, 2>> upper;
  for (int i = 0; i < samples; ++i) {
    const double s = st + span * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double e = std::exp(-s);
    const double p2 = 0.5 * lambda * lambda * e * (energy - 0.5 * omega * omega * e);
    upper.push_back({s / lambda, i == 0 ? 0.0 : std::sqrt(std::max(0.0, p2))});
  }
  for (auto it = upper.rbegin(); it != upper.rend(); ++it)
    if (it + 1 != upper.rend()) out.push_back({(*it)[0], -(*it)[1]});
  out.insert(out.end(), upper.begin(), upper.end());
  return out;
}

inline ModelSpec morse_like(double hbar = 1.0) {
  auto norm = [hbar](double om) {
    return std::sqrt(2.0) * std::pow(om / (std::numbers::pi * hbar), 0.25);
  };

  WavefunctionFamily psi;
  psi.dim = 1;
  psi.eval = [hbar, norm](const Coord &x, Params p, const QuantumNumber &n) -> cplx {
    if (n[0] != 0) throw DomainError("morse-like exposes the ground state only");
    return norm(p[1]) * std::exp(-p[1] / (2.0 * hbar) * std::exp(-p[0] * x[0]));
  };
  psi.param_grad = [hbar, norm](const Coord &x, Params p, const QuantumNumber &n,
                                int r) -> cplx {
    if (n[0] != 0) throw DomainError("morse-like exposes the ground state only");
    const double e = std::exp(-p[0] * x[0]);
    const double v = norm(p[1]) * std::exp(-p[1] / (2.0 * hbar) * e);
    if (v == 0.0) return 0.0;
    if (r == 0) return v * p[1] / (2.0 * hbar) * x[0] * e;
    return v * (1.0 / (4.0 * p[1]) - e / (2.0 * hbar));
  };

  MetricFamily g;
  g.dim = 1;
  g.eval = [](const Coord &x, Params p) {
    SmallMatrix m(1, 1);
    m(0, 0) = 0.25 * p[0] * p[0] * std::exp(-p[0] * x[0]);
    return m;
  };
  g.log_det_grad = [](const Coord &x, Params p, int r) {
    return r == 0 ? 2.0 / p[0] - x[0] : 0.0;
  };

  // u = exp(-lambda x / 2) on (0, inf); sqrt(g) dx = du
  Domain dom;
  dom.dim = 1;
  dom.kind = DomainKind::Custom;
  dom.bounds[0] = {-kInf, kInf};
  dom.charts = [](Params p) {
    const double lam = p[0];
    Chart c;
    c.box[0] = {0.0, kInf};
    c.to_x = [lam](const Coord &u) { return Coord{-2.0 / lam * std::log(u[0]), 0.0}; };
    c.to_u = [lam](const Coord &x) { return Coord{std::exp(-0.5 * lam * x[0]), 0.0}; };
    c.jacobian = [lam](const Coord &u) { return 2.0 / (std::abs(lam) * u[0]); };
    return std::vector<Chart>{c};
  };

  ParameterDomain pd{{ParameterRange::nonzero(), ParameterRange::positive()}, {}};
  ModelSpec m;
  m.name = "morse-like";
  m.summary = "exponential metric g = lambda^2/4 e^{-lambda x}, ground state";
  m.system = System(g, psi, dom, pd, {"lambda", "omega"}, hbar);
  m.potential = [](const Coord &x, Params p) {
    return 0.5 * p[1] * p[1] * std::exp(-p[0] * x[0]);
  };
  SpectralChart sc;
  sc.half_line = true;
  sc.sqrt_guu = [](double, Params) { return 1.0; };
  sc.potential = [](double u, Params p) { return 0.5 * p[1] * p[1] * u * u; };
  sc.to_x = [](double u, Params p) { return -2.0 / p[0] * std::log(u); };
  sc.to_u = [](double x, Params p) { return std::exp(-0.5 * p[0] * x); };
  sc.extent = [hbar](Params p, int k) { return detail::oscillator_extent(p[1], hbar, 2 * k); };
  m.spectral = sc;
  m.max_n = 0;
  m.sample_box = {{0.5, 2.0}, {0.5, 2.0}};
  m.qmt_entry = [hbar](int, Params p, int i, int j) -> double {
    if (i == 0 && j == 0) return morse_qmt_lambda_lambda(p[0], p[1], hbar);
    if (i == 1 && j == 1) return 1.0 / (8.0 * p[1] * p[1]);
    throw NoAnalyticReference("G_lambda_omega of morse-like has no closed form here");
  };
  m.berry_curvature = [](int, Params) { return RMatrix::Zero(2, 2).eval(); };
  m.berry_connection = [](int, Params) { return RVector::Zero(2).eval(); };
  m.energy = [hbar](int, Params p) { return 0.5 * hbar * p[1]; };
  m.norm_const = [norm](int, Params p) { return norm(p[1]); };
  return m;
}

// ---------------------------------------------------------------------------
// coupled-anharmonic-2d

/// Normal-mode data of the coupled ground state and its parameter derivatives.
struct CoupledModes {
  double wp = 0.0, wm = 0.0; // omega_+ = sqrt(k1), omega_- = sqrt(k1 + 2 k2)
  double A = 0.0;
  std::array<double, 4> dwp{}, dwm{}, dlnA{};
};

inline CoupledModes coupled_modes(Params p, double hbar = 1.0) {
  const double k1 = p[0], k2 = p[1], a = p[2], b = p[3];
  if (!(k1 > 0.0) || !(k1 + 2.0 * k2 > 0.0) || a == 0.0 || b == 0.0)
    throw DomainError("coupled model needs k1 > 0, k1 + 2 k2 > 0, a != 0, b != 0");
  CoupledModes c;
  c.wp = std::sqrt(k1);
  c.wm = std::sqrt(k1 + 2.0 * k2);
  const double r = c.wm / c.wp;
  const bool same = a * b > 0.0;
  // integration wedge opening angle depends on the relative sign of a and b
  const double T = same ? std::atan(std::sqrt(r)) : std::atan(1.0 / std::sqrt(r));
  c.A = std::sqrt(std::sqrt(c.wp * c.wm) / (4.0 * hbar * T));
  c.dwp = {0.5 / c.wp, 0.0, 0.0, 0.0};
  c.dwm = {0.5 / c.wm, 1.0 / c.wm, 0.0, 0.0};
  for (std::size_t i = 0; i < 4; ++i) {
    const double dr = (c.dwm[i] * c.wp - c.wm * c.dwp[i]) / (c.wp * c.wp);
    const double dT = (same ? 1.0 : -1.0) * dr / ((1.0 + r) * 2.0 * std::sqrt(r));
    c.dlnA[i] = 0.25 * (c.dwp[i] / c.wp + c.dwm[i] / c.wm) - 0.5 * dT / T;
  }
  return c;
}

/// Psi_0(x, y) = A exp(-(w+ U+^2 + w- U-^2) / (2 hbar)), U+- = (a x^2/2 +- b y^2/2)/sqrt 2.
inline double coupled_ground_state(double x, double y, Params p, double hbar = 1.0) {
  const auto c = coupled_modes(p, hbar);
  const double P = 0.5 * p[2] * x * x, Q = 0.5 * p[3] * y * y;
  const double up = (P + Q) / std::numbers::sqrt2, um = (P - Q) / std::numbers::sqrt2;
  return c.A * std::exp(-(c.wp * up * up + c.wm * um * um) / (2.0 * hbar));
}

inline ModelSpec coupled_anharmonic_2d(double hbar = 1.0) {
  WavefunctionFamily psi;
  psi.dim = 2;
  psi.eval = [hbar](const Coord &x, Params p, const QuantumNumber &n) -> cplx {
    if (n[0] != 0 || n[1] != 0) throw DomainError("coupled model exposes the ground state only");
    return coupled_ground_state(x[0], x[1], p, hbar);
  };
  psi.param_grad = [hbar](const Coord &x, Params p, const QuantumNumber &n, int r) -> cplx {
    if (n[0] != 0 || n[1] != 0) throw DomainError("coupled model exposes the ground state only");
    const auto c = coupled_modes(p, hbar);
    const double x2 = x[0] * x[0], y2 = x[1] * x[1];
    const double P = 0.5 * p[2] * x2, Q = 0.5 * p[3] * y2;
    const double up = (P + Q) / std::numbers::sqrt2, um = (P - Q) / std::numbers::sqrt2;
    const double v = c.A * std::exp(-(c.wp * up * up + c.wm * um * um) / (2.0 * hbar));
    if (v == 0.0) return 0.0;
    const auto i = static_cast<std::size_t>(r);
    double dup = 0.0, dum = 0.0;
    if (r == 2) dup = dum = x2 / (2.0 * std::numbers::sqrt2);
    if (r == 3) {
      dup = y2 / (2.0 * std::numbers::sqrt2);
      dum = -dup;
    }
    const double dexp = c.dwp[i] * up * up + c.dwm[i] * um * um + 2.0 * c.wp * up * dup +
                        2.0 * c.wm * um * dum;
    return v * (c.dlnA[i] - dexp / (2.0 * hbar));
  };

  MetricFamily g;
  g.dim = 2;
  g.eval = [](const Coord &x, Params p) {
    SmallMatrix m = SmallMatrix::Zero(2, 2);
    m(0, 0) = p[2] * p[2] * x[0] * x[0];
    m(1, 1) = p[3] * p[3] * x[1] * x[1];
    return m;
  };
  g.log_det_grad = [](const Coord &, Params p, int r) {
    return r == 2 ? 2.0 / p[2] : r == 3 ? 2.0 / p[3] : 0.0;
  };

  // Wedge chart. With P = |a| x^2/2, Q = |b| y^2/2 on the first quadrant,
  // r = (P + Q)/sqrt 2 in (0, inf) and t = (P - Q)/(P + Q) in (-1, 1);
  // sqrt(g) dx dy = dP dQ = r dr dt. Four quadrants give multiplicity 4.
  Domain dom;
  dom.dim = 2;
  dom.kind = DomainKind::Custom;
  dom.bounds = {Axis{}, Axis{}};
  dom.charts = [](Params p) {
    const double a = std::abs(p[2]), b = std::abs(p[3]);
    Chart c;
    c.dim = 2;
    c.box = {Axis{0.0, kInf}, Axis{-1.0, 1.0}};
    c.multiplicity = 4.0;
    c.to_x = [a, b](const Coord &u) {
      const double P = u[0] * (1.0 + u[1]) / std::numbers::sqrt2;
      const double Q = u[0] * (1.0 - u[1]) / std::numbers::sqrt2;
      return Coord{std::sqrt(2.0 * P / a), std::sqrt(2.0 * Q / b)};
    };
    c.to_u = [a, b](const Coord &x) {
      const double P = 0.5 * a * x[0] * x[0], Q = 0.5 * b * x[1] * x[1];
      return Coord{(P + Q) / std::numbers::sqrt2, (P - Q) / (P + Q)};
    };
    c.jacobian = [a, b](const Coord &u) {
      const double P = u[0] * (1.0 + u[1]) / std::numbers::sqrt2;
      const double Q = u[0] * (1.0 - u[1]) / std::numbers::sqrt2;
      return u[0] / (2.0 * std::sqrt(a * b * P * Q));
    };
    return std::vector<Chart>{c};
  };

  ParameterDomain pd{{ParameterRange::positive(), ParameterRange::real(), ParameterRange::nonzero(),
                      ParameterRange::nonzero()},
                     [](Params p) { return p[0] + 2.0 * p[1] > 0.0; }};
  ModelSpec m;
  m.name = "coupled-anharmonic-2d";
  m.summary = "two quartic oscillators with quadratic coupling on g = diag(a^2 x^2, b^2 y^2)";
  m.system = System(g, psi, dom, pd, {"k1", "k2", "a", "b"}, hbar);
  m.potential = [](const Coord &x, Params p) {
    const double x2 = x[0] * x[0], y2 = x[1] * x[1];
    const double d = 0.5 * p[2] * x2 - 0.5 * p[3] * y2;
    return 0.5 * p[0] * (0.25 * p[2] * p[2] * x2 * x2 + 0.25 * p[3] * p[3] * y2 * y2) +
           0.5 * p[1] * d * d;
  };
  m.max_n = 0;
  m.sample_box = {{0.5, 2.0}, {0.1, 1.0}, {0.5, 2.0}, {0.5, 2.0}};
  m.berry_curvature = [](int, Params) { return RMatrix::Zero(4, 4).eval(); };
  m.berry_connection = [](int, Params) { return RVector::Zero(4).eval(); };
  m.energy = [hbar](int, Params p) {
    const auto c = coupled_modes(p, hbar);
    return 0.5 * hbar * (c.wp + c.wm);
  };
  m.norm_const = [hbar](int, Params p) { return coupled_modes(p, hbar).A; };
  return m;
}

// ---------------------------------------------------------------------------
// generalized-anharmonic

inline ModelSpec generalized_anharmonic(double hbar = 1.0) {
  auto omega = [](Params p) { return std::sqrt(p[2] - p[1] * p[1]); };

  WavefunctionFamily psi;
  psi.dim = 1;
  psi.eval = [hbar, omega](const Coord &x, Params p, const QuantumNumber &n) -> cplx {
    const double x2 = x[0] * x[0];
    const double s = detail::sgn(x[0]) * std::sqrt(p[0]) * x2;
    const double mod = detail::oscillator(n[0], s, omega(p), hbar).psi;
    return mod * std::polar(1.0, -p[1] * p[0] * x2 * x2 / (2.0 * hbar));
  };
  psi.param_grad = [hbar, omega](const Coord &x, Params p, const QuantumNumber &n,
                                 int r) -> cplx {
    const double lam = p[0], b = p[1], w = omega(p);
    const double x2 = x[0] * x[0], x4 = x2 * x2;
    const double s = detail::sgn(x[0]) * std::sqrt(lam) * x2;
    const auto o = detail::oscillator(n[0], s, w, hbar);
    if (o.psi == 0.0 && o.dpsi_dxi == 0.0) return 0.0;
    const cplx phase = std::polar(1.0, -b * lam * x4 / (2.0 * hbar));
    const double d_omega = o.psi / (4.0 * w) + o.dpsi_dxi * o.xi / (2.0 * w);
    const cplx I(0.0, 1.0);
    switch (r) {
    case 0:
      return phase * (o.dpsi_dxi * o.xi / (2.0 * lam) - I * b * x4 / (2.0 * hbar) * o.psi);
    case 1:
      return phase * (d_omega * (-b / w) - I * lam * x4 / (2.0 * hbar) * o.psi);
    default:
      return phase * (d_omega / (2.0 * w));
    }
  };

  ParameterDomain pd{{ParameterRange::positive(), ParameterRange::real(), ParameterRange::real()},
                     [](Params p) { return p[2] - p[1] * p[1] > 0.0; }};
  ModelSpec m;
  m.name = "generalized-anharmonic";
  m.summary = "generalized oscillator with x p + p x coupling on g = 4 lambda x^2";
  m.system = System(detail::metric_4lambda_x2(), psi, Domain::full_line(0.0), pd,
                    {"lambda", "b", "c"}, hbar);
  // real operator after removing the first-order term with the phase exp(i b lambda x^4 / 2 hbar)
  m.potential = [](const Coord &x, Params p) {
    return 0.5 * (p[2] - p[1] * p[1]) * p[0] * std::pow(x[0], 4);
  };
  m.spectral = detail::x2_chart([](Params p) { return p[0]; }, omega, hbar);
  m.sample_box = {{0.5, 2.0}, {0.0, 0.5}, {1.0, 2.0}};
  m.qmt_entry = [omega](int n, Params p, int i, int j) {
    const double lam = p[0], b = p[1], c = p[2], w = omega(p);
    const double w2 = w * w, w4 = w2 * w2;
    const double G[3][3] = {{c / (8 * w2 * lam * lam), 0.0, 1.0 / (16 * w2 * lam)},
                            {0.0, c / (8 * w4), -b / (16 * w4)},
                            {1.0 / (16 * w2 * lam), -b / (16 * w4), 1.0 / (32 * w4)}};
    return (n * n + n + 1) * G[i][j];
  };
  // reference closed form; half of d(beta), see README
  m.berry_curvature = [omega](int n, Params p) {
    const double lam = p[0], b = p[1], c = p[2], w = omega(p);
    RMatrix F(3, 3);
    F << 0, 2 * c, -b, -2 * c, 0, -lam, b, lam, 0;
    return RMatrix((2 * n + 1) / (16 * w * w * w * lam) * F);
  };
  m.berry_connection = [omega](int n, Params p) {
    const double w = omega(p);
    RVector beta(3);
    beta << -p[1] * (n + 0.5) / (2 * w * p[0]), -(n + 0.5) / (2 * w), 0.0;
    return beta;
  };
  m.energy = [hbar, omega](int n, Params p) { return (n + 0.5) * hbar * omega(p); };
  m.norm_const = [hbar, omega](int n, Params p) {
    return std::pow(omega(p) / (std::numbers::pi * hbar), 0.25) /
           std::sqrt(std::pow(2.0, n) * std::tgamma(n + 1.0));
  };
  return m;
}

/// d(beta) for the generalized model, from beta_lambda = -b(n+1/2)/(2 omega lambda),
/// beta_b = -(n+1/2)/(2 omega), beta_c = 0.
inline RMatrix generalized_curvature_from_connection(int n, Params p) {
  const double lam = p[0], b = p[1], c = p[2], w = std::sqrt(c - b * b);
  RMatrix F(3, 3);
  F << 0, 2 * c, -b, -2 * c, 0, -lam, b, lam, 0;
  return (2 * n + 1) / (8 * w * w * w * lam) * F;
}

// ---------------------------------------------------------------------------
// flat-oscillator (library only)

inline ModelSpec flat_oscillator(double hbar = 1.0) {
  WavefunctionFamily psi;
  psi.dim = 1;
  psi.eval = [hbar](const Coord &x, Params p, const QuantumNumber &n) -> cplx {
    return detail::oscillator(n[0], x[0], p[0], hbar).psi;
  };
  psi.param_grad = [hbar](const Coord &x, Params p, const QuantumNumber &n, int) -> cplx {
    const auto o = detail::oscillator(n[0], x[0], p[0], hbar);
    if (o.psi == 0.0 && o.dpsi_dxi == 0.0) return 0.0;
    return o.psi / (4.0 * p[0]) + o.dpsi_dxi * o.xi / (2.0 * p[0]);
  };
  MetricFamily g;
  g.dim = 1;
  g.eval = [](const Coord &, Params) { return SmallMatrix::Identity(1, 1).eval(); };
  g.log_det_grad = [](const Coord &, Params, int) { return 0.0; };

  ModelSpec m;
  m.name = "flat-oscillator";
  m.summary = "harmonic oscillator on the flat line";
  m.system = System(g, psi, Domain::full_line_unsplit(), {{ParameterRange::positive()}, {}},
                    {"omega"}, hbar);
  m.potential = [](const Coord &x, Params p) { return 0.5 * p[0] * p[0] * x[0] * x[0]; };
  SpectralChart sc;
  sc.sqrt_guu = [](double, Params) { return 1.0; };
  sc.potential = [](double u, Params p) { return 0.5 * p[0] * p[0] * u * u; };
  sc.to_x = [](double u, Params) { return u; };
  sc.to_u = [](double x, Params) { return x; };
  sc.extent = [hbar](Params p, int k) { return detail::oscillator_extent(p[0], hbar, k); };
  m.spectral = sc;
  m.sample_box = {{0.5, 2.0}};
  m.qmt_entry = [](int n, Params p, int, int) { return (n * n + n + 1) / (8.0 * p[0] * p[0]); };
  m.berry_curvature = [](int, Params) { return RMatrix::Zero(1, 1).eval(); };
  m.berry_connection = [](int, Params) { return RVector::Zero(1).eval(); };
  m.energy = [hbar](int n, Params p) { return (n + 0.5) * hbar * p[0]; };
  return m;
}

// ---------------------------------------------------------------------------
// Registry

/// Largest |<psi_0|psi_0> - 1| over `count` random admissible sample points.
inline double max_norm_deviation(const ModelSpec &m, std::size_t count, std::uint64_t seed,
                                 const QuadratureConfig &cfg = {}) {
  double worst = 0.0;
  for (const auto &p : m.sample(count, seed)) {
    const auto r = inner_product(m.system, p, {0, 0}, {0, 0}, cfg);
    worst = std::max(worst, std::abs(r.value - 1.0));
  }
  return worst;
}

/// Names addressable from the command line.
inline const std::vector<std::string> &model_names() {
  static const std::vector<std::string> names{"anharmonic-1d", "morse-like",
                                              "coupled-anharmonic-2d", "generalized-anharmonic"};
  return names;
}

inline ModelSpec build_model(std::string_view name, double hbar = 1.0) {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw DomainError("hbar must be positive");
  if (name == "anharmonic-1d") return anharmonic_1d(hbar);
  if (name == "morse-like") return morse_like(hbar);
  if (name == "coupled-anharmonic-2d") return coupled_anharmonic_2d(hbar);
  if (name == "generalized-anharmonic") return generalized_anharmonic(hbar);
  throw UnknownModel("unknown model '" + std::string(name) + "'");
}

/// Registry lookup. Each (name, hbar) is built once and its ground state is
/// checked to be normalized to 1e-8 at five random admissible points.
inline const ModelSpec &model(std::string_view name, double hbar = 1.0) {
  static std::mutex mutex;
  static std::map<std::pair<std::string, double>, std::unique_ptr<ModelSpec>> registry;
  std::lock_guard lock(mutex);
  const auto key = std::make_pair(std::string(name), hbar);
  if (auto it = registry.find(key); it != registry.end()) return *it->second;
  auto spec = std::make_unique<ModelSpec>(build_model(name, hbar));
  const double dev = max_norm_deviation(*spec, 5, 0x5eed);
  if (dev > 1e-8)
    throw NumericalError(spec->name + " failed its normalization check (deviation " +
                         std::to_string(dev) + ")");
  return *registry.emplace(key, std::move(spec)).first->second;
}

// ---------------------------------------------------------------------------
// Root bracketing

/// Root of f in [lo, hi] by TOMS 748; f must change sign across the bracket.
template <class F> double bracket_root(F &&f, double lo, double hi, double tol = 1e-10) {
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw NumericalError("no sign change in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         "]");
  std::uintmax_t iterations = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, [tol](double a, double b) { return std::abs(b - a) <= tol; },
      iterations);
  return 0.5 * (r.first + r.second);
}

/// omega where G_lambda_omega of the morse-like ground state changes sign.
inline double morse_critical_omega(const ModelSpec &morse, double lambda, double lo, double hi,
                                   const EngineConfig &cfg = {}, double tol = 1e-7) {
  return bracket_root(
      [&](double w) { return qmt(morse.system, morse.point({lambda, w}), {0, 0}, cfg)(0, 1); },
      lo, hi, tol);
}

} // namespace qgeom
