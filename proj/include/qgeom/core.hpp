#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qgeom {

using cplx = std::complex<double>;

/// Point of configuration space. Only the first `dim` components are used.
using Coord = std::array<double, 2>;

/// Quantum numbers; 1-D systems use only the first entry.
using QuantumNumber = std::array<int, 2>;

/// Parameter values as seen by metric/wavefunction callables.
using Params = std::span<const double>;

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inputs disagree on a dimension; `field` names the offending input.
class DimensionError : public Error {
public:
  DimensionError(std::string field, const std::string &what)
      : Error(what), field_(std::move(field)) {}
  const std::string &field() const { return field_; }

private:
  std::string field_;
};

/// A point lies outside a parameter domain, or a metric sample is invalid.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Any numerical failure: non-convergence, NaNs, ill-conditioned fits.
class NumericalError : public Error {
public:
  using Error::Error;
};

class NoAnalyticReference : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Parameters

class ParameterPoint {
public:
  ParameterPoint() = default;
  ParameterPoint(std::vector<std::string> names, std::vector<double> values)
      : names_(std::move(names)), values_(std::move(values)) {
    if (names_.size() != values_.size())
      throw DimensionError("values", "parameter names and values differ in length");
    if (values_.empty())
      throw DimensionError("values", "parameter point must have at least one entry");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw DomainError("parameter '" + names_[i] + "' is not finite");
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  Params span() const { return values_; }
  const std::vector<double> &values() const { return values_; }
  const std::vector<std::string> &names() const { return names_; }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    throw DimensionError(std::string(name), "unknown parameter '" + std::string(name) + "'");
  }

  ParameterPoint with(std::size_t i, double v) const {
    auto vals = values_;
    vals.at(i) = v;
    return {names_, std::move(vals)};
  }

  ParameterPoint with_values(std::vector<double> vals) const {
    return {names_, std::move(vals)};
  }

private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool contains(double x) const { return x > lo && x < hi; }
};

/// Admissible values of one parameter: a union of disjoint open intervals.
struct ParameterRange {
  std::vector<Interval> pieces{Interval{}};

  static ParameterRange positive() { return {{Interval{0.0, kInf}}}; }
  static ParameterRange nonzero() { return {{Interval{-kInf, 0.0}, Interval{0.0, kInf}}}; }
  static ParameterRange real() { return {}; }

  int piece_of(double x) const {
    for (std::size_t i = 0; i < pieces.size(); ++i)
      if (pieces[i].contains(x)) return static_cast<int>(i);
    return -1;
  }
  bool contains(double x) const { return piece_of(x) >= 0; }
};

/// Per-parameter ranges plus an optional joint constraint (e.g. k1 + 2 k2 > 0).
struct ParameterDomain {
  std::vector<ParameterRange> ranges;
  std::function<bool(Params)> constraint;

  bool admissible(Params p) const {
    if (!ranges.empty()) {
      if (ranges.size() != p.size()) return false;
      for (std::size_t i = 0; i < p.size(); ++i)
        if (!ranges[i].contains(p[i])) return false;
    }
    return !constraint || constraint(p);
  }

  /// Both ends admissible and no coordinate jumps between range pieces.
  /// Joint constraints are assumed convex, so checking the ends suffices.
  bool admissible_segment(Params a, Params b) const {
    if (!admissible(a) || !admissible(b)) return false;
    if (!ranges.empty())
      for (std::size_t i = 0; i < a.size(); ++i)
        if (ranges[i].piece_of(a[i]) != ranges[i].piece_of(b[i])) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Families

/// Spatial metric g_ij(x, lambda).
struct MetricFamily {
  int dim = 1;
  std::function<SmallMatrix(const Coord &, Params)> eval;
  /// Optional d/d lambda_rho of ln det g.
  std::function<double(const Coord &, Params, int)> log_det_grad;

  double det(const Coord &x, Params p) const { return eval(x, p).determinant(); }
  /// sqrt(det g); for a 1-D metric c x^2 this is sqrt(c)|x|.
  double sqrt_det(const Coord &x, Params p) const { return std::sqrt(det(x, p)); }
};

/// Complex amplitude psi_n(x, lambda) with optional analytic parameter gradient.
struct WavefunctionFamily {
  int dim = 1;
  std::function<cplx(const Coord &, Params, const QuantumNumber &)> eval;
  std::function<cplx(const Coord &, Params, const QuantumNumber &, int)> param_grad;
  /// Optional alpha(lambda) for gauge tests.
  std::function<double(Params)> gauge_phase;

  bool has_analytic_grad() const { return static_cast<bool>(param_grad); }
};

// ---------------------------------------------------------------------------
// Domains

enum class DomainKind { FullLine, HalfLine, ProductOf1D, Custom };

struct Axis {
  double lo = -kInf;
  double hi = kInf;
  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

/// One piece of a domain: a box in u-space mapped onto configuration space.
/// integral f(x) d^N x over the piece == multiplicity * integral f(x(u)) J(u) d^N u.
struct Chart {
  int dim = 1;
  std::array<Axis, 2> box{};
  std::function<Coord(const Coord &)> to_x; // empty: identity
  std::function<Coord(const Coord &)> to_u; // empty: identity
  std::function<double(const Coord &)> jacobian; // empty: 1
  double multiplicity = 1.0;

  Coord map(const Coord &u) const { return to_x ? to_x(u) : u; }
  Coord inverse(const Coord &x) const { return to_u ? to_u(x) : x; }
  double jac(const Coord &u) const { return jacobian ? jacobian(u) : 1.0; }
};

struct Domain {
  int dim = 1;
  DomainKind kind = DomainKind::FullLine;
  std::array<Axis, 2> bounds{};
  /// Pieces covering the region, possibly parameter dependent.
  std::function<std::vector<Chart>(Params)> charts;

  std::vector<Chart> pieces(Params p) const { return charts(p); }

  /// Real line split at `breakpoint`, each half integrated separately.
  static Domain full_line(double breakpoint = 0.0) {
    Domain d;
    d.dim = 1;
    d.kind = DomainKind::FullLine;
    d.bounds[0] = {-kInf, kInf};
    d.charts = [breakpoint](Params) {
      Chart left, right;
      left.box[0] = {-kInf, breakpoint};
      right.box[0] = {breakpoint, kInf};
      return std::vector<Chart>{left, right};
    };
    return d;
  }

  /// Real line without a split point.
  static Domain full_line_unsplit() {
    Domain d;
    d.dim = 1;
    d.kind = DomainKind::FullLine;
    d.bounds[0] = {-kInf, kInf};
    d.charts = [](Params) {
      Chart c;
      c.box[0] = {-kInf, kInf};
      return std::vector<Chart>{c};
    };
    return d;
  }

  static Domain half_line(double lo = 0.0) {
    Domain d;
    d.dim = 1;
    d.kind = DomainKind::HalfLine;
    d.bounds[0] = {lo, kInf};
    d.charts = [lo](Params) {
      Chart c;
      c.box[0] = {lo, kInf};
      return std::vector<Chart>{c};
    };
    return d;
  }

  /// Cartesian product of two 1-D axes (identity map).
  static Domain product(Axis ax, Axis ay) {
    Domain d;
    d.dim = 2;
    d.kind = DomainKind::ProductOf1D;
    d.bounds = {ax, ay};
    d.charts = [ax, ay](Params) {
      Chart c;
      c.dim = 2;
      c.box = {ax, ay};
      return std::vector<Chart>{c};
    };
    return d;
  }
};

// ---------------------------------------------------------------------------
// System: everything needed to evaluate curved brackets for one family.

class System {
public:
  System() : id_(next_id()) {}
  System(MetricFamily metric, WavefunctionFamily psi, Domain domain, ParameterDomain params,
         std::vector<std::string> names, double hbar = 1.0)
      : metric(std::move(metric)), psi(std::move(psi)), domain(std::move(domain)),
        parameter_domain(std::move(params)), names(std::move(names)), hbar(hbar), id_(next_id()) {
    check_dimensions();
  }

  MetricFamily metric;
  WavefunctionFamily psi;
  Domain domain;
  ParameterDomain parameter_domain;
  std::vector<std::string> names;
  double hbar = 1.0;

  std::size_t num_params() const { return names.size(); }
  int dim() const { return metric.dim; }
  std::uint64_t id() const { return id_; }

  ParameterPoint point(std::vector<double> values) const { return {names, std::move(values)}; }

  void check_dimensions() const {
    if (metric.dim != psi.dim)
      throw DimensionError("psi", "wavefunction dimension " + std::to_string(psi.dim) +
                                      " does not match metric dimension " +
                                      std::to_string(metric.dim));
    if (domain.dim != metric.dim)
      throw DimensionError("domain", "domain dimension " + std::to_string(domain.dim) +
                                         " does not match metric dimension " +
                                         std::to_string(metric.dim));
    if (metric.dim < 1 || metric.dim > 2)
      throw DimensionError("metric", "only 1-D and 2-D configuration spaces are supported");
    if (!parameter_domain.ranges.empty() && parameter_domain.ranges.size() != names.size())
      throw DimensionError("parameter_domain", "parameter domain size differs from names");
  }

  void check_point(const ParameterPoint &p) const {
    if (p.size() != names.size())
      throw DimensionError("lambda", "expected " + std::to_string(names.size()) +
                                         " parameters, got " + std::to_string(p.size()));
    if (!parameter_domain.admissible(p.span()))
      throw DomainError("parameter point outside the admissible domain");
  }

private:
  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }
  std::uint64_t id_;
};

// ---------------------------------------------------------------------------
// Output bundle

struct GeometricTensors {
  CMatrix qgt;
  RMatrix qmt;
  RMatrix berry_curvature;
  RVector berry_connection;
  double quad_error = 0.0;
  std::vector<double> fd_steps;

  // diagnostics
  double norm_deviation = 0.0;       // |<psi|psi> - 1|
  double connection_residue = 0.0;   // max |Im beta|
  double normalization_identity = 0.0; // max |2 Re<psi|d psi> - <sigma>/2|
  double hermiticity_residue = 0.0;

  /// 10x the summed bracket error estimates, floored at 1e-10.
  double tolerance() const { return std::max(1e-10, 10.0 * 8.0 * quad_error); }
};

inline double max_abs(const RMatrix &m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const CMatrix &m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

} // namespace qgeom
