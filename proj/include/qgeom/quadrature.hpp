#pragma once

// Adaptive integration of complex (and complex-vector) valued integrands.
//
// Finite intervals use globally adaptive Gauss-Kronrod (G10/K21) subdivision
// with the usual QUADPACK error scaling. Unbounded axes default to the
// double-exponential rules: exp-sinh on half lines, sinh-sinh on the full
// line, refined by halving the step until two levels agree.
//
// Vector-valued integrands share abscissae, so a whole family of brackets is
// integrated in one pass; convergence is judged on the max-norm.

#include "qgeom/core.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <numbers>
#include <queue>
#include <sstream>

namespace qgeom {

enum class UnboundedScheme { DoubleExponential, MappedKronrod };

struct QuadratureConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_subdivisions = 2000;
  UnboundedScheme unbounded = UnboundedScheme::DoubleExponential;
  int max_de_level = 10;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw DomainError("quadrature tolerances must be positive");
    if (max_subdivisions < 1) throw DomainError("max_subdivisions must be >= 1");
  }

  double tolerance(double magnitude) const { return std::max(abs_tol, rel_tol * magnitude); }

  /// Tightened copy, used when splitting a budget across nested integrals.
  QuadratureConfig scaled(double factor) const {
    auto c = *this;
    c.rel_tol *= factor;
    c.abs_tol *= factor;
    return c;
  }
};

struct VectorIntegral {
  CVector value;
  double error = 0.0;
  long evaluations = 0;
};

struct ScalarIntegral {
  cplx value;
  double error = 0.0;
  long evaluations = 0;
};

/// Non-convergence; carries the best value and its error estimate.
class QuadratureError : public NumericalError {
public:
  QuadratureError(const std::string &what, CVector best, double estimate)
      : NumericalError(what), best_(std::move(best)), estimate_(estimate) {}
  const CVector &best() const { return best_; }
  double estimate() const { return estimate_; }

private:
  CVector best_;
  double estimate_;
};

/// Integrand returned a non-finite value.
class IntegrandNaN : public NumericalError {
public:
  IntegrandNaN(const std::string &what, Coord location)
      : NumericalError(what), location_(location) {}
  const Coord &location() const { return location_; }

private:
  Coord location_;
};

inline double vnorm(const CVector &v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

namespace detail {

inline std::string coord_string(const Coord &x, int dim) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << x[0];
  if (dim > 1) os << ", " << x[1];
  os << ")";
  return os.str();
}

inline void require_finite(const CVector &v, double at) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag()))
      throw IntegrandNaN("integrand is not finite at " + coord_string({at, 0.0}, 1), {at, 0.0});
}

struct Kronrod21 {
  std::array<double, 11> x{};
  std::array<double, 11> wk{};
  std::array<double, 5> wg{}; // Gauss weights at x[1], x[3], ..., x[9]

  static const Kronrod21 &get() {
    static const Kronrod21 rule = [] {
      Kronrod21 r;
      const auto &ka = boost::math::quadrature::gauss_kronrod<double, 21>::abscissa();
      const auto &kw = boost::math::quadrature::gauss_kronrod<double, 21>::weights();
      const auto &gw = boost::math::quadrature::gauss<double, 10>::weights();
      for (std::size_t i = 0; i < 11; ++i) {
        r.x[i] = ka[i];
        r.wk[i] = kw[i];
      }
      for (std::size_t i = 0; i < 5; ++i) r.wg[i] = gw[i];
      return r;
    }();
    return rule;
  }
};

struct Segment {
  double a = 0.0;
  double b = 0.0;
  CVector value;
  double error = 0.0;
  bool operator<(const Segment &o) const { return error < o.error; }
};

template <class F> Segment kronrod21(F &f, double a, double b, long &evals) {
  const auto &r = Kronrod21::get();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);

  std::array<CVector, 21> fv;
  fv[0] = f(c);
  require_finite(fv[0], c);
  for (int j = 1; j <= 10; ++j) {
    const double dx = h * r.x[static_cast<std::size_t>(j)];
    fv[2 * j - 1] = f(c - dx);
    require_finite(fv[2 * j - 1], c - dx);
    fv[2 * j] = f(c + dx);
    require_finite(fv[2 * j], c + dx);
  }
  evals += 21;

  const Eigen::Index n = fv[0].size();
  CVector kron = r.wk[0] * fv[0];
  CVector gauss = CVector::Zero(n);
  RVector resabs = r.wk[0] * fv[0].cwiseAbs();
  for (int j = 1; j <= 10; ++j) {
    const CVector pair = fv[2 * j - 1] + fv[2 * j];
    kron += r.wk[static_cast<std::size_t>(j)] * pair;
    resabs += r.wk[static_cast<std::size_t>(j)] *
              (fv[2 * j - 1].cwiseAbs() + fv[2 * j].cwiseAbs());
    if (j % 2 == 1) gauss += r.wg[static_cast<std::size_t>((j - 1) / 2)] * pair;
  }

  const CVector mean = 0.5 * kron;
  RVector resasc = r.wk[0] * (fv[0] - mean).cwiseAbs();
  for (int j = 1; j <= 10; ++j)
    resasc += r.wk[static_cast<std::size_t>(j)] *
              ((fv[2 * j - 1] - mean).cwiseAbs() + (fv[2 * j] - mean).cwiseAbs());

  Segment s{a, b, kron * h, 0.0};
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double ah = std::abs(h);
  for (Eigen::Index i = 0; i < n; ++i) {
    double err = std::abs(kron[i] - gauss[i]) * ah;
    const double asc = resasc[i] * ah;
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    err = std::max(err, 50.0 * eps * resabs[i] * ah);
    s.error = std::max(s.error, err);
  }
  return s;
}

enum class DeKind { ExpSinhRight, ExpSinhLeft, SinhSinh };

// Abscissa and weight of the double-exponential map at t.
inline bool de_node(DeKind kind, double a, double t, double &x, double &w) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  const double s = half_pi * std::sinh(t);
  if (kind == DeKind::SinhSinh) {
    x = std::sinh(s);
    w = half_pi * std::cosh(t) * std::cosh(s);
  } else {
    const double e = std::exp(s);
    if (!(e > 0.0) || !std::isfinite(e)) return false;
    x = kind == DeKind::ExpSinhRight ? a + e : a - e;
    w = half_pi * std::cosh(t) * e;
    if (x == a) return false;
  }
  return std::isfinite(x) && std::isfinite(w) && w > 0.0;
}

} // namespace detail

/// Globally adaptive G10/K21 on a finite interval.
template <class F>
VectorIntegral adaptive_kronrod(F &&f, double a, double b, const QuadratureConfig &cfg) {
  cfg.validate();
  long evals = 0;
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::kronrod21(f, a, b, evals));
  CVector total = heap.top().value;
  double err = heap.top().error;
  int segments = 1;

  while (err > cfg.tolerance(vnorm(total))) {
    if (segments >= cfg.max_subdivisions)
      throw QuadratureError("adaptive quadrature did not converge after " +
                                std::to_string(segments) + " subdivisions",
                            total, err);
    detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b))
      throw QuadratureError("interval too narrow to subdivide", total, err);
    auto left = detail::kronrod21(f, worst.a, mid, evals);
    auto right = detail::kronrod21(f, mid, worst.b, evals);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
    ++segments;
  }

  // resum to drop accumulated rounding from the incremental updates
  CVector sum = CVector::Zero(total.size());
  double esum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    heap.pop();
  }
  return {sum, esum, evals};
}

/// Double-exponential quadrature on a half line (a, inf), (-inf, a) or the full line.
template <class F>
VectorIntegral double_exponential(F &&f, detail::DeKind kind, double a,
                                  const QuadratureConfig &cfg) {
  cfg.validate();
  constexpr double h0 = 0.5;
  constexpr double negligible = 1e-18;
  long evals = 0;

  auto eval_at = [&](double t, CVector &term) {
    double x = 0.0, w = 0.0;
    if (!detail::de_node(kind, a, t, x, w)) return false;
    term = f(x);
    ++evals;
    detail::require_finite(term, x);
    term *= w;
    return true;
  };

  CVector sum;
  if (!eval_at(0.0, sum)) throw NumericalError("double-exponential map failed at t = 0");

  // walk outwards at the coarse level until the terms stop mattering
  std::array<double, 2> extent{0.0, 0.0};
  for (int side = 0; side < 2; ++side) {
    const double dir = side == 0 ? 1.0 : -1.0;
    int quiet = 0;
    for (int k = 1;; ++k) {
      CVector term;
      const double t = dir * k * h0;
      if (!eval_at(t, term)) break;
      sum += term;
      extent[side] = k * h0;
      const double tn = vnorm(term);
      quiet = (tn == 0.0 || tn <= negligible * vnorm(sum)) ? quiet + 1 : 0;
      if (quiet >= 3) break;
    }
  }

  CVector estimate = h0 * sum;
  double err = kInf;
  double h = h0;
  for (int level = 1; level <= cfg.max_de_level; ++level) {
    h *= 0.5;
    CVector fresh = CVector::Zero(sum.size());
    for (int side = 0; side < 2; ++side) {
      const double dir = side == 0 ? 1.0 : -1.0;
      for (long j = 0;; ++j) {
        const double t = (2 * j + 1) * h;
        if (t > extent[side]) break;
        CVector term;
        if (!eval_at(dir * t, term)) break;
        fresh += term;
      }
    }
    CVector refined = 0.5 * estimate + h * fresh;
    err = vnorm(refined - estimate);
    estimate = std::move(refined);
    if (level >= 3 && err <= cfg.tolerance(vnorm(estimate))) return {estimate, err, evals};
  }
  throw QuadratureError("double-exponential quadrature did not converge", estimate, err);
}

/// Dispatches on the interval type. Infinite ends select the unbounded scheme.
template <class F>
VectorIntegral integrate_interval(F &&f, double lo, double hi, const QuadratureConfig &cfg) {
  if (!(lo < hi)) {
    if (lo == hi) {
      const double at = std::isfinite(lo) ? lo : 0.0;
      return {f(at) * 0.0, 0.0, 1};
    }
    auto r = integrate_interval(f, hi, lo, cfg);
    r.value = -r.value;
    return r;
  }
  const bool flo = std::isfinite(lo), fhi = std::isfinite(hi);
  if (flo && fhi) return adaptive_kronrod(f, lo, hi, cfg);

  if (cfg.unbounded == UnboundedScheme::DoubleExponential) {
    if (flo) return double_exponential(f, detail::DeKind::ExpSinhRight, lo, cfg);
    if (fhi) return double_exponential(f, detail::DeKind::ExpSinhLeft, hi, cfg);
    return double_exponential(f, detail::DeKind::SinhSinh, 0.0, cfg);
  }

  // x = lo + t/(1-t), x = hi - t/(1-t), or x = t/(1-t^2)
  if (flo || fhi) {
    const double base = flo ? lo : hi;
    const double sgn = flo ? 1.0 : -1.0;
    auto g = [&](double t) -> CVector {
      const double d = 1.0 - t;
      return f(base + sgn * t / d) / (d * d);
    };
    return adaptive_kronrod(g, 0.0, 1.0, cfg);
  }
  auto g = [&](double t) -> CVector {
    const double d = 1.0 - t * t;
    return f(t / d) * ((1.0 + t * t) / (d * d));
  };
  return adaptive_kronrod(g, -1.0, 1.0, cfg);
}

/// Iterated integral over a product box; the inner error is integrated along
/// with the value and added to the outer estimate.
template <class F>
VectorIntegral integrate_2d_product(F &&f, const Axis &ax, const Axis &ay,
                                    const QuadratureConfig &cfg) {
  const auto inner_cfg = cfg.scaled(0.25);
  const auto outer_cfg = cfg.scaled(0.5);
  long evals = 0;
  Eigen::Index width = -1;
  auto outer = [&](double x) -> CVector {
    auto inner = integrate_interval([&](double y) -> CVector { return f(x, y); }, ay.lo, ay.hi,
                                    inner_cfg);
    evals += inner.evaluations;
    width = inner.value.size();
    CVector out(width + 1);
    out.head(width) = inner.value;
    out[width] = inner.error;
    return out;
  };
  auto r = integrate_interval(outer, ax.lo, ax.hi, outer_cfg);
  const Eigen::Index n = r.value.size() - 1;
  VectorIntegral result{r.value.head(n), r.error + std::abs(r.value[n]), evals};
  return result;
}

/// Integral of a vector-valued f(x) d^N x over every piece of a domain.
template <class F>
VectorIntegral integrate_domain(F &&f, const Domain &domain, Params p,
                                const QuadratureConfig &cfg) {
  VectorIntegral total;
  bool first = true;
  for (const auto &chart : domain.pieces(p)) {
    VectorIntegral piece;
    try {
      if (chart.dim == 1) {
        auto g = [&](double u) -> CVector {
          const Coord uc{u, 0.0};
          const double j = chart.jac(uc) * chart.multiplicity;
          return f(chart.map(uc)) * j;
        };
        piece = integrate_interval(g, chart.box[0].lo, chart.box[0].hi, cfg);
      } else {
        auto g = [&](double u, double v) -> CVector {
          const Coord uc{u, v};
          const double j = chart.jac(uc) * chart.multiplicity;
          return f(chart.map(uc)) * j;
        };
        piece = integrate_2d_product(g, chart.box[0], chart.box[1], cfg);
      }
    } catch (const IntegrandNaN &e) {
      const Coord x = chart.map(e.location());
      throw IntegrandNaN(std::string(e.what()) + " (x = " +
                             detail::coord_string(x, chart.dim) + ")",
                         x);
    }
    if (first) {
      total = std::move(piece);
      first = false;
    } else {
      total.value += piece.value;
      total.error += piece.error;
      total.evaluations += piece.evaluations;
    }
  }
  return total;
}

// Scalar conveniences.

template <class F>
ScalarIntegral integrate(F &&f, double lo, double hi, const QuadratureConfig &cfg = {}) {
  auto r = integrate_interval(
      [&](double x) {
        CVector v(1);
        v[0] = cplx(f(x));
        return v;
      },
      lo, hi, cfg);
  return {r.value[0], r.error, r.evaluations};
}

template <class F>
ScalarIntegral integrate(F &&f, const Domain &domain, Params p, const QuadratureConfig &cfg = {}) {
  auto r = integrate_domain(
      [&](const Coord &x) {
        CVector v(1);
        v[0] = cplx(f(x));
        return v;
      },
      domain, p, cfg);
  return {r.value[0], r.error, r.evaluations};
}

template <class F>
ScalarIntegral integrate_2d(F &&f, const Axis &ax, const Axis &ay,
                            const QuadratureConfig &cfg = {}) {
  auto r = integrate_2d_product(
      [&](double x, double y) {
        CVector v(1);
        v[0] = cplx(f(x, y));
        return v;
      },
      ax, ay, cfg);
  return {r.value[0], r.error, r.evaluations};
}

} // namespace qgeom
