#pragma once

// 1-D Laplace-Beltrami eigenproblems on a flat chart u.
//
// In u the operator is -(hbar^2/2) (1/sqrt g) d_u (sqrt g g^uu d_u) + V. A
// cell-centred flux-form discretization gives a symmetric tridiagonal H and a
// diagonal weight W = du sqrt(g_uu), so H phi = E W phi. The k lowest pairs
// come from Sturm bisection and inverse iteration on W^{-1/2} H W^{-1/2}.

#include "qgeom/models.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <memory>

namespace qgeom {

struct Grid1D {
  std::vector<double> points; // cell centres, strictly increasing
  double spacing = 0.0;
  /// Zero-flux wall at the left edge (half-line charts); otherwise the
  /// state decays to zero just outside both ends.
  bool zero_flux_left = false;

  std::size_t size() const { return points.size(); }

  static Grid1D uniform(double lo, double hi, std::size_t n, bool zero_flux_left = false) {
    if (n < 3) throw DomainError("grid needs at least 3 points");
    if (!(hi > lo)) throw DomainError("grid bounds must be increasing");
    Grid1D g;
    g.spacing = (hi - lo) / static_cast<double>(n);
    g.zero_flux_left = zero_flux_left;
    g.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.points[i] = lo + (static_cast<double>(i) + 0.5) * g.spacing;
    return g;
  }
};

/// Grid in the model's flat chart wide enough for the lowest k levels.
inline Grid1D make_grid(const ModelSpec &model, const ParameterPoint &lambda, std::size_t points,
                        int k = 1, double widen = 1.0) {
  if (!model.spectral) throw DomainError(model.name + " has no 1-D spectral chart");
  const auto &c = *model.spectral;
  const double L = widen * c.extent(lambda.span(), k);
  return c.half_line ? Grid1D::uniform(0.0, L, points, true) : Grid1D::uniform(-L, L, points);
}

struct DiscreteHamiltonian {
  RVector diag;   // H_ii
  RVector off;    // H_{i,i+1}
  RVector weight; // W_ii
  Grid1D grid;
};

inline DiscreteHamiltonian build_hamiltonian(const ModelSpec &model, const ParameterPoint &lambda,
                                             const Grid1D &grid) {
  if (!model.spectral) throw DomainError(model.name + " has no 1-D spectral chart");
  model.system.check_point(lambda);
  const auto &c = *model.spectral;
  const Params p = lambda.span();
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double du = grid.spacing, h2 = 0.5 * model.hbar() * model.hbar();

  RVector s(n), kappa(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s[i] = c.sqrt_guu(grid.points[static_cast<std::size_t>(i)], p);
    if (!(s[i] > 0.0) || !std::isfinite(s[i]))
      throw DomainError("non-positive sqrt(g) on the grid at u = " +
                        std::to_string(grid.points[static_cast<std::size_t>(i)]));
    kappa[i] = 1.0 / s[i]; // sqrt(g) g^uu in one dimension
  }

  DiscreteHamiltonian dh;
  dh.grid = grid;
  dh.weight = du * s;
  dh.diag.resize(n);
  dh.off.resize(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double left = i > 0 ? 0.5 * (kappa[i - 1] + kappa[i]) : grid.zero_flux_left ? 0.0 : kappa[i];
    const double right = i + 1 < n ? 0.5 * (kappa[i] + kappa[i + 1]) : kappa[i];
    dh.diag[i] = h2 * (left + right) / du +
                 c.potential(grid.points[static_cast<std::size_t>(i)], p) * dh.weight[i];
    if (i + 1 < n) dh.off[i] = -h2 * right / du;
  }
  return dh;
}

struct Eigenpair {
  double energy = 0.0;
  RVector phi; // W-normalized
  double residual = 0.0;
};

namespace detail {

// Number of eigenvalues of the symmetric tridiagonal (a, b) below x.
inline std::size_t sturm_count(const RVector &a, const RVector &b, double x) {
  std::size_t count = 0;
  double d = 1.0;
  constexpr double tiny = 1e-300;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double bb = i > 0 ? b[i - 1] * b[i - 1] : 0.0;
    d = a[i] - x - (i > 0 ? bb / d : 0.0);
    if (d == 0.0) d = -tiny;
    if (d < 0.0) ++count;
  }
  return count;
}

// Solve (T - shift) x = rhs for symmetric tridiagonal T, partial pivoting.
inline RVector tridiagonal_solve(const RVector &a, const RVector &b, double shift, RVector rhs) {
  const Eigen::Index n = a.size();
  // rows hold (d, u1, u2) after elimination; l is the sub-diagonal entry
  RVector d(n), u1 = RVector::Zero(n), u2 = RVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = a[i] - shift;
  for (Eigen::Index i = 0; i + 1 < n; ++i) u1[i] = b[i];
  RVector lower = b; // entry (i+1, i)
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    double next_d = d[i + 1], next_u1 = i + 2 < n ? b[i + 1] : 0.0, next_u2 = 0.0;
    if (std::abs(lower[i]) > std::abs(d[i])) {
      // swap rows i and i+1
      std::swap(d[i], lower[i]);
      std::swap(u1[i], next_d);
      std::swap(u2[i], next_u1);
      std::swap(rhs[i], rhs[i + 1]);
    }
    if (d[i] == 0.0) d[i] = 1e-300;
    const double f = lower[i] / d[i];
    d[i + 1] = next_d - f * u1[i];
    u1[i + 1] = next_u1 - f * u2[i];
    u2[i + 1] = next_u2;
    rhs[i + 1] -= f * rhs[i];
  }
  if (d[n - 1] == 0.0) d[n - 1] = 1e-300;
  RVector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double v = rhs[i];
    if (i + 1 < n) v -= u1[i] * x[i + 1];
    if (i + 2 < n) v -= u2[i] * x[i + 2];
    x[i] = v / d[i];
  }
  return x;
}

} // namespace detail

/// The k lowest eigenpairs of H phi = E W phi, W-orthonormal.
inline std::vector<Eigenpair> eigensolve(const DiscreteHamiltonian &dh, int k,
                                         int max_iterations = 12) {
  if (k < 0 || k > 10) throw DomainError("eigensolve supports 0 <= k <= 10");
  std::vector<Eigenpair> out;
  if (k == 0) return out;
  const Eigen::Index n = dh.diag.size();
  if (k > n) throw DomainError("more eigenpairs requested than grid points");

  const RVector isw = dh.weight.cwiseSqrt().cwiseInverse();
  const RVector a = dh.diag.cwiseProduct(isw).cwiseProduct(isw);
  RVector b(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) b[i] = dh.off[i] * isw[i] * isw[i + 1];

  // Gershgorin bounds
  double lo = kInf, hi = -kInf;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(b[i - 1]) : 0.0) + (i + 1 < n ? std::abs(b[i]) : 0.0);
    lo = std::min(lo, a[i] - r);
    hi = std::max(hi, a[i] + r);
  }
  const double norm = std::max(std::abs(lo), std::abs(hi));

  std::vector<RVector> basis;
  for (int j = 0; j < k; ++j) {
    double l = lo, h = hi;
    while (h - l > 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(l), std::abs(h)) &&
           h - l > 1e-300) {
      const double mid = 0.5 * (l + h);
      if (mid <= l || mid >= h) break;
      if (detail::sturm_count(a, b, mid) > static_cast<std::size_t>(j))
        h = mid;
      else
        l = mid;
    }
    const double e = 0.5 * (l + h);

    // inverse iteration, orthogonalized against lower levels
    RVector v = RVector::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] += 1e-3 * std::sin(0.37 * static_cast<double>(i + j));
    v.normalize();
    const double shift = e + 1e-14 * norm;
    double res = kInf;
    int it = 0;
    for (; it < max_iterations; ++it) {
      v = detail::tridiagonal_solve(a, b, shift, v);
      for (const auto &u : basis) v -= u.dot(v) * u;
      v.normalize();
      RVector av = a.cwiseProduct(v);
      av.head(n - 1) += b.cwiseProduct(v.tail(n - 1));
      av.tail(n - 1) += b.cwiseProduct(v.head(n - 1));
      res = (av - e * v).norm();
      if (it >= 1 && res <= 1e-13 * std::max(1.0, norm)) break;
    }
    if (!(res <= 1e-10 * std::max(1.0, norm)))
      throw NumericalError("inverse iteration for level " + std::to_string(j) +
                           " did not converge after " + std::to_string(max_iterations) +
                           " iterations");
    basis.push_back(v);

    Eigenpair ep;
    ep.energy = e;
    ep.phi = isw.cwiseProduct(v);
    // deterministic sign: first significant entry positive
    const double peak = ep.phi.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(ep.phi[i]) > 1e-3 * peak) {
        if (ep.phi[i] < 0.0) ep.phi = -ep.phi;
        break;
      }
    RVector hphi = dh.diag.cwiseProduct(ep.phi);
    hphi.head(n - 1) += dh.off.cwiseProduct(ep.phi.tail(n - 1));
    hphi.tail(n - 1) += dh.off.cwiseProduct(ep.phi.head(n - 1));
    const RVector wphi = dh.weight.cwiseProduct(ep.phi);
    ep.residual = (hphi - e * wphi).norm() / wphi.norm();
    out.push_back(std::move(ep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Numerical wavefunction family

struct NumericalFamilyConfig {
  std::size_t points = 2000;
  /// Levels solved at every parameter point (must exceed the largest n used).
  int levels = 3;
  /// Grid half-width relative to the extent at the base point.
  double widen = 1.25;
  /// Adjacent levels closer than this (relative to max(1, |E|)) are rejected.
  double gap_threshold = 1e-6;
};

namespace detail {

struct SolvedLevels {
  std::vector<double> energies;
  std::vector<boost::math::interpolators::cardinal_cubic_b_spline<double>> splines;
};

} // namespace detail

/// Interpolating family built from eigenvectors on a grid fixed at lambda0.
/// Each new parameter point triggers one eigensolve; results are cached.
inline WavefunctionFamily numerical_wavefunction_family(const ModelSpec &model,
                                                        const ParameterPoint &lambda0,
                                                        const NumericalFamilyConfig &cfg = {}) {
  if (!model.spectral) throw DomainError(model.name + " has no 1-D spectral chart");
  if (cfg.levels < 1 || cfg.levels > 10) throw DomainError("levels must be in [1, 10]");

  struct State {
    ModelSpec model;
    Grid1D grid;
    NumericalFamilyConfig cfg;
    std::vector<RVector> reference;
    RVector reference_weight;
    std::mutex mutex;
    std::map<std::vector<std::uint64_t>, std::shared_ptr<const detail::SolvedLevels>> cache;

    std::shared_ptr<const detail::SolvedLevels> solve(Params p) {
      std::vector<std::uint64_t> key;
      for (double v : p) key.push_back(std::bit_cast<std::uint64_t>(v));
      std::lock_guard lock(mutex);
      if (auto it = cache.find(key); it != cache.end()) return it->second;

      const auto lam = model.point(std::vector<double>(p.begin(), p.end()));
      const auto dh = build_hamiltonian(model, lam, grid);
      auto pairs = eigensolve(dh, cfg.levels);
      auto solved = std::make_shared<detail::SolvedLevels>();
      for (std::size_t j = 0; j < pairs.size(); ++j) {
        if (j + 1 < pairs.size()) {
          const double gap = pairs[j + 1].energy - pairs[j].energy;
          if (gap < cfg.gap_threshold * std::max(1.0, std::abs(pairs[j].energy)))
            throw NumericalError("levels " + std::to_string(j) + " and " + std::to_string(j + 1) +
                                 " are nearly degenerate (gap " + std::to_string(gap) + ")");
        }
        RVector &phi = pairs[j].phi;
        if (!reference.empty()) {
          const double o = (reference_weight.cwiseProduct(reference[j])).dot(phi);
          if (std::abs(o) < 0.5)
            throw NumericalError("phase alignment failed for level " + std::to_string(j) +
                                 "; it mixes with a neighbouring level");
          if (o < 0.0) phi = -phi;
        }
        solved->energies.push_back(pairs[j].energy);
        solved->splines.push_back(make_spline(phi));
      }
      if (reference.empty()) {
        for (const auto &e : pairs) reference.push_back(e.phi);
        reference_weight = dh.weight;
      }
      cache.emplace(std::move(key), solved);
      return solved;
    }

    boost::math::interpolators::cardinal_cubic_b_spline<double> make_spline(const RVector &phi) const {
      const auto n = static_cast<std::size_t>(phi.size());
      if (!grid.zero_flux_left)
        return {phi.data(), n, grid.points.front(), grid.spacing};
      // even extension across the wall
      std::vector<double> ext(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        ext[n + i] = phi[static_cast<Eigen::Index>(i)];
        ext[n - 1 - i] = phi[static_cast<Eigen::Index>(i)];
      }
      return {ext.data(), ext.size(), -grid.points.back(), grid.spacing};
    }

    double value(double u, Params p, int level) {
      const double lo = grid.zero_flux_left ? -grid.points.back() : grid.points.front();
      const double hi = grid.points.back();
      const double au = grid.zero_flux_left ? std::abs(u) : u;
      if (au < lo || au > hi) return 0.0;
      const auto s = solve(p);
      if (level < 0 || level >= static_cast<int>(s->splines.size()))
        throw DomainError("numerical family holds levels below " + std::to_string(s->splines.size()));
      return s->splines[static_cast<std::size_t>(level)](au);
    }
  };

  auto state = std::make_shared<State>();
  state->model = model;
  state->cfg = cfg;
  state->grid = make_grid(model, lambda0, cfg.points, cfg.levels, cfg.widen);
  state->solve(lambda0.span());

  WavefunctionFamily psi;
  psi.dim = 1;
  psi.eval = [state](const Coord &x, Params p, const QuantumNumber &n) -> cplx {
    const double u = state->model.spectral->to_u(x[0], p);
    return state->value(u, p, n[0]);
  };
  return psi;
}

/// The model with its closed-form states replaced by the numerical family.
inline System numerical_system(const ModelSpec &model, const ParameterPoint &lambda0,
                               const NumericalFamilyConfig &cfg = {}) {
  const auto &s = model.system;
  return System(s.metric, numerical_wavefunction_family(model, lambda0, cfg), s.domain,
                s.parameter_domain, s.names, s.hbar);
}

} // namespace qgeom
