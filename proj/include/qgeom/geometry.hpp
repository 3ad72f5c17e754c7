#pragma once

// Curved-space geometric tensors.
//
// Every quantity is assembled from a small set of curved brackets
// (integrals carrying sqrt(g)), evaluated together in one vector quadrature:
//
//   N0      = <psi|psi>
//   S_r     = <sigma_r>
//   D_r     = <psi|d_r psi>
//   B_rk    = <d_r psi|d_k psi>
//   C_rk    = <psi|sigma_r|d_k psi>
//   SS_rk   = <sigma_r sigma_k>
//
// sigma-weighted brackets are integrated with sigma inside the integrand,
// never factored into products of expectations.

#include "qgeom/core.hpp"
#include "qgeom/diffops.hpp"
#include "qgeom/quadrature.hpp"

#include <bit>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>

namespace qgeom {

struct EngineConfig {
  QuadratureConfig quad;
  FdConfig fd;
};

enum class BracketLevel { Connection, Full };

struct BracketSet {
  std::size_t m = 0;
  BracketLevel level = BracketLevel::Full;
  double N0 = 0.0;
  RVector S;
  CVector D;
  CMatrix B, C;
  RMatrix SS;
  double error = 0.0;
  long evaluations = 0;
};

/// Memoized bracket sets. Readers share; insertion takes the exclusive lock.
class BracketCache {
public:
  using Key = std::vector<std::uint64_t>;

  std::optional<BracketSet> find(const Key &k) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(k);
    if (it == entries_.end()) return std::nullopt;
    ++hits_;
    return it->second;
  }

  void insert(Key k, BracketSet value) {
    std::unique_lock lock(mutex_);
    entries_.emplace(std::move(k), std::move(value));
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }
  std::size_t hits() const { return hits_.load(); }
  void clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
  }

private:
  mutable std::shared_mutex mutex_;
  std::map<Key, BracketSet> entries_;
  mutable std::atomic<std::size_t> hits_{0};
};

namespace detail {

inline BracketCache::Key bracket_key(const System &sys, Params p, const QuantumNumber &n,
                                     const EngineConfig &cfg, BracketLevel level) {
  auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
  BracketCache::Key k{sys.id(), static_cast<std::uint64_t>(level),
                      static_cast<std::uint64_t>(static_cast<std::int64_t>(n[0])),
                      static_cast<std::uint64_t>(static_cast<std::int64_t>(n[1]))};
  for (double v : p) k.push_back(bits(v));
  k.insert(k.end(), {bits(cfg.quad.rel_tol), bits(cfg.quad.abs_tol),
                     static_cast<std::uint64_t>(cfg.quad.max_subdivisions),
                     static_cast<std::uint64_t>(cfg.quad.unbounded),
                     static_cast<std::uint64_t>(cfg.quad.max_de_level), bits(cfg.fd.base_step),
                     static_cast<std::uint64_t>(cfg.fd.scheme), cfg.fd.allow_one_sided,
                     cfg.fd.prefer_analytic});
  return k;
}

} // namespace detail

/// One quadrature pass producing every bracket the tensors need.
inline BracketSet compute_brackets(const System &sys, const ParameterPoint &lambda,
                                   const QuantumNumber &n, const EngineConfig &cfg = {},
                                   BracketLevel level = BracketLevel::Full,
                                   BracketCache *cache = nullptr) {
  sys.check_point(lambda);
  const Params p = lambda.span();
  std::optional<BracketCache::Key> key;
  if (cache) {
    key = detail::bracket_key(sys, p, n, cfg, level);
    if (auto hit = cache->find(*key)) return *hit;
  }

  const auto m = static_cast<Eigen::Index>(p.size());
  if (p.size() > kMaxParams)
    throw DimensionError("lambda", "at most " + std::to_string(kMaxParams) + " parameters");
  const bool full = level == BracketLevel::Full;
  const Eigen::Index size = 1 + 2 * m + (full ? 3 * m * m : 0);
  const Eigen::Index iS = 1, iD = 1 + m, iB = 1 + 2 * m, iC = iB + m * m, iSS = iC + m * m;

  auto integrand = [&](const Coord &x) -> CVector {
    CVector out = CVector::Zero(size);
    const cplx psi = sys.psi.eval(x, p, n);
    std::array<cplx, kMaxParams> dpsi{};
    bool any = psi != 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
      dpsi[static_cast<std::size_t>(r)] =
          d_psi(sys.psi, n, x, p, static_cast<std::size_t>(r), cfg.fd, sys.parameter_domain);
      any = any || dpsi[static_cast<std::size_t>(r)] != 0.0;
    }
    // vanishing state: skip the metric, which may overflow far out
    if (!any) return out;
    const double sg = sys.metric.sqrt_det(x, p);
    if (sg == 0.0) return out;
    if (!std::isfinite(sg) || sg < 0.0)
      throw DomainError("metric determinant invalid at x = " + detail::coord_string(x, sys.dim()));
    std::array<double, kMaxParams> sig{};
    for (Eigen::Index r = 0; r < m; ++r)
      sig[static_cast<std::size_t>(r)] =
          sigma(sys.metric, x, p, static_cast<std::size_t>(r), cfg.fd, sys.parameter_domain);

    const cplx psic = std::conj(psi);
    const double rho = std::norm(psi);
    out[0] = rho;
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto ur = static_cast<std::size_t>(r);
      out[iS + r] = sig[ur] * rho;
      out[iD + r] = psic * dpsi[ur];
    }
    if (full)
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index k = 0; k < m; ++k) {
          const auto ur = static_cast<std::size_t>(r), uk = static_cast<std::size_t>(k);
          out[iB + r * m + k] = std::conj(dpsi[ur]) * dpsi[uk];
          out[iC + r * m + k] = psic * sig[ur] * dpsi[uk];
          out[iSS + r * m + k] = sig[ur] * sig[uk] * rho;
        }
    return out * sg;
  };

  auto r = integrate_domain(integrand, sys.domain, p, cfg.quad);

  BracketSet b;
  b.m = p.size();
  b.level = level;
  b.N0 = r.value[0].real();
  b.S = r.value.segment(iS, m).real();
  b.D = r.value.segment(iD, m);
  if (full) {
    b.B.resize(m, m);
    b.C.resize(m, m);
    b.SS.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index k = 0; k < m; ++k) {
        b.B(i, k) = r.value[iB + i * m + k];
        b.C(i, k) = r.value[iC + i * m + k];
        b.SS(i, k) = r.value[iSS + i * m + k].real();
      }
  }
  b.error = r.error;
  b.evaluations = r.evaluations;
  if (cache) cache->insert(std::move(*key), b);
  return b;
}

// ---------------------------------------------------------------------------
// Tensors from brackets

/// Real part of beta and its imaginary residue <sigma>/4 - Re D.
struct Connection {
  RVector beta;
  RVector residue;
  double error = 0.0;
  std::string warning;
};

inline Connection connection_from(const BracketSet &b) {
  Connection c;
  c.beta = b.D.imag();
  c.residue = 0.25 * b.S - b.D.real();
  c.error = b.error;
  if (c.residue.size() && c.residue.cwiseAbs().maxCoeff() > 1e-6)
    c.warning = "Berry connection has imaginary residue " +
                std::to_string(c.residue.cwiseAbs().maxCoeff()) +
                "; check normalization or derivative steps";
  return c;
}

inline RMatrix gamma_from(const BracketSet &b) {
  const CMatrix Ct = b.C.transpose();
  return b.B.real() - 0.25 * (b.C + Ct).real() + b.SS / 16.0;
}

/// QMT assembled term by term from the symmetrized expression.
inline RMatrix qmt_from(const BracketSet &b) {
  const auto m = static_cast<Eigen::Index>(b.m);
  RMatrix g(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index k = 0; k < m; ++k) {
      const cplx Dr = b.D[r], Dk = b.D[k];
      const double Sr = b.S[r], Sk = b.S[k];
      cplx v = 0.5 * (b.B(r, k) + b.B(k, r));
      v -= 0.5 * (std::conj(Dr) * Dk + std::conj(Dk) * Dr);
      v -= 0.125 * (b.C(k, r) + b.C(r, k));
      v -= 0.125 * (std::conj(b.C(k, r)) + std::conj(b.C(r, k)));
      v += 0.125 * (Sr * Dk + Sk * Dr);
      v += 0.125 * (Sr * std::conj(Dk) + Sk * std::conj(Dr));
      v += b.SS(r, k) / 16.0 - Sr * Sk / 16.0;
      g(r, k) = v.real();
    }
  return g;
}

/// G_rk = <d_r phi|P|d_k phi> with phi = g^{1/4} psi, expanded in brackets.
inline CMatrix qgt_from(const BracketSet &b) {
  const auto m = static_cast<Eigen::Index>(b.m);
  CMatrix q(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index k = 0; k < m; ++k) {
      const cplx Dr = b.D[r], Dk = b.D[k];
      const double Sr = b.S[r], Sk = b.S[k];
      q(r, k) = b.B(r, k) - std::conj(Dr) * Dk - 0.25 * b.C(r, k) - 0.25 * std::conj(b.C(k, r)) +
                0.25 * Sr * Dk + 0.25 * Sk * std::conj(Dr) + b.SS(r, k) / 16.0 - Sr * Sk / 16.0;
    }
  return q;
}

/// Exterior derivative of beta, written out in brackets.
inline RMatrix curvature_from(const BracketSet &b) {
  const auto m = static_cast<Eigen::Index>(b.m);
  const cplx I(0.0, 1.0);
  RMatrix f(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index k = 0; k < m; ++k) {
      const cplx v = -I * (b.B(r, k) - b.B(k, r)) + 0.25 * I * (b.C(r, k) - b.C(k, r)) +
                     0.25 * I * (std::conj(b.C(k, r)) - std::conj(b.C(r, k)));
      f(r, k) = v.real();
    }
  return f;
}

inline GeometricTensors tensors_from(const BracketSet &b, std::vector<double> steps = {}) {
  if (b.level != BracketLevel::Full)
    throw Error("tensor assembly needs the full bracket set");
  GeometricTensors t;
  t.qgt = qgt_from(b);
  t.qmt = qmt_from(b);
  t.berry_curvature = curvature_from(b);
  const auto conn = connection_from(b);
  t.berry_connection = conn.beta;
  t.quad_error = b.error;
  t.fd_steps = std::move(steps);
  t.norm_deviation = std::abs(b.N0 - 1.0);
  t.connection_residue = conn.residue.size() ? conn.residue.cwiseAbs().maxCoeff() : 0.0;
  t.normalization_identity = 2.0 * t.connection_residue;
  t.hermiticity_residue = max_abs(CMatrix(t.qgt - t.qgt.adjoint()));
  return t;
}

/// qmt vs Re(qgt) and berry_curvature vs 2 Im(qgt).
struct RouteResidues {
  double metric = 0.0;
  double curvature = 0.0;
};

inline RouteResidues route_residues(const GeometricTensors &t) {
  return {max_abs(RMatrix(t.qmt - t.qgt.real())),
          max_abs(RMatrix(t.berry_curvature - 2.0 * t.qgt.imag()))};
}

// ---------------------------------------------------------------------------
// Public operations

inline std::vector<double> fd_steps_for(const System &sys, const ParameterPoint &lambda,
                                        const FdConfig &fd) {
  std::vector<double> steps;
  const bool analytic = fd.prefer_analytic && sys.psi.has_analytic_grad();
  for (std::size_t i = 0; i < lambda.size(); ++i) steps.push_back(analytic ? 0.0 : fd.step(lambda[i]));
  return steps;
}

/// Integral of sqrt(g) conj(phi) psi over the domain at lambda.
inline ScalarIntegral inner_product(const std::function<cplx(const Coord &)> &phi,
                                    const std::function<cplx(const Coord &)> &psi,
                                    const MetricFamily &metric, const Domain &domain,
                                    const ParameterPoint &lambda,
                                    const QuadratureConfig &cfg = {}) {
  const Params p = lambda.span();
  return integrate(
      [&](const Coord &x) -> cplx {
        const cplx v = std::conj(phi(x)) * psi(x);
        if (v == 0.0) return 0.0;
        return metric.sqrt_det(x, p) * v;
      },
      domain, p, cfg);
}

inline ScalarIntegral inner_product(const System &sys, const ParameterPoint &lambda,
                                    const QuantumNumber &m, const QuantumNumber &n,
                                    const QuadratureConfig &cfg = {}) {
  sys.check_point(lambda);
  const Params p = lambda.span();
  return inner_product([&](const Coord &x) { return sys.psi.eval(x, p, m); },
                       [&](const Coord &x) { return sys.psi.eval(x, p, n); }, sys.metric,
                       sys.domain, lambda, cfg);
}

inline double sigma_expectation(const System &sys, const ParameterPoint &lambda,
                                const QuantumNumber &n, std::size_t rho,
                                const EngineConfig &cfg = {}, BracketCache *cache = nullptr) {
  if (rho >= lambda.size()) throw DimensionError("rho", "parameter index out of range");
  return compute_brackets(sys, lambda, n, cfg, BracketLevel::Connection, cache).S[static_cast<Eigen::Index>(rho)];
}

inline Connection berry_connection(const System &sys, const ParameterPoint &lambda,
                                   const QuantumNumber &n, const EngineConfig &cfg = {},
                                   BracketCache *cache = nullptr) {
  return connection_from(compute_brackets(sys, lambda, n, cfg, BracketLevel::Connection, cache));
}

inline RMatrix gamma_tensor(const System &sys, const ParameterPoint &lambda,
                            const QuantumNumber &n, const EngineConfig &cfg = {},
                            BracketCache *cache = nullptr) {
  return gamma_from(compute_brackets(sys, lambda, n, cfg, BracketLevel::Full, cache));
}

inline RMatrix qmt(const System &sys, const ParameterPoint &lambda, const QuantumNumber &n,
                   const EngineConfig &cfg = {}, BracketCache *cache = nullptr) {
  return qmt_from(compute_brackets(sys, lambda, n, cfg, BracketLevel::Full, cache));
}

inline RMatrix berry_curvature(const System &sys, const ParameterPoint &lambda,
                               const QuantumNumber &n, const EngineConfig &cfg = {},
                               BracketCache *cache = nullptr) {
  return curvature_from(compute_brackets(sys, lambda, n, cfg, BracketLevel::Full, cache));
}

/// Full tensor bundle. Throws if the assembled QGT is not Hermitian to 1e-7.
inline GeometricTensors qgt(const System &sys, const ParameterPoint &lambda,
                            const QuantumNumber &n, const EngineConfig &cfg = {},
                            BracketCache *cache = nullptr) {
  auto t = tensors_from(compute_brackets(sys, lambda, n, cfg, BracketLevel::Full, cache),
                        fd_steps_for(sys, lambda, cfg.fd));
  if (t.hermiticity_residue > 1e-7)
    throw NumericalError("QGT hermiticity residue " + std::to_string(t.hermiticity_residue) +
                         " exceeds 1e-7");
  return t;
}

// ---------------------------------------------------------------------------
// Gauge transformations

/// psi -> exp(i alpha(lambda)) psi. With no alpha_grad, d alpha is differenced.
inline WavefunctionFamily
gauge_transform(const WavefunctionFamily &psi, std::function<double(Params)> alpha,
                std::function<double(Params, int)> alpha_grad = {}, FdConfig fd = {}) {
  if (!alpha) return psi;
  WavefunctionFamily out = psi;
  out.gauge_phase = alpha;
  const auto base = psi.eval;
  out.eval = [base, alpha](const Coord &x, Params p, const QuantumNumber &n) {
    return std::polar(1.0, alpha(p)) * base(x, p, n);
  };
  if (psi.has_analytic_grad()) {
    const auto grad = psi.param_grad;
    auto dalpha = alpha_grad ? alpha_grad : std::function<double(Params, int)>(
                                                [alpha, fd](Params p, int r) {
                                                  return fd_derivative<double>(
                                                      alpha, p, static_cast<std::size_t>(r),
                                                      ParameterDomain{}, fd);
                                                });
    out.param_grad = [base, grad, alpha, dalpha](const Coord &x, Params p,
                                                 const QuantumNumber &n, int r) {
      const cplx phase = std::polar(1.0, alpha(p));
      return phase * (grad(x, p, n, r) + cplx(0.0, dalpha(p, r)) * base(x, p, n));
    };
  }
  return out;
}

inline System gauge_transform(const System &sys, std::function<double(Params)> alpha,
                              std::function<double(Params, int)> alpha_grad = {},
                              FdConfig fd = {}) {
  return System(sys.metric, gauge_transform(sys.psi, std::move(alpha), std::move(alpha_grad), fd),
                sys.domain, sys.parameter_domain, sys.names, sys.hbar);
}

// ---------------------------------------------------------------------------
// Reparameterization lambda = f(lambda')

struct Reparameterization {
  std::vector<std::string> names;
  std::function<std::vector<double>(Params)> to_original;
  /// d lambda^a / d lambda'^rho (rows a, columns rho). Differenced when empty.
  std::function<RMatrix(Params)> jacobian;
};

inline RMatrix jacobian_at(const Reparameterization &f, Params lp, const FdConfig &fd = {}) {
  RMatrix J;
  if (f.jacobian) {
    J = f.jacobian(lp);
  } else {
    const auto m0 = static_cast<Eigen::Index>(f.to_original(lp).size());
    J.resize(m0, static_cast<Eigen::Index>(lp.size()));
    for (std::size_t r = 0; r < lp.size(); ++r)
      for (Eigen::Index a = 0; a < m0; ++a)
        J(a, static_cast<Eigen::Index>(r)) = fd_derivative<double>(
            [&](Params q) { return f.to_original(q)[static_cast<std::size_t>(a)]; }, lp, r,
            ParameterDomain{}, fd);
  }
  if (J.rows() != J.cols())
    throw DimensionError("jacobian", "reparameterization must preserve the parameter count");
  const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
  if (std::abs(J.determinant()) <= 1e-12 * std::pow(scale, static_cast<double>(J.rows())))
    throw DomainError("reparameterization Jacobian is singular");
  return J;
}

/// Pulled-back system with psi'(lambda') = psi(f(lambda')) and g'(x, lambda') = g(x, f(lambda')).
inline System reparameterize(const System &sys, const Reparameterization &f, FdConfig fd = {}) {
  if (!f.to_original) throw DomainError("reparameterization needs a map");
  auto to_orig = f.to_original;
  auto with_orig = [to_orig](Params lp, auto &&fn) {
    const auto l = to_orig(lp);
    return fn(Params(l));
  };

  WavefunctionFamily psi = sys.psi;
  const auto base_eval = sys.psi.eval;
  psi.eval = [=](const Coord &x, Params lp, const QuantumNumber &n) {
    return with_orig(lp, [&](Params l) { return base_eval(x, l, n); });
  };
  if (sys.psi.has_analytic_grad()) {
    const auto grad = sys.psi.param_grad;
    psi.param_grad = [=](const Coord &x, Params lp, const QuantumNumber &n, int r) {
      const RMatrix J = jacobian_at(f, lp, fd);
      return with_orig(lp, [&](Params l) {
        cplx s = 0.0;
        for (Eigen::Index a = 0; a < J.rows(); ++a)
          s += J(a, r) * grad(x, l, n, static_cast<int>(a));
        return s;
      });
    };
  }
  psi.gauge_phase = {};

  MetricFamily metric = sys.metric;
  const auto base_metric = sys.metric.eval;
  metric.eval = [=](const Coord &x, Params lp) {
    return with_orig(lp, [&](Params l) { return base_metric(x, l); });
  };
  if (sys.metric.log_det_grad) {
    const auto ldg = sys.metric.log_det_grad;
    metric.log_det_grad = [=](const Coord &x, Params lp, int r) {
      const RMatrix J = jacobian_at(f, lp, fd);
      return with_orig(lp, [&](Params l) {
        double s = 0.0;
        for (Eigen::Index a = 0; a < J.rows(); ++a)
          s += J(a, r) * ldg(x, l, static_cast<int>(a));
        return s;
      });
    };
  }

  Domain domain = sys.domain;
  const auto charts = sys.domain.charts;
  domain.charts = [=](Params lp) { return with_orig(lp, [&](Params l) { return charts(l); }); };

  ParameterDomain pd;
  const auto orig = sys.parameter_domain;
  pd.constraint = [=](Params lp) {
    return with_orig(lp, [&](Params l) { return orig.admissible(l); });
  };

  return System(std::move(metric), std::move(psi), std::move(domain), std::move(pd),
                f.names.empty() ? sys.names : f.names, sys.hbar);
}

/// Pull a rank-2 covariant tensor back: J^T T J.
inline RMatrix pull_back(const RMatrix &T, const RMatrix &J) { return J.transpose() * T * J; }

/// The connection evaluated directly on the pulled-back family, next to the
/// plain covector law J^T beta and the density-weighted law
/// |det J| (J^T beta - (i/2) d' ln|det J|).
struct ConnectionLawReport {
  RVector direct;
  RVector covector;
  CVector density_weighted;
  double covector_residual = 0.0;
  double density_residual = 0.0;
};

inline ConnectionLawReport connection_law_report(const System &sys, const Reparameterization &f,
                                                 const ParameterPoint &lambda_prime,
                                                 const QuantumNumber &n,
                                                 const EngineConfig &cfg = {}) {
  const System pulled = reparameterize(sys, f, cfg.fd);
  const auto lp = lambda_prime.span();
  const auto l = f.to_original(lp);
  const RMatrix J = jacobian_at(f, lp, cfg.fd);

  ConnectionLawReport rep;
  rep.direct = berry_connection(pulled, pulled.point(lambda_prime.values()), n, cfg).beta;
  const RVector beta = berry_connection(sys, sys.point(l), n, cfg).beta;
  rep.covector = J.transpose() * beta;

  const double detJ = std::abs(J.determinant());
  CVector dens(rep.covector.size());
  for (std::size_t r = 0; r < lp.size(); ++r) {
    const double dlog = fd_derivative<double>(
        [&](Params q) { return std::log(std::abs(jacobian_at(f, q, cfg.fd).determinant())); }, lp,
        r, ParameterDomain{}, cfg.fd);
    dens[static_cast<Eigen::Index>(r)] =
        detJ * cplx(rep.covector[static_cast<Eigen::Index>(r)], -0.5 * dlog);
  }
  rep.density_weighted = dens;
  rep.covector_residual = (rep.direct - rep.covector).cwiseAbs().maxCoeff();
  rep.density_residual = (rep.direct.cast<cplx>() - dens).cwiseAbs().maxCoeff();
  return rep;
}

// ---------------------------------------------------------------------------
// Berry phase along a closed polyline

inline double berry_phase_loop(const System &sys, std::vector<std::vector<double>> loop,
                               const QuantumNumber &n, const EngineConfig &cfg = {},
                               BracketCache *cache = nullptr) {
  if (loop.size() < 2) return 0.0;
  if (loop.front() != loop.back()) loop.push_back(loop.front());
  const std::size_t m = sys.num_params();
  for (const auto &v : loop) {
    if (v.size() != m) throw DimensionError("loop", "loop vertex has the wrong dimension");
    if (!sys.parameter_domain.admissible(v))
      throw DomainError("loop vertex outside the parameter domain");
  }

  QuadratureConfig path_cfg = cfg.quad;
  path_cfg.rel_tol = std::max(path_cfg.rel_tol, 1e-9);
  double phase = 0.0;
  for (std::size_t s = 0; s + 1 < loop.size(); ++s) {
    const auto &a = loop[s];
    const auto &b = loop[s + 1];
    if (a == b) continue;
    if (!sys.parameter_domain.admissible_segment(a, b))
      throw DomainError("loop segment leaves the parameter domain");
    auto integrand = [&](double t) -> CVector {
      std::vector<double> at(m);
      for (std::size_t i = 0; i < m; ++i) at[i] = a[i] + t * (b[i] - a[i]);
      const auto beta = berry_connection(sys, sys.point(at), n, cfg, cache).beta;
      double dot = 0.0;
      for (std::size_t i = 0; i < m; ++i) dot += beta[static_cast<Eigen::Index>(i)] * (b[i] - a[i]);
      CVector v(1);
      v[0] = dot;
      return v;
    };
    phase += adaptive_kronrod(integrand, 0.0, 1.0, path_cfg).value[0].real();
  }
  return phase;
}

} // namespace qgeom
