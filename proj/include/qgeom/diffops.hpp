#pragma once

// Parameter derivatives by finite differences. Steps scale with |lambda_rho|
// and never leave the declared parameter domain unless one-sided stencils
// are explicitly requested.

#include "qgeom/core.hpp"

#include <sstream>

namespace qgeom {

enum class FdScheme { Central2, Central4, Richardson };

struct FdConfig {
  double base_step = 1e-4;
  FdScheme scheme = FdScheme::Central4;
  bool allow_one_sided = false;
  /// Use model-supplied derivatives when they exist.
  bool prefer_analytic = true;

  double step(double lambda) const { return base_step * std::max(1.0, std::abs(lambda)); }

  void validate() const {
    if (!(base_step > 0.0) || !std::isfinite(base_step))
      throw DomainError("finite-difference base_step must be positive");
  }
};

inline constexpr std::size_t kMaxParams = 8;

namespace detail {

using ParamBuffer = std::array<double, kMaxParams>;

inline ParamBuffer load(Params p) {
  if (p.size() > kMaxParams)
    throw DimensionError("lambda", "at most " + std::to_string(kMaxParams) + " parameters");
  ParamBuffer b{};
  std::copy(p.begin(), p.end(), b.begin());
  return b;
}

// Largest |offset| in units of h used by each scheme.
inline double reach(FdScheme s) { return s == FdScheme::Central2 ? 1.0 : 2.0; }

} // namespace detail

/// d f / d lambda_rho for f : Params -> T (double or cplx).
/// The stencil is checked against `domain`; a crossing throws DomainError
/// unless cfg.allow_one_sided is set.
template <class T, class F>
T fd_derivative(F &&f, Params lambda, std::size_t rho, const ParameterDomain &domain,
                const FdConfig &cfg) {
  cfg.validate();
  if (rho >= lambda.size()) throw DimensionError("rho", "parameter index out of range");
  const auto base = detail::load(lambda);
  const std::size_t m = lambda.size();
  const double h = cfg.step(lambda[rho]);

  auto shifted = [&](double offset) {
    auto b = base;
    b[rho] += offset;
    return b;
  };
  auto at = [&](double offset) -> T {
    auto b = shifted(offset);
    return f(Params(b.data(), m));
  };
  auto reachable = [&](double offset) {
    auto b = shifted(offset);
    return domain.admissible_segment(lambda, Params(b.data(), m));
  };

  const double r = detail::reach(cfg.scheme) * h;
  const bool fwd = reachable(r), bwd = reachable(-r);
  if (fwd && bwd) {
    switch (cfg.scheme) {
    case FdScheme::Central2:
      return (at(h) - at(-h)) / (2.0 * h);
    case FdScheme::Central4:
      return (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
    case FdScheme::Richardson: {
      // three central differences at 2h, h, h/2 combined to sixth order
      const T d1 = (at(2 * h) - at(-2 * h)) / (4.0 * h);
      const T d2 = (at(h) - at(-h)) / (2.0 * h);
      const T d3 = (at(0.5 * h) - at(-0.5 * h)) / h;
      const T e1 = (4.0 * d2 - d1) / 3.0;
      const T e2 = (4.0 * d3 - d2) / 3.0;
      return (16.0 * e2 - e1) / 15.0;
    }
    }
  }

  std::ostringstream msg;
  msg.precision(17);
  msg << "finite-difference stencil for parameter " << rho << " at " << lambda[rho]
      << " (step " << h << ") leaves the parameter domain";
  if (!cfg.allow_one_sided) {
    msg << "; enable one-sided differences explicitly to proceed";
    throw DomainError(msg.str());
  }
  // second-order one-sided stencil on whichever side is admissible
  const double s = fwd ? 1.0 : bwd ? -1.0 : 0.0;
  if (s == 0.0 || !reachable(2 * s * h)) throw DomainError(msg.str() + " on both sides");
  return s * (-3.0 * at(0.0) + 4.0 * at(s * h) - at(2 * s * h)) / (2.0 * h);
}

/// d psi_n / d lambda_rho at x, analytic when available and preferred.
inline cplx d_psi(const WavefunctionFamily &psi, const QuantumNumber &n, const Coord &x,
                  Params lambda, std::size_t rho, const FdConfig &cfg = {},
                  const ParameterDomain &domain = {}) {
  if (cfg.prefer_analytic && psi.has_analytic_grad())
    return psi.param_grad(x, lambda, n, static_cast<int>(rho));
  return fd_derivative<cplx>([&](Params p) { return psi.eval(x, p, n); }, lambda, rho, domain,
                             cfg);
}

/// d ln det g / d lambda_rho at x.
inline double d_log_det_g(const MetricFamily &metric, const Coord &x, Params lambda,
                          std::size_t rho, const FdConfig &cfg = {},
                          const ParameterDomain &domain = {}) {
  if (cfg.prefer_analytic && metric.log_det_grad)
    return metric.log_det_grad(x, lambda, static_cast<int>(rho));
  return fd_derivative<double>([&](Params p) { return std::log(metric.det(x, p)); }, lambda,
                               rho, domain, cfg);
}

/// sigma_rho = -d ln det g / d lambda_rho.
inline double sigma(const MetricFamily &metric, const Coord &x, Params lambda, std::size_t rho,
                    const FdConfig &cfg = {}, const ParameterDomain &domain = {}) {
  return -d_log_det_g(metric, x, lambda, rho, cfg, domain);
}

/// sigma_rho from the contraction g_{mu nu} d_rho g^{mu nu}, inverse metric differenced entrywise.
inline double sigma_contraction(const MetricFamily &metric, const Coord &x, Params lambda,
                                std::size_t rho, const FdConfig &cfg = {},
                                const ParameterDomain &domain = {}) {
  const SmallMatrix g = metric.eval(x, lambda);
  double total = 0.0;
  for (Eigen::Index mu = 0; mu < g.rows(); ++mu)
    for (Eigen::Index nu = 0; nu < g.cols(); ++nu) {
      const double dinv = fd_derivative<double>(
          [&](Params p) { return SmallMatrix(metric.eval(x, p).inverse())(mu, nu); }, lambda,
          rho, domain, cfg);
      total += g(mu, nu) * dinv;
    }
  return total;
}

} // namespace qgeom
