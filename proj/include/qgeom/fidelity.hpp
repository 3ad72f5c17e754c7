#pragma once

// Fidelity route to the metric: F(lambda + d, lambda) = |<phi(lambda+d)|phi(lambda)>|
// with phi = g^{1/4} psi, F ~ 1 - chi_rk d^r d^k / 2.

#include "qgeom/geometry.hpp"

namespace qgeom {

enum class Extrapolation { None, RichardsonDelta2 };

struct SusceptibilityConfig {
  std::vector<double> delta_steps{1e-2, 5e-3, 2.5e-3};
  Extrapolation extrapolation = Extrapolation::RichardsonDelta2;
  /// Displacements scale with max(1, |lambda_rho|), like derivative steps.
  bool scale_with_parameters = true;
  /// Largest tolerated disagreement between the last two extrapolants,
  /// relative to max(1, max|chi|).
  double residual_threshold = 1e-4;
  /// Overlaps are integrated at least this tightly.
  double overlap_rel_tol = 1e-13;

  void validate() const {
    if (delta_steps.empty()) throw DomainError("susceptibility needs at least one step");
    for (double d : delta_steps)
      if (!(d > 0.0)) throw DomainError("susceptibility steps must be positive");
  }
};

class FitError : public NumericalError {
public:
  FitError(const std::string &what, double residual) : NumericalError(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

/// <g^{1/4}(lambda') psi(lambda') | g^{1/4}(lambda) psi(lambda)>, integrated
/// on the charts of the base point lambda.
inline ScalarIntegral overlap(const System &sys, const ParameterPoint &lambda,
                              const ParameterPoint &shifted, const QuantumNumber &n,
                              const QuadratureConfig &cfg = {}) {
  sys.check_point(lambda);
  sys.check_point(shifted);
  const Params p = lambda.span(), q = shifted.span();
  return integrate(
      [&](const Coord &x) -> cplx {
        const cplx v = std::conj(sys.psi.eval(x, q, n)) * sys.psi.eval(x, p, n);
        if (v == 0.0) return 0.0;
        const double w = sys.metric.sqrt_det(x, p) * sys.metric.sqrt_det(x, q);
        return std::sqrt(w) * v;
      },
      sys.domain, p, cfg);
}

struct SusceptibilityResult {
  RMatrix chi;
  /// max |F(+d) - F(-d)| / (2 delta) over the stencil; vanishes at second order.
  double linear_term = 0.0;
  /// disagreement between the final and the previous extrapolant
  double residual = 0.0;
  long overlaps = 0;
};

namespace detail {

// Neville extrapolation of S(h) to h = 0, polynomial in h^2. Returns value and
// the change contributed by the last column.
inline std::pair<double, double> extrapolate_h2(const std::vector<double> &h,
                                                std::vector<double> s) {
  const std::size_t k = s.size();
  double last_change = 0.0;
  for (std::size_t level = 1; level < k; ++level)
    for (std::size_t i = k - 1; i >= level; --i) {
      const double a = h[i - level] * h[i - level], b = h[i] * h[i];
      const double next = (a * s[i] - b * s[i - 1]) / (a - b);
      if (i == k - 1) last_change = std::abs(next - s[i]);
      s[i] = next;
      if (i == level) break;
    }
  return {s[k - 1], last_change};
}

} // namespace detail

inline SusceptibilityResult fidelity_susceptibility(const System &sys,
                                                    const ParameterPoint &lambda,
                                                    const QuantumNumber &n,
                                                    const SusceptibilityConfig &scfg = {},
                                                    const EngineConfig &cfg = {}) {
  scfg.validate();
  sys.check_point(lambda);
  QuadratureConfig qc = cfg.quad;
  qc.rel_tol = std::min(qc.rel_tol, scfg.overlap_rel_tol);
  qc.abs_tol = std::min(qc.abs_tol, 1e-15);

  const std::size_t m = lambda.size();
  std::vector<double> scale(m, 1.0);
  if (scfg.scale_with_parameters)
    for (std::size_t i = 0; i < m; ++i) scale[i] = std::max(1.0, std::abs(lambda[i]));

  std::vector<double> steps = scfg.delta_steps;
  std::sort(steps.begin(), steps.end(), std::greater<>());

  SusceptibilityResult res;

  // S(v) = v^T chi v from the symmetric stencil along direction v
  auto quadratic_form = [&](const std::vector<double> &v) {
    std::vector<double> samples;
    for (double d : steps) {
      std::vector<double> plus(lambda.values()), minus(lambda.values());
      for (std::size_t i = 0; i < m; ++i) {
        plus[i] += d * v[i] * scale[i];
        minus[i] -= d * v[i] * scale[i];
      }
      if (!sys.parameter_domain.admissible_segment(minus, plus))
        throw DomainError("fidelity stencil leaves the parameter domain at step " +
                          std::to_string(d));
      const double fp = std::abs(overlap(sys, lambda, sys.point(plus), n, qc).value);
      const double fm = std::abs(overlap(sys, lambda, sys.point(minus), n, qc).value);
      res.overlaps += 2;
      samples.push_back((2.0 - fp - fm) / (d * d));
      res.linear_term = std::max(res.linear_term, std::abs(fp - fm) / (2.0 * d));
    }
    if (scfg.extrapolation == Extrapolation::None || samples.size() == 1) {
      const double r = samples.size() > 1 ? std::abs(samples.back() - samples[samples.size() - 2]) : 0.0;
      return std::make_pair(samples.back(), r);
    }
    return detail::extrapolate_h2(steps, samples);
  };

  RMatrix chi = RMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  double residual = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    std::vector<double> v(m, 0.0);
    v[r] = 1.0;
    const auto [s, e] = quadratic_form(v);
    const auto ri = static_cast<Eigen::Index>(r);
    chi(ri, ri) = s;
    residual = std::max(residual, e);
  }
  // polarization: chi_rk = (S(e_r + e_k) - S(e_r - e_k)) / 4
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t k = r + 1; k < m; ++k) {
      std::vector<double> vp(m, 0.0), vm(m, 0.0);
      vp[r] = vm[r] = 1.0;
      vp[k] = 1.0;
      vm[k] = -1.0;
      const auto [sp, ep] = quadratic_form(vp);
      const auto [sm, em] = quadratic_form(vm);
      const auto ri = static_cast<Eigen::Index>(r), ki = static_cast<Eigen::Index>(k);
      chi(ri, ki) = chi(ki, ri) = 0.25 * (sp - sm);
      residual = std::max(residual, 0.25 * (ep + em));
    }
  // undo the per-parameter displacement scaling
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t k = 0; k < m; ++k)
      chi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) /= scale[r] * scale[k];

  res.chi = chi;
  res.residual = residual;
  const double ref = std::max(1.0, max_abs(chi));
  if (residual > scfg.residual_threshold * ref)
    throw FitError("fidelity fit residual " + std::to_string(residual) + " exceeds threshold",
                   residual);
  return res;
}

} // namespace qgeom
