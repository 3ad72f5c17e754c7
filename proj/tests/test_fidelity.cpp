#include "qgeom/qgeom.hpp"

#include <catch_amalgamated.hpp>

using namespace qgeom;
using Catch::Matchers::WithinAbs;

TEST_CASE("overlap at coincident points is the norm", "[fidelity]") {
  const auto &m = model("morse-like");
  const auto p = m.point({0.8, 1.4});
  CHECK_THAT(std::abs(overlap(m.system, p, p, {0, 0}).value), WithinAbs(1.0, 1e-12));
  CHECK(std::abs(overlap(m.system, p, m.point({0.9, 1.4}), {0, 0}).value) < 1.0);
}

TEST_CASE("susceptibility equals the metric for every model", "[fidelity]") {
  for (const auto &name : model_names()) {
    const auto &m = model(name);
    for (const auto &p : m.sample(2, 8)) {
      const auto r = fidelity_susceptibility(m.system, p, {0, 0});
      const RMatrix G = qmt(m.system, p, {0, 0});
      CHECK(max_abs(RMatrix(r.chi - G)) < 1e-4);
      CHECK(max_abs(RMatrix(r.chi - r.chi.transpose())) < 1e-14);
      CHECK(r.linear_term < 1e-3);
    }
  }
}

TEST_CASE("excited states", "[fidelity]") {
  const auto &m = model("anharmonic-1d");
  const auto p = m.point({1.0, 1.0});
  const auto r = fidelity_susceptibility(m.system, p, {2, 0});
  CHECK_THAT(r.chi(0, 1), WithinAbs(7.0 / 8.0, 1e-6));
}

TEST_CASE("Richardson extrapolation removes the delta^2 bias", "[fidelity]") {
  const auto &m = model("anharmonic-1d");
  const auto p = m.point({1.5, 0.7});
  SusceptibilityConfig raw;
  raw.extrapolation = Extrapolation::None;
  raw.residual_threshold = 1.0;
  const RMatrix G = qmt(m.system, p, {0, 0});
  const double e_raw = max_abs(RMatrix(fidelity_susceptibility(m.system, p, {0, 0}, raw).chi - G));
  const double e_ext = max_abs(RMatrix(fidelity_susceptibility(m.system, p, {0, 0}).chi - G));
  CHECK(e_ext < e_raw);
  CHECK(e_ext < 1e-7);
}

TEST_CASE("Neville extrapolation is exact on polynomials in h^2", "[fidelity]") {
  const std::vector<double> h{0.4, 0.2, 0.1};
  std::vector<double> s;
  for (double x : h) s.push_back(3.0 - 2.0 * x * x + 5.0 * x * x * x * x);
  CHECK_THAT(detail::extrapolate_h2(h, s).first, WithinAbs(3.0, 1e-12));
}

TEST_CASE("stencils that leave the domain are errors", "[fidelity]") {
  const auto &m = model("anharmonic-1d");
  CHECK_THROWS_AS(fidelity_susceptibility(m.system, m.point({1e-3, 1.0}), {0, 0}), DomainError);
  SusceptibilityConfig bad;
  bad.delta_steps = {};
  CHECK_THROWS_AS(fidelity_susceptibility(m.system, m.point({1.0, 1.0}), {0, 0}, bad), DomainError);
}

TEST_CASE("a failing fit is reported", "[fidelity]") {
  const auto &m = model("anharmonic-1d");
  SusceptibilityConfig strict;
  strict.delta_steps = {0.2, 0.1};
  strict.extrapolation = Extrapolation::None;
  strict.residual_threshold = 1e-12;
  CHECK_THROWS_AS(fidelity_susceptibility(m.system, m.point({1.0, 1.0}), {0, 0}, strict), FitError);
}
