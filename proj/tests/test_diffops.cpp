#include "qgeom/qgeom.hpp"

#include <catch_amalgamated.hpp>

using namespace qgeom;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("schemes converge at their order", "[diffops]") {
  auto f = [](Params p) { return std::sin(p[0]) * std::exp(0.5 * p[0]); };
  const double x0 = 0.7;
  const double exact = std::cos(x0) * std::exp(0.5 * x0) + 0.5 * std::sin(x0) * std::exp(0.5 * x0);
  const std::vector<double> at{x0};
  auto err = [&](FdScheme s, double h) {
    FdConfig cfg;
    cfg.scheme = s;
    cfg.base_step = h;
    return std::abs(fd_derivative<double>(f, at, 0, ParameterDomain{}, cfg) - exact);
  };
  // halving h divides the error by 2^order
  CHECK(err(FdScheme::Central2, 1e-2) / err(FdScheme::Central2, 5e-3) > 3.8);
  CHECK(err(FdScheme::Central4, 4e-2) / err(FdScheme::Central4, 2e-2) > 15.0);
  CHECK(err(FdScheme::Richardson, 1e-1) / err(FdScheme::Richardson, 5e-2) > 50.0);
  CHECK(err(FdScheme::Central4, 1e-3) < 1e-11);
}

TEST_CASE("complex-valued functions", "[diffops]") {
  auto f = [](Params p) { return std::polar(1.0, 2.0 * p[0]); };
  const std::vector<double> at{0.3};
  const cplx d = fd_derivative<cplx>(f, at, 0, ParameterDomain{}, FdConfig{});
  CHECK_THAT(std::abs(d - cplx(0.0, 2.0) * f(at)), WithinAbs(0.0, 1e-10));
}

TEST_CASE("stencils never cross the domain boundary silently", "[diffops]") {
  ParameterDomain pd{{ParameterRange::positive()}, {}};
  const std::vector<double> at{1e-5};
  auto f = [](Params p) { return std::sqrt(p[0]); };
  CHECK_THROWS_AS(fd_derivative<double>(f, at, 0, pd, FdConfig{}), DomainError);

  FdConfig one_sided;
  one_sided.allow_one_sided = true;
  one_sided.base_step = 1e-7;
  const double d = fd_derivative<double>(f, at, 0, pd, one_sided);
  CHECK_THAT(d, WithinRel(0.5 / std::sqrt(1e-5), 1e-3));
}

TEST_CASE("steps scale with the parameter", "[diffops]") {
  FdConfig cfg;
  CHECK(cfg.step(0.5) == cfg.base_step);
  CHECK(cfg.step(-20.0) == 20.0 * cfg.base_step);
}

TEST_CASE("too many parameters are rejected", "[diffops]") {
  const std::vector<double> at(kMaxParams + 1, 1.0);
  CHECK_THROWS_AS(fd_derivative<double>([](Params) { return 0.0; }, at, 0, ParameterDomain{}, FdConfig{}),
                  DimensionError);
}

TEST_CASE("sigma from the log determinant and from the inverse metric agree", "[diffops]") {
  const auto &m = model("anharmonic-1d");
  const std::vector<double> p{1.3, 0.8};
  for (double x : {-1.4, 0.2, 2.5}) {
    const Coord c{x, 0.0};
    const double a = sigma(m.system.metric, c, p, 0);
    CHECK_THAT(a, WithinAbs(-1.0 / 1.3, 1e-12));
    CHECK_THAT(sigma_contraction(m.system.metric, c, p, 0), WithinAbs(a, 1e-8));
    CHECK_THAT(sigma(m.system.metric, c, p, 1), WithinAbs(0.0, 1e-14));
  }
}

TEST_CASE("analytic and differenced state derivatives agree", "[diffops]") {
  for (const std::string name : {"anharmonic-1d", "morse-like", "generalized-anharmonic"}) {
    const auto &m = model(name);
    const auto p = m.sample(1, 3).front();
    FdConfig numeric;
    numeric.prefer_analytic = false;
    numeric.scheme = FdScheme::Richardson;
    numeric.base_step = 1e-3;
    for (double x : {-0.9, 0.4, 1.1}) {
      const Coord c{x, 0.0};
      for (std::size_t r = 0; r < p.size(); ++r) {
        const cplx a = d_psi(m.system.psi, {0, 0}, c, p.span(), r);
        const cplx n = d_psi(m.system.psi, {0, 0}, c, p.span(), r, numeric);
        CHECK(std::abs(a - n) < 1e-8);
      }
    }
  }
}
