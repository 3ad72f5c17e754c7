#include "qgeom/qgeom.hpp"

#include <catch_amalgamated.hpp>

using namespace qgeom;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const double kPi = std::numbers::pi;
}

TEST_CASE("gaussian on the full line", "[quadrature]") {
  for (auto scheme : {UnboundedScheme::DoubleExponential, UnboundedScheme::MappedKronrod}) {
    QuadratureConfig cfg;
    cfg.unbounded = scheme;
    const auto r = integrate([](double x) { return std::exp(-x * x); }, -kInf, kInf, cfg);
    CHECK_THAT(r.value.real(), WithinRel(std::sqrt(kPi), 1e-12));
    CHECK(r.error < 1e-9);
  }
}

TEST_CASE("half lines and finite intervals", "[quadrature]") {
  CHECK_THAT(integrate([](double x) { return std::exp(-x); }, 0.0, kInf).value.real(),
             WithinRel(1.0, 1e-12));
  CHECK_THAT(integrate([](double x) { return std::exp(x); }, -kInf, 0.0).value.real(),
             WithinRel(1.0, 1e-12));
  CHECK_THAT(integrate([](double x) { return std::sin(x); }, 0.0, kPi).value.real(),
             WithinRel(2.0, 1e-12));
  // integrable endpoint singularity
  CHECK_THAT(integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0).value.real(),
             WithinRel(2.0, 1e-8));
}

TEST_CASE("linearity", "[quadrature]") {
  auto f = [](double x) { return std::exp(-x * x) * std::cos(x); };
  auto g = [](double x) { return x * x * std::exp(-std::abs(x)); };
  const double a = 1.7, b = -0.3;
  const double lhs = integrate([&](double x) { return a * f(x) + b * g(x); }, -kInf, kInf).value.real();
  const double rhs = a * integrate(f, -kInf, kInf).value.real() + b * integrate(g, -kInf, kInf).value.real();
  CHECK_THAT(lhs, WithinAbs(rhs, 1e-10));
}

TEST_CASE("even integrands: full line equals twice the half line", "[quadrature]") {
  auto f = [](double x) { return std::exp(-x * x * x * x) * (1.0 + x * x); };
  const double full = integrate(f, -kInf, kInf).value.real();
  const double half = integrate(f, 0.0, kInf).value.real();
  CHECK_THAT(full, WithinRel(2.0 * half, 1e-11));
}

TEST_CASE("zero integrand", "[quadrature]") {
  const auto r = integrate([](double) { return 0.0; }, -kInf, kInf);
  CHECK(r.value == cplx(0.0));
  CHECK(r.error == 0.0);
}

TEST_CASE("vector integrands share one pass", "[quadrature]") {
  auto f = [](double x) {
    CVector v(3);
    v << std::exp(-x * x), x * x * std::exp(-x * x), cplx(0.0, std::exp(-x * x));
    return v;
  };
  const auto r = integrate_interval(f, -kInf, kInf, {});
  CHECK_THAT(r.value[0].real(), WithinRel(std::sqrt(kPi), 1e-12));
  CHECK_THAT(r.value[1].real(), WithinRel(std::sqrt(kPi) / 2, 1e-12));
  CHECK_THAT(r.value[2].imag(), WithinRel(std::sqrt(kPi), 1e-12));
}

TEST_CASE("two dimensional product", "[quadrature]") {
  const auto r = integrate_2d([](double x, double y) { return std::exp(-x * x - 2 * y * y); },
                              Axis{-kInf, kInf}, Axis{0.0, kInf});
  CHECK_THAT(r.value.real(), WithinRel(std::sqrt(kPi) * 0.5 * std::sqrt(kPi / 2), 1e-10));
}

TEST_CASE("NaN integrands are reported with their location", "[quadrature]") {
  CHECK_THROWS_AS(integrate([](double x) { return x > 0.5 ? std::nan("") : 1.0; }, 0.0, 1.0),
                  IntegrandNaN);
}

TEST_CASE("coupled ground state is normalized on the wedge charts", "[quadrature]") {
  const auto &m = model("coupled-anharmonic-2d");
  for (const auto &p : m.sample(3, 21)) {
    const auto r = inner_product(m.system, p, {0, 0}, {0, 0});
    CHECK_THAT(r.value.real(), WithinAbs(1.0, 1e-8));
  }
}
