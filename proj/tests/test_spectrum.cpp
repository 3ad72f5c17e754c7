#include "qgeom/qgeom.hpp"

#include <catch_amalgamated.hpp>

using namespace qgeom;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<Eigenpair> solve(const ModelSpec &m, const ParameterPoint &p, std::size_t points, int k) {
  return eigensolve(build_hamiltonian(m, p, make_grid(m, p, points, k)), k);
}

} // namespace

TEST_CASE("anharmonic-1d is isospectral with the oscillator", "[spectrum]") {
  const auto &m = model("anharmonic-1d");
  for (auto v : std::vector<std::vector<double>>{{1, 1}, {2, 0.5}}) {
    const auto p = m.point(v);
    const auto e = solve(m, p, 2000, 4);
    for (int n = 0; n < 4; ++n)
      CHECK_THAT(e[static_cast<std::size_t>(n)].energy, WithinRel((n + 0.5) * v[1], 1e-4));
  }
}

TEST_CASE("morse-like and generalized spectra", "[spectrum]") {
  const auto &morse = model("morse-like");
  CHECK_THAT(solve(morse, morse.point({1, 1}), 2000, 1)[0].energy, WithinRel(0.5, 1e-4));
  CHECK_THAT(solve(morse, morse.point({-1, 2}), 2000, 1)[0].energy, WithinRel(1.0, 1e-4));
  const auto &gen = model("generalized-anharmonic");
  const auto e = solve(gen, gen.point({1, 0.5, 1}), 2000, 3);
  for (int n = 0; n < 3; ++n)
    CHECK_THAT(e[static_cast<std::size_t>(n)].energy, WithinRel((n + 0.5) * std::sqrt(0.75), 1e-4));
}

TEST_CASE("second-order convergence under refinement", "[spectrum]") {
  const auto m = flat_oscillator();
  const auto p = m.point({1.0});
  const double e1 = std::abs(solve(m, p, 1000, 1)[0].energy - 0.5);
  const double e2 = std::abs(solve(m, p, 2000, 1)[0].energy - 0.5);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("eigenvectors are W-orthonormal with small residuals", "[spectrum]") {
  const auto &m = model("anharmonic-1d");
  const auto p = m.point({1.3, 0.8});
  const auto dh = build_hamiltonian(m, p, make_grid(m, p, 1500, 4));
  const auto e = eigensolve(dh, 4);
  for (std::size_t a = 0; a < e.size(); ++a) {
    CHECK(e[a].residual < 1e-8);
    for (std::size_t b = 0; b < e.size(); ++b)
      CHECK_THAT(e[a].phi.dot(dh.weight.cwiseProduct(e[b].phi)), WithinAbs(a == b ? 1.0 : 0.0, 1e-10));
  }
  for (std::size_t a = 1; a < e.size(); ++a) CHECK(e[a].energy > e[a - 1].energy);
}

TEST_CASE("tridiagonal helpers", "[spectrum]") {
  RVector a(4), b(3);
  a << 2, 2, 2, 2;
  b << -1, -1, -1;
  // eigenvalues 2 - 2 cos(k pi / 5)
  CHECK(detail::sturm_count(a, b, 2.0 - 2.0 * std::cos(std::numbers::pi / 5) + 1e-9) == 1);
  CHECK(detail::sturm_count(a, b, 10.0) == 4);
  RVector rhs(4);
  rhs << 1, 0, 0, 1;
  const RVector x = detail::tridiagonal_solve(a, b, 0.0, rhs);
  CHECK_THAT(x[0], WithinAbs(1.0, 1e-14));
  CHECK_THAT(x[1], WithinAbs(1.0, 1e-14));
}

TEST_CASE("argument checks", "[spectrum]") {
  const auto &m = model("anharmonic-1d");
  const auto p = m.point({1, 1});
  const auto dh = build_hamiltonian(m, p, make_grid(m, p, 100, 1));
  CHECK(eigensolve(dh, 0).empty());
  CHECK_THROWS_AS(eigensolve(dh, 11), DomainError);
  CHECK_THROWS_AS(Grid1D::uniform(0, 1, 2), DomainError);
  CHECK_THROWS_AS(make_grid(model("coupled-anharmonic-2d"), model("coupled-anharmonic-2d").point({1, 1, 1, 1}), 100),
                  DomainError);
}

TEST_CASE("numerical family reproduces the analytic metric", "[spectrum]") {
  const auto &m = model("anharmonic-1d");
  const auto p = m.point({1.0, 1.0});
  const System sys = numerical_system(m, p);
  const RMatrix G = qmt(sys, p, {0, 0});
  CHECK(max_abs(RMatrix(G - RMatrix::Constant(2, 2, 0.125))) / 0.125 < 5e-3);
}

TEST_CASE("level crossings are refused", "[spectrum]") {
  // a deep symmetric double well has a nearly degenerate lowest pair
  ModelSpec m = flat_oscillator();
  m.name = "double-well";
  m.spectral->potential = [](double u, Params p) { return p[0] * (u * u - 9.0) * (u * u - 9.0); };
  m.spectral->extent = [](Params, int) { return 6.0; };
  NumericalFamilyConfig cfg;
  cfg.levels = 2;
  cfg.points = 1200;
  CHECK_THROWS_WITH(numerical_wavefunction_family(m, m.point({1.0}), cfg),
                    Catch::Matchers::ContainsSubstring("nearly degenerate"));
}
