// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Tolerances are fixed here; sub-checks are listed above each verdict.

#include "qgeom/qgeom.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

using namespace qgeom;

namespace {

struct Check {
  std::string name;
  double value;
  double tol;
  bool pass;
};

struct Criterion {
  int id;
  std::string title;
  std::vector<Check> checks;

  void at_most(const std::string &name, double v, double tol) {
    checks.push_back({name, v, tol, std::isfinite(v) && v <= tol});
  }
  void above(const std::string &name, double v, double bound) {
    checks.push_back({name, v, bound, std::isfinite(v) && v > bound});
  }
  void error(const std::string &name, const std::exception &e) {
    checks.push_back({name + " threw: " + e.what(), NAN, 0.0, false});
  }
  bool passed() const {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.pass; });
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double rel_max(const RMatrix &a, const RMatrix &b) {
  return max_abs(RMatrix(a - b)) / std::max(1e-300, max_abs(b));
}

std::string describe_point(const std::vector<double> &v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s + ")";
}

const std::vector<std::string> kModels{"anharmonic-1d", "morse-like", "coupled-anharmonic-2d",
                                       "generalized-anharmonic"};

Criterion anharmonic_metric() {
  Criterion c{1, "anharmonic-1d metric and degeneracy", {}};
  const auto &m = model("anharmonic-1d");
  for (auto [l, w] : std::vector<std::pair<double, double>>{{1, 1}, {2, 0.5}, {0.5, 3}})
    for (int n = 0; n <= 2; ++n) {
      const std::string tag = "n=" + std::to_string(n) + " (" + fmt(l) + "," + fmt(w) + ")";
      try {
        const auto p = m.point({l, w});
        const RMatrix G = qmt(m.system, p, {n, 0});
        RMatrix ref(2, 2);
        ref << 1 / (8 * l * l), 1 / (8 * l * w), 1 / (8 * l * w), 1 / (8 * w * w);
        ref *= n * n + n + 1;
        c.at_most("G rel err " + tag, rel_max(G, ref), 1e-6);
        c.at_most("|det G| " + tag, std::abs(G.determinant()), 1e-10);
      } catch (const std::exception &e) {
        c.error(tag, e);
      }
    }
  return c;
}

Criterion morse_metric() {
  Criterion c{2, "morse-like metric, closed form, critical omega, dual route", {}};
  const auto &m = model("morse-like");
  try {
    for (double w : {0.5, 1.0, 2.0}) {
      const RMatrix G = qmt(m.system, m.point({1.0, w}), {0, 0});
      const double ref = 1 / (8 * w * w);
      c.at_most("G_ww rel err omega=" + fmt(w), std::abs(G(1, 1) - ref) / ref, 1e-6);
    }
    const RMatrix G = qmt(m.system, m.point({1.0, 1.0}), {0, 0});
    const double ref = morse_qmt_lambda_lambda(1.0, 1.0, 1.0);
    c.at_most("G_ll vs closed form rel err", std::abs(G(0, 0) - ref) / ref, 1e-4);

    const double w0 = morse_critical_omega(m, 1.0, 0.9, 1.2);
    std::printf("  omega_0 = %.8f\n", w0);
    c.at_most("|omega_0 - 1.037|", std::abs(w0 - 1.037), 1e-3);

    const auto chi = fidelity_susceptibility(m.system, m.point({1.0, 1.0}), {0, 0}).chi;
    c.at_most("G_lw dual-route |chi - G|", std::abs(chi(0, 1) - G(0, 1)), 1e-4);
  } catch (const std::exception &e) {
    c.error("morse", e);
  }
  return c;
}

Criterion generalized_tensors() {
  Criterion c{3, "generalized-anharmonic QMT, reference curvature, degeneracy", {}};
  const auto &m = model("generalized-anharmonic");
  for (auto v : std::vector<std::vector<double>>{{1, 0, 1}, {1, 0.5, 1}, {2, 0.3, 1}})
    for (int n = 0; n <= 1; ++n) {
      const std::string tag = "n=" + std::to_string(n) + " (" + fmt(v[0]) + "," + fmt(v[1]) + "," + fmt(v[2]) + ")";
      try {
        const auto p = m.point(v);
        const auto t = qgt(m.system, p, {n, 0});
        const auto Gref = std::get<RMatrix>(analytic_reference(m, Quantity::Qmt, n, p));
        const auto Fref = std::get<RMatrix>(analytic_reference(m, Quantity::BerryCurvature, n, p));
        c.at_most("QMT abs err " + tag, max_abs(RMatrix(t.qmt - Gref)), 1e-6);
        c.at_most("F vs reference abs err " + tag, max_abs(RMatrix(t.berry_curvature - Fref)), 1e-6);
        Eigen::JacobiSVD<RMatrix> svd(t.qmt);
        c.at_most("smallest singular value " + tag, svd.singularValues().minCoeff(), 1e-8);
      } catch (const std::exception &e) {
        c.error(tag, e);
      }
    }
  return c;
}

Criterion coupled_properties() {
  Criterion c{4, "coupled-anharmonic-2d properties", {}};
  const auto &m = model("coupled-anharmonic-2d");
  try {
    for (const auto &p : m.sample(5, 4)) {
      const double norm = inner_product(m.system, p, {0, 0}, {0, 0}).value.real();
      c.at_most("|norm - 1|", std::abs(norm - 1.0), 1e-6);

      const RMatrix G = qmt(m.system, p, {0, 0});
      const auto swapped = m.point({p[0], p[1], p[3], p[2]});
      RMatrix Gs = qmt(m.system, swapped, {0, 0});
      Eigen::PermutationMatrix<4> P;
      P.indices() << 0, 1, 3, 2;
      c.at_most("a<->b exchange", max_abs(RMatrix(P * Gs * P.transpose() - G)), 1e-5);
      c.at_most("|det G| (4x4)", std::abs(G.determinant()), 1e-8);
      c.above("fixed-b subdeterminant", G.topLeftCorner(3, 3).determinant(), 0.0);
    }
    std::vector<double> scaled;
    double prev_gab = kInf;
    bool shrinking = true;
    const double k1 = 1.5;
    for (double k2 : {1e-2, 1e-3, 1e-4}) {
      const RMatrix G = qmt(m.system, m.point({k1, k2, 1.0, 1.0}), {0, 0});
      shrinking = shrinking && std::abs(G(2, 3)) < prev_gab;
      prev_gab = std::abs(G(2, 3));
      scaled.push_back(k1 * k1 * G(0, 0));
    }
    c.at_most("|G_ab| at k2=1e-4", prev_gab, 1e-3);
    c.at_most("G_ab not shrinking (0 = shrinking)", shrinking ? 0.0 : 1.0, 0.0);
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    c.at_most("k1^2 G_k1k1 spread", (*hi - *lo) / std::abs(*lo), 0.02);
  } catch (const std::exception &e) {
    c.error("coupled", e);
  }
  return c;
}

Criterion route_equivalence() {
  Criterion c{5, "fidelity susceptibility equals the metric", {}};
  for (const auto &name : kModels) {
    const auto &m = model(name);
    try {
      for (const auto &p : m.sample(5, 5)) {
        const RMatrix G = qmt(m.system, p, {0, 0});
        const RMatrix chi = fidelity_susceptibility(m.system, p, {0, 0}).chi;
        c.at_most("|chi - G|max " + name, max_abs(RMatrix(chi - G)), 1e-4);
      }
    } catch (const std::exception &e) {
      c.error(name, e);
    }
  }
  return c;
}

Criterion spectra() {
  Criterion c{6, "Laplace-Beltrami spectra", {}};
  auto run = [&](const std::string &name, std::vector<double> v, int k) {
    const auto &m = model(name);
    const auto p = m.point(v);
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const auto grid = make_grid(m, p, 2000, k);
      const auto pairs = eigensolve(build_hamiltonian(m, p, grid), k);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      c.at_most("solve seconds " + name, secs, 10.0);
      for (int n = 0; n < k; ++n) {
        const double ref = m.energy(n, p.span());
        c.at_most(name + " E_" + std::to_string(n) + " rel err at " + describe_point(v),
                  std::abs(pairs[static_cast<std::size_t>(n)].energy - ref) / ref, 1e-4);
      }
    } catch (const std::exception &e) {
      c.error(name, e);
    }
  };
  run("anharmonic-1d", {1, 1}, 4);
  run("anharmonic-1d", {2, 0.5}, 4);
  run("morse-like", {1, 1}, 1);
  run("morse-like", {0.5, 2}, 1);
  run("generalized-anharmonic", {1, 0.5, 1}, 3);
  run("generalized-anharmonic", {1, 0, 1}, 3);
  run("generalized-anharmonic", {2, 0.3, 1.5}, 3);
  return c;
}

// Points on which a metric can be evaluated: one per chart, inside its box.
std::vector<Coord> probe_points(const System &sys, Params p) {
  auto inside = [](const Axis &a, double offset) {
    if (std::isfinite(a.lo) && std::isfinite(a.hi)) return a.lo + (0.3 + 0.4 * offset) * (a.hi - a.lo);
    if (std::isfinite(a.lo)) return a.lo + 0.4 + offset;
    if (std::isfinite(a.hi)) return a.hi - 0.4 - offset;
    return 0.3 + offset;
  };
  std::vector<Coord> out;
  for (const auto &chart : sys.domain.pieces(p))
    for (double off : {0.0, 0.5}) {
      Coord u{inside(chart.box[0], off), chart.dim > 1 ? inside(chart.box[1], 0.5 - off) : 0.0};
      out.push_back(chart.map(u));
    }
  return out;
}

Criterion properties() {
  Criterion c{7, "property suite", {}};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<> U(-2.0, 2.0);

  for (const auto &name : kModels) {
    const auto &m = model(name);
    try {
      const auto p = m.sample(1, 11).front();
      const auto t = qgt(m.system, p, {0, 0});
      double g_dev = 0.0, shift_dev = 0.0;
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(p.size() + 1);
        for (auto &v : a) v = U(rng);
        auto alpha = [a](Params q) {
          double s = a.back();
          for (std::size_t i = 0; i < q.size(); ++i) s += a[i] * std::sin((1.0 + i) * q[i]) + 0.1 * a[i] * q[i] * q[i];
          return s;
        };
        auto dalpha = [a](Params q, int r) {
          const auto i = static_cast<std::size_t>(r);
          return a[i] * (1.0 + i) * std::cos((1.0 + i) * q[i]) + 0.2 * a[i] * q[i];
        };
        const System g = gauge_transform(m.system, alpha, dalpha);
        const auto tg = qgt(g, g.point(p.values()), {0, 0});
        g_dev = std::max({g_dev, max_abs(RMatrix(tg.qmt - t.qmt)),
                          max_abs(RMatrix(tg.berry_curvature - t.berry_curvature)),
                          max_abs(CMatrix(tg.qgt - t.qgt))});
        for (std::size_t r = 0; r < p.size(); ++r) {
          const auto ri = static_cast<Eigen::Index>(r);
          shift_dev = std::max(shift_dev, std::abs(tg.berry_connection[ri] - t.berry_connection[ri] -
                                                   dalpha(p.span(), static_cast<int>(r))));
        }
      }
      c.at_most("gauge invariance of G, F, QGT " + name, g_dev, 1e-7);
      c.at_most("connection shift = grad alpha " + name, shift_dev, 1e-8);

      double ident = 0.0, min_eig = kInf, sig = 0.0;
      for (const auto &q : m.sample(3, 12)) {
        for (int n : {0, 1}) {
          if (m.max_n >= 0 && n > m.max_n) continue;
          const auto tq = qgt(m.system, q, {n, 0});
          ident = std::max(ident, tq.normalization_identity);
          Eigen::SelfAdjointEigenSolver<CMatrix> es(tq.qgt);
          min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        }
        for (const auto &x : probe_points(m.system, q.span()))
          for (std::size_t r = 0; r < q.size(); ++r)
            sig = std::max(sig, std::abs(sigma(m.system.metric, x, q.span(), r) -
                                         sigma_contraction(m.system.metric, x, q.span(), r)));
      }
      c.at_most("normalization identity " + name, ident, 1e-7);
      c.at_most("-min eigenvalue of QGT " + name, -min_eig, 1e-9);
      c.at_most("sigma two-route " + name, sig, 1e-8);
    } catch (const std::exception &e) {
      c.error(name, e);
    }
  }

  for (const std::string name : {"anharmonic-1d", "morse-like"}) {
    const auto &m = model(name);
    try {
      Reparameterization f;
      f.names = {"lambda", "omega3"};
      f.to_original = [](Params q) { return std::vector<double>{q[0], std::cbrt(q[1])}; };
      f.jacobian = [](Params q) {
        RMatrix J = RMatrix::Zero(2, 2);
        J(0, 0) = 1.0;
        J(1, 1) = 1.0 / (3.0 * std::pow(std::cbrt(q[1]), 2));
        return J;
      };
      const System pulled = reparameterize(m.system, f);
      double dev = 0.0;
      for (const auto &p : m.sample(3, 13)) {
        const std::vector<double> lp{p[0], p[1] * p[1] * p[1]};
        const RMatrix direct = qmt(pulled, pulled.point(lp), {0, 0});
        const RMatrix expected = pull_back(qmt(m.system, p, {0, 0}), jacobian_at(f, lp));
        dev = std::max(dev, rel_max(direct, expected));
      }
      c.at_most("QMT covariance under (lambda, omega^3) " + name, dev, 1e-6);
    } catch (const std::exception &e) {
      c.error(name + " reparameterization", e);
    }
  }

  try {
    const auto &m = model("generalized-anharmonic");
    const double l0 = 1.0, l1 = 1.5, b0 = 0.0, b1 = 0.3, cc = 1.0;
    const double loop = berry_phase_loop(m.system, {{l0, b0, cc}, {l1, b0, cc}, {l1, b1, cc}, {l0, b1, cc}}, {0, 0});
    const double surface =
        integrate_2d([&](double l, double b) {
          const std::vector<double> v{l, b, cc};
          return generalized_curvature_from_connection(0, v)(0, 1);
        }, Axis{l0, l1}, Axis{b0, b1}).value.real();
    std::printf("  loop = %.12f, surface = %.12f\n", loop, surface);
    c.at_most("Berry phase loop vs surface", std::abs(loop - surface), 1e-4);
  } catch (const std::exception &e) {
    c.error("Berry loop", e);
  }
  return c;
}

} // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::vector<Criterion (*)()> all{anharmonic_metric, morse_metric, generalized_tensors,
                                   coupled_properties, route_equivalence, spectra, properties};
  int failed = 0;
  std::vector<std::string> verdicts;
  for (auto fn : all) {
    const auto t0 = Clock::now();
    const Criterion c = fn();
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1f s)\n", c.id, c.title.c_str(), secs);
    for (const auto &ch : c.checks)
      std::printf("  [%s] %s: %s (tol %s)\n", ch.pass ? "pass" : "FAIL", ch.name.c_str(),
                  fmt(ch.value).c_str(), fmt(ch.tol).c_str());
    const bool ok = c.passed();
    failed += !ok;
    verdicts.push_back("criterion " + std::to_string(c.id) + ": " + (ok ? "PASS" : "FAIL") + " " + c.title);
  }
  std::printf("\n");
  for (const auto &v : verdicts) std::printf("%s\n", v.c_str());
  std::printf("%d of %zu criteria failed (%.1f s)\n", failed, all.size(),
              std::chrono::duration<double>(Clock::now() - start).count());
  return failed == 0 ? 0 : 1;
}
