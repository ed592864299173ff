#include <doctest.h>

#include <cmath>
#include <numbers>

#include "amdkit/bundles.hpp"
#include "amdkit/complexgeo.hpp"

using namespace amdkit;

namespace {

constexpr double kPi = std::numbers::pi;

std::span<const double> sp(const std::vector<double>& v) { return {v.data(), v.size()}; }

// Catenoid with axis x1 in conformal parameters.
Immersion catenoid() {
  return Immersion::from_expressions({"u", "v"}, {"u", "cosh(u)*cos(v)", "cosh(u)*sin(v)"}, {{-1, 1}, {0, 2 * kPi}});
}

expr::Expression over_uv(const std::string& text) { return expr::parse(text, {"u", "v"}); }

BjorlingData circle_data() {
  BjorlingData d;
  auto t = [](const char* s) { return expr::parse(s, {"t"}); };
  d.curve = {t("cos(t)"), t("sin(t)"), t("0")};
  d.normal = {t("-cos(t)"), t("-sin(t)"), t("0")};
  d.unit_normal = d.normal;
  d.interval = {0.0, 2 * kPi};
  return d;
}

}  // namespace

TEST_CASE("normal bundle points are base points plus normal fibers") {
  const BundleImmersion b = normal_bundle(catenoid(), {{-2, 2}});
  CHECK(b.fiber_dim == 1);
  CHECK(b.total.param_names() == std::vector<std::string>{"u", "v", "t"});
  CHECK(b.total.coord_names() == std::vector<std::string>{"x1", "x2", "x3", "y1", "y2", "y3"});
  const std::vector<double> p{0.4, 1.2, 0.7};
  const Vec x = b.total.value(sp(p));
  const Jet1 base = b.base.jet1(sp(std::vector<double>{0.4, 1.2}));
  CHECK((x.head(3) - base.point).norm() < 1e-15);
  const Vec y = x.tail(3);
  CHECK(y.norm() == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(std::abs(y.dot(base.jacobian.col(0))) < 1e-14);
  CHECK(std::abs(y.dot(base.jacobian.col(1))) < 1e-14);
  // Hypersurface normal is r_u x r_v / |r_u x r_v| = (tanh u, -cos v / cosh u, -sin v / cosh u).
  const Vec n = y / 0.7;
  CHECK(n[0] == doctest::Approx(std::tanh(0.4)));
  CHECK(n[1] == doctest::Approx(-std::cos(1.2) / std::cosh(0.4)));
  CHECK(n[2] == doctest::Approx(-std::sin(1.2) / std::cosh(0.4)));
}

TEST_CASE("bundle jets agree with finite differences") {
  const BundleImmersion b = normal_bundle(catenoid());
  const std::vector<double> p{0.3, 0.8, -0.4};
  const Jet1 j = b.total.jet1(sp(p));
  const double h = 1e-6;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> pp = p, pm = p;
    pp[static_cast<std::size_t>(a)] += h;
    pm[static_cast<std::size_t>(a)] -= h;
    const Vec fd = (b.total.value(sp(pp)) - b.total.value(sp(pm))) / (2 * h);
    CHECK((fd - j.jacobian.col(a)).norm() < 1e-8);
  }
}

TEST_CASE("normal bundles of austere bases are special Lagrangian with phase i") {
  const ComplexStructure cs = ComplexStructure::split(3);
  const BundleImmersion cat = normal_bundle(catenoid());
  CHECK(lagrangian_defect(cat.total, cs, 100, 1) < 1e-12);
  CHECK(sl_phase_defect(cat.total, cs, kPi / 2, 100, 1).passed());

  const Immersion helicoid =
      Immersion::from_expressions({"u", "v"}, {"u*cos(v)", "u*sin(v)", "v"}, {{-1, 1}, {0, 2 * kPi}});
  CHECK(sl_phase_defect(normal_bundle(helicoid).total, cs, kPi / 2, 100, 1).passed());

  const Immersion sphere = Immersion::from_expressions({"a", "b"}, {"sin(a)*cos(b)", "sin(a)*sin(b)", "cos(a)"},
                                                       {{0.3, kPi - 0.3}, {0, 2 * kPi}});
  const BundleImmersion s = normal_bundle(sphere);
  CHECK(lagrangian_defect(s.total, cs, 100, 1) < 1e-12);
  const Report r = sl_phase_defect(s.total, cs, kPi / 2, 100, 1);
  CHECK(!r.passed());
  CHECK(r.metric("max_phase_deviation") > 0.05);
}

TEST_CASE("codimension-2 bases get an orthonormal positively oriented normal frame") {
  const Immersion curve = Immersion::from_expressions({"s"}, {"cos(s)", "sin(s)", "s"}, {{0, 3}});
  const BundleImmersion b = normal_bundle(curve);
  CHECK(b.fiber_dim == 2);
  const std::vector<double> p{1.0, 0.0, 0.0};
  const Jet1 j = b.total.jet1(sp(p));
  Mat frame(3, 3);
  frame.col(0) = curve.jet1(sp(std::vector<double>{1.0})).jacobian.col(0);
  frame.col(1) = j.jacobian.col(1).tail(3);
  frame.col(2) = j.jacobian.col(2).tail(3);
  CHECK((frame.rightCols(2).transpose() * frame.rightCols(2) - Mat::Identity(2, 2)).norm() < 1e-13);
  CHECK(frame.determinant() > 0);
}

TEST_CASE("Borisenko twist matches the closed form on the catenoid") {
  const BundleImmersion b = borisenko_bundle(catenoid(), over_uv("sinh(u)*cos(v)"));
  for (double u : {-0.7, 0.1, 0.6}) {
    for (double v : {0.3, 2.0, 4.5}) {
      for (double t : {-0.5, 0.0, 0.8}) {
        const Vec x = b.total.value(sp(std::vector<double>{u, v, t}));
        const double cu = std::cosh(u), th = std::tanh(u);
        // tau x n + t n with tau x n = (cos v / cosh u, tanh u, 0).
        CHECK(x[3] == doctest::Approx(std::cos(v) / cu + t * th).epsilon(1e-12));
        CHECK(x[4] == doctest::Approx(th - t * std::cos(v) / cu).epsilon(1e-12));
        CHECK(x[5] == doctest::Approx(-t * std::sin(v) / cu).epsilon(1e-12));
      }
    }
  }
  const ComplexStructure cs = ComplexStructure::split(3);
  CHECK(lagrangian_defect(b.total, cs, 100, 1) < 1e-8);
  CHECK(sl_phase_defect(b.total, cs, kPi / 2, 100, 1).passed());
}

TEST_CASE("Borisenko with rho = 0 is the normal bundle") {
  const BundleImmersion zero = borisenko_bundle(catenoid(), over_uv("0"));
  const BundleImmersion plain = normal_bundle(catenoid());
  double worst = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      for (int k = 0; k < 5; ++k) {
        const std::vector<double> p{-1 + 2.0 * i / 19, 2 * kPi * j / 19, -1 + 0.5 * k};
        worst = std::max(worst, (zero.total.value(sp(p)) - plain.total.value(sp(p))).norm());
      }
  CHECK(worst < 1e-12);
}

TEST_CASE("Borisenko preconditions are measured") {
  CHECK(harmonic_defect(catenoid(), over_uv("u*v"), 50, 1) < 1e-10);
  // Laplace-Beltrami of u^2 is 2 / cosh^2 u.
  CHECK(harmonic_defect(catenoid(), over_uv("u^2"), 200, 1) == doctest::Approx(2.0).epsilon(0.05));
  CHECK_THROWS_AS(borisenko_bundle(catenoid(), over_uv("u^2")), PreconditionError);
  const Immersion sphere = Immersion::from_expressions({"a", "b"}, {"sin(a)*cos(b)", "sin(a)*sin(b)", "cos(a)"},
                                                       {{0.3, kPi - 0.3}, {0, 2 * kPi}});
  CHECK(max_mean_curvature(sphere, 20, 1) == doctest::Approx(2.0));
  CHECK_THROWS_AS(borisenko_bundle(sphere, expr::parse("0", {"a", "b"})), PreconditionError);
}

TEST_CASE("Bjorling on the circle with the inward normal gives the catenoid") {
  const Immersion x = bjorling_solve(circle_data());
  for (double u : {0.3, 2.0, 5.0}) {
    for (double v : {-0.4, 0.0, 0.25}) {
      const Vec p = x.value(sp(std::vector<double>{u, v}));
      CHECK(p[0] == doctest::Approx(std::cos(u) * std::cosh(v)).epsilon(1e-12));
      CHECK(p[1] == doctest::Approx(std::sin(u) * std::cosh(v)).epsilon(1e-12));
      CHECK(p[2] == doctest::Approx(-v).epsilon(1e-12));
    }
  }
  CHECK(max_mean_curvature(x, 50, 1) < 1e-6);
}

TEST_CASE("Bjorling on a line with a rotating normal gives the helicoid") {
  BjorlingData d;
  auto t = [](const char* s) { return expr::parse(s, {"t"}); };
  d.curve = {t("t"), t("0"), t("0")};
  d.normal = {t("0"), t("cos(t)"), t("sin(t)")};
  d.normal_norm = t("1");
  d.interval = {-1.0, 1.0};
  const Immersion x = bjorling_solve(d);
  const Vec p = x.value(sp(std::vector<double>{0.4, 0.3}));
  CHECK(p[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(std::sin(0.4) * std::sinh(0.3)).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(-std::cos(0.4) * std::sinh(0.3)).epsilon(1e-12));
  const Jet2 j = x.jet2(sp(std::vector<double>{0.4, 0.3}));
  CHECK(mean_curvature_vector(j).norm() < 1e-9);
}

TEST_CASE("Bjorling input validation") {
  BjorlingData d = circle_data();
  auto t = [](const char* s) { return expr::parse(s, {"t"}); };
  d.normal = {t("-cos(t)"), t("0"), t("0")};
  d.unit_normal = d.normal;
  CHECK_THROWS_AS(d.validate(), PreconditionError);
  BjorlingData e = circle_data();
  e.unit_normal.clear();
  CHECK_THROWS_AS(bjorling_solve(e), InvalidInput);
}

TEST_CASE("Bjorling bundle contains the data curve for scaled normals") {
  BjorlingData d = circle_data();
  auto t = [](const char* s) { return expr::parse(s, {"t"}); };
  d.normal = {t("-2*cos(t)"), t("-2*sin(t)"), t("0")};
  d.unit_normal.clear();
  d.normal_norm = t("2");
  const BjorlingBundle b = bjorling_bundle(d);
  CHECK(b.report.passed());
  CHECK(b.report.metric("max_normal_line_distance") < 1e-6);
  CHECK(b.report.metric("max_curve_distance") < 1e-8);
  CHECK(b.report.metric("min_fiber_margin") > 0.0);
}
