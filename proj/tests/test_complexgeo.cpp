#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "amdkit/complexgeo.hpp"

using namespace amdkit;

namespace {

constexpr double kPi = std::numbers::pi;

Mat random_mat(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

Codim2Plane coordinate_plane(int n, int a, int b) { return Codim2Plane(Vec::Unit(n, a), Vec::Unit(n, b)); }

}  // namespace

TEST_CASE("complex structures square to minus one and realify consistently") {
  const ComplexStructure cs(4, {{0, 2}, {1, 3}});
  CHECK((cs.j() * cs.j() + Mat::Identity(4, 4)).norm() == 0.0);
  CHECK((cs.j().transpose() * cs.j() - Mat::Identity(4, 4)).norm() == 0.0);
  std::mt19937_64 rng(4);
  CMat u(2, 2);
  u << std::complex<double>(1, 2), std::complex<double>(0.5, -1), std::complex<double>(-0.3, 0), std::complex<double>(2, 1);
  const Mat r = cs.realify(u);
  CHECK((r * cs.j() - cs.j() * r).norm() < 1e-14);
  CHECK((cs.complexify(r) - u).norm() < 1e-14);
  // dz of realified vectors is the complex matrix action.
  const Mat v = random_mat(4, 1, rng);
  CHECK((cs.complex_coordinates(r * v) - u * cs.complex_coordinates(v)).norm() < 1e-13);
  CHECK_THROWS_AS(ComplexStructure(4, {{0, 1}, {1, 3}}), InvalidInput);
}

TEST_CASE("Wirtinger: the Kahler form calibrates complex lines and only them") {
  const ComplexStructure cs = ComplexStructure::split(3);
  const CalibrationForm w = kahler_form(cs);
  CHECK(comass_sample(w.form, 3000, 2) <= 1.0 + 1e-12);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_mat(6, 1, rng).col(0).normalized();
    Mat frame(6, 2);
    frame.col(0) = x;
    frame.col(1) = cs.j() * x;
    CHECK(evaluate(w.form, frame) == doctest::Approx(1.0).epsilon(1e-13));
    // Any other unit simple 2-vector sees strictly less.
    const Mat q = orthonormal_frame(random_mat(6, 2, rng));
    CHECK(evaluate(w.form, q) < 1.0);
  }
}

TEST_CASE("special Lagrangian forms calibrate rotated real planes") {
  const ComplexStructure cs = ComplexStructure::split(3);
  for (double theta : {0.0, 0.7, kPi / 2, 2.5}) {
    const CalibrationForm phi = sl_form(cs, theta);
    // e^{i theta / 3} R^3 has dz = e^{i theta}.
    CMat u = CMat::Identity(3, 3) * std::polar(1.0, theta / 3);
    Mat plane(6, 3);
    for (int a = 0; a < 3; ++a) plane.col(a) = cs.realify(u) * Vec::Unit(6, a);
    CHECK(evaluate(phi.form, plane) == doctest::Approx(1.0).epsilon(1e-13));
    const std::complex<double> vol = complex_volume(cs, plane);
    CHECK(std::abs(vol - std::polar(1.0, theta)) < 1e-13);
  }
  CHECK(comass_sample(sl_form(cs, 0.3).form, 3000, 5) <= 1.0 + 1e-12);
}

TEST_CASE("rotations about a codimension-2 plane") {
  std::mt19937_64 rng(12);
  const Mat perp = orthonormal_frame(random_mat(5, 2, rng));
  const Codim2Plane p(perp.col(0), perp.col(1));
  const Mat r = rotation_about_plane(p, 0.9);
  CHECK((r.transpose() * r - Mat::Identity(5, 5)).norm() < 1e-14);
  CHECK(r.determinant() == doctest::Approx(1.0));
  CHECK((rotation_about_plane(p, 0.4) * rotation_about_plane(p, 0.5) - r).norm() < 1e-14);
  const Vec in_p = Vec::Unit(5, 0) - perp * (perp.transpose() * Vec::Unit(5, 0));
  CHECK((r * in_p - in_p).norm() < 1e-14);
  CHECK((r * p.f1() - (std::cos(0.9) * p.f1() + std::sin(0.9) * p.f2())).norm() < 1e-14);
  CHECK(p.distance(in_p) < 1e-14);
  CHECK_THROWS_AS(Codim2Plane(Vec::Unit(3, 0), Vec::Unit(3, 0)), InvalidInput);
}

TEST_CASE("pushforward is the pullback by the inverse") {
  std::mt19937_64 rng(6);
  const KForm w = kahler_form(ComplexStructure::split(2)).form;
  const Codim2Plane p = coordinate_plane(4, 2, 3);
  const Mat r = rotation_about_plane(p, 1.3);
  const Mat v = random_mat(4, 2, rng);
  CHECK(evaluate(pushforward(w, r), Mat(r * v)) == doctest::Approx(evaluate(w, v)).epsilon(1e-12));
}

TEST_CASE("rotated families sum to zero for forms with one leg in the normal plane") {
  const ComplexStructure cs3 = ComplexStructure::split(3);
  const CalibrationForm phi = sl_form(cs3, kPi / 2);
  const Codim2Plane p = coordinate_plane(6, 2, 5);
  CHECK(p.is_complex(cs3));
  for (int k = 2; k <= 8; ++k) {
    const RotatedFamily fam = rotated_calibration_family(phi, p, k, 500, 1);
    CHECK(fam.forms.size() == static_cast<std::size_t>(k));
    CHECK(fam.report.metric("sum_norm") < 1e-10);
    CHECK(fam.report.passed());
  }
  // A form living entirely in P is rotation invariant: the sum is k w.
  const CalibrationForm planar{KForm::basis(6, {0, 1}), CalibrationKind::Custom, 0.0};
  const RotatedFamily fam = rotated_calibration_family(planar, p, 3, 200, 1);
  CHECK(fam.report.metric("sum_norm") == doctest::Approx(3.0));
  CHECK(!fam.report.passed());
}

TEST_CASE("Lagrangian and holomorphic defects of flat pieces") {
  const ComplexStructure cs = ComplexStructure::split(2);
  const Immersion real_plane = Immersion::from_expressions({"a", "b"}, {"a", "b", "0", "0"}, {{0, 1}, {0, 1}});
  const Immersion complex_line = Immersion::from_expressions({"a", "b"}, {"a", "0", "b", "0"}, {{0, 1}, {0, 1}});
  CHECK(lagrangian_defect(real_plane, cs, 20, 1) < 1e-15);
  CHECK(lagrangian_defect(complex_line, cs, 20, 1) == doctest::Approx(1.0));
  CHECK(holomorphic_defect(complex_line, cs, 20, 1) < 1e-15);
  CHECK(holomorphic_defect(real_plane, cs, 20, 1) == doctest::Approx(1.0));
}

TEST_CASE("special Lagrangian phase of a tilted plane") {
  const ComplexStructure cs = ComplexStructure::split(2);
  // Plane spanned by e^{i/3} e_1 and e^{i/3} e_2 has dz1 ^ dz2 = e^{2i/3}.
  const Immersion tilted = Immersion::from_expressions(
      {"a", "b"}, {"cos(1/3)*a", "cos(1/3)*b", "sin(1/3)*a", "sin(1/3)*b"}, {{0, 1}, {0, 1}});
  CHECK(sl_phase_defect(tilted, cs, 2.0 / 3.0, 30, 1).passed());
  const Report wrong = sl_phase_defect(tilted, cs, 0.0, 30, 1);
  CHECK(!wrong.passed());
  CHECK(wrong.metric("max_phase_deviation") == doctest::Approx(2.0 / 3.0));
  // Reversing the orientation turns the phase by pi.
  CHECK(sl_phase_defect(tilted, cs, 2.0 / 3.0 + kPi, 30, 1, 1e-7, -1).passed());
}

TEST_CASE("reflection through a complex plane negates the special Lagrangian form") {
  const ComplexStructure cs = ComplexStructure::split(3);
  const Immersion flat = Immersion::from_expressions({"a", "b", "c"}, {"0", "0", "0", "a", "b", "c"},
                                                     {{0, 1}, {0, 1}, {0.1, 1}});
  // i R^3 has phase 3 pi / 2.
  const Report r = reflect_and_unite_check(flat, coordinate_plane(6, 2, 5), cs, 3 * kPi / 2, 20, 1);
  CHECK(r.passed());
  CHECK(r.metric("pushforward_plus_phi_norm") < 1e-12);
  CHECK_THROWS_AS(reflect_and_unite_check(flat, coordinate_plane(6, 1, 2), cs, 3 * kPi / 2, 20, 1), InvalidInput);
  CHECK_THROWS_AS(reflect_and_unite_check(flat, coordinate_plane(6, 2, 5), cs, 0.0, 20, 1), PreconditionError);
}
