#include <doctest.h>

#include <cmath>
#include <numbers>

#include "amdkit/scene.hpp"
#include "amdkit/sigma.hpp"

using namespace amdkit;

namespace {

constexpr double kPi = std::numbers::pi;

std::span<const double> sp(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Two rectangles of the complex line {x2 = x4 = 0} in C^2 = (x1 + i x3, x2 + i x4),
// glued along the real axis. The flat case of the construction.
SigmaComplex halfplane_pair(const std::vector<int>& flip = {}) {
  const ComplexStructure cs(4, {{0, 2}, {1, 3}});
  const Face base{"F", Immersion::from_expressions({"a", "b"}, {"a", "0", "b", "0"}, {{-1, 1}, {0, 1}}), 1,
                  kahler_form(cs)};
  const Immersion edge = Immersion::from_expressions({"s"}, {"s", "0", "0", "0"}, {{-1, 1}});
  const MapPtr to_face = std::make_shared<ExpressionMap>(std::vector<std::string>{"s"},
                                                         std::vector<std::string>{"s", "0"});
  return rotation_fan(base, Codim2Plane(Vec::Unit(4, 2), Vec::Unit(4, 3)), 2, {{edge, to_face}}, flip);
}

double beta(double s) { return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0; }

}  // namespace

TEST_CASE("the flat pair satisfies the hypotheses and its flip does not") {
  const SigmaComplex s = halfplane_pair();
  CHECK(s.faces().size() == 2);
  CHECK(s.faces_of_edge(0) == std::vector<int>{0, 1});
  CHECK(s.build_report().passed());
  const Report ok = check_amd_hypotheses(s, 32, 1);
  CHECK(ok.passed());
  CHECK(ok.metric("orientation_mismatches") == 0.0);
  CHECK(ok.metric("max_calibration_sum_norm") < 1e-14);

  const Report bad = check_amd_hypotheses(halfplane_pair({1}), 32, 1);
  CHECK(!bad.passed());
  CHECK(bad.metric("orientation_mismatches") == 32.0);
  CHECK(bad.metric("max_calibration_sum_norm") > 1.0);
}

TEST_CASE("the singular edge is not part of the boundary") {
  const SigmaComplex s = halfplane_pair();
  CHECK(!s.boundary_cloud().empty());
  for (const Vec& x : s.boundary_cloud()) {
    // Interior points of the edge have |x1| < 1 and all other coordinates zero.
    const bool on_edge_interior = std::abs(x[0]) < 1 - 1e-9 && x.tail(3).norm() < 1e-12;
    CHECK(!on_edge_interior);
  }
}

TEST_CASE("Stokes certificate on the flat pair matches the area") {
  const Report r = stokes_certificate(halfplane_pair(), QuadratureSpec{});
  CHECK(r.passed());
  CHECK(r.metric("total_volume") == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r.metric("total_calibration_integral") == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("construction rejects uncalibrated faces and misplaced edges") {
  const ComplexStructure cs(4, {{0, 2}, {1, 3}});
  const Codim2Plane p(Vec::Unit(4, 2), Vec::Unit(4, 3));
  const Immersion edge = Immersion::from_expressions({"s"}, {"s", "0", "0", "0"}, {{-1, 1}});
  const MapPtr to_face = std::make_shared<ExpressionMap>(std::vector<std::string>{"s"},
                                                         std::vector<std::string>{"s", "0"});
  // A Lagrangian half-plane is not calibrated by the Kahler form.
  const Face real{"R", Immersion::from_expressions({"a", "b"}, {"a", "b", "0", "0"}, {{-1, 1}, {0, 1}}), 1,
                  kahler_form(cs)};
  CHECK_THROWS_AS(rotation_fan(real, p, 2, {{edge, to_face}}), PreconditionError);

  const Face line{"F", Immersion::from_expressions({"a", "b"}, {"a", "0", "b", "0"}, {{-1, 1}, {0, 1}}), 1,
                  kahler_form(cs)};
  const MapPtr interior = std::make_shared<ExpressionMap>(std::vector<std::string>{"s"},
                                                          std::vector<std::string>{"s", "0.5"});
  CHECK_THROWS_AS(rotation_fan(line, p, 2, {{edge, interior}}), PreconditionError);
  const Immersion shifted = Immersion::from_expressions({"s"}, {"s", "0.1", "0", "0"}, {{-1, 1}});
  CHECK_THROWS_AS(rotation_fan(line, p, 2, {{shifted, to_face}}), PreconditionError);
  CHECK_THROWS_AS(rotation_fan(line, p, 1, {{edge, to_face}}), InvalidInput);
}

TEST_CASE("bump profile Lipschitz constant matches a brute-force maximum") {
  double best = 0.0;
  const int n = 2000000;
  for (int i = 1; i < n; ++i) {
    const double s = static_cast<double>(i) / n;
    const double d = 1.0 - s * s;
    best = std::max(best, std::abs(beta(s) * (-2.0 * s / (d * d))));
  }
  // The library value is an upper bound: never below the true maximum, barely above it.
  CHECK(bump_profile_lipschitz() >= best);
  CHECK(bump_profile_lipschitz() <= best * (1 + 2e-6));
  CHECK(bump_profile_lipschitz() == doctest::Approx(2.17036).epsilon(1e-5));
}

TEST_CASE("bump flows fix the outside exactly and invert") {
  Vec c(3);
  c << 0.1, -0.2, 0.3;
  const BumpDiffeo phi(3, {Bump{c, 0.8, Vec::Unit(3, 0), 0.15}});
  CHECK(phi.lipschitz_bound() == doctest::Approx(0.15 * bump_profile_lipschitz() / 0.8));
  for (const Vec& x : {Vec(c + Vec::Unit(3, 1) * 0.8), Vec(c + Vec::Constant(3, 1.0)), Vec(Vec::Constant(3, -2.0))}) {
    CHECK(!phi.touches(x));
    CHECK((phi.apply(x) - x).norm() == 0.0);
  }
  Vec inside(3);
  inside << 0.2, 0.0, 0.25;
  CHECK(phi.touches(inside));
  CHECK((phi.apply(inside) - inside).norm() > 1e-3);
  CHECK((phi.apply_inverse(phi.apply(inside)) - inside).norm() < 1e-8);

  const auto [y, jac] = phi.apply_with_jacobian(inside);
  CHECK((y - phi.apply(inside)).norm() < 1e-15);
  const double h = 1e-6;
  for (int a = 0; a < 3; ++a) {
    const Vec fd = (phi.apply(inside + h * Vec::Unit(3, a)) - phi.apply(inside - h * Vec::Unit(3, a))) / (2 * h);
    CHECK((fd - jac.col(a)).norm() < 1e-7);
  }
  const Vec fd0 = (phi.field(inside + h * Vec::Unit(3, 2)) - phi.field(inside - h * Vec::Unit(3, 2))) / (2 * h);
  CHECK((fd0 - phi.field_jacobian(inside).col(2)).norm() < 1e-7);
}

TEST_CASE("random boundary-fixing diffeomorphisms keep the boundary") {
  const SigmaComplex s = halfplane_pair();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const BumpDiffeo phi = random_boundary_fixing_diffeo(s, 2, 0.02, seed);
    CHECK(phi.bumps().size() == 2);
    CHECK(phi.lipschitz_bound() < 0.9);
    for (const Vec& x : s.boundary_cloud()) CHECK((phi.apply(x) - x).norm() == 0.0);
  }
  CHECK_THROWS_AS(random_boundary_fixing_diffeo(s, 2, 5.0, 1), InvalidInput);
  CHECK_THROWS_AS(random_boundary_fixing_diffeo(s, -1, 0.02, 1), InvalidInput);
}

TEST_CASE("flowed maps compose the bump with the face") {
  const SigmaComplex s = halfplane_pair();
  const auto phi = std::make_shared<const BumpDiffeo>(edge_bump(s, 0, 0.05));
  const FlowedMap f(s.faces()[0].immersion.map_ptr(), phi);
  Vec p(2);
  p << 0.05, 0.02;
  CHECK((f.value(sp(p)) - phi->apply(s.faces()[0].immersion.map().value(sp(p)))).norm() < 1e-15);
  const double h = 1e-6;
  const Jet1 j = f.jet1(sp(p));
  for (int a = 0; a < 2; ++a) {
    const Vec fd = (f.value(sp(Vec(p + h * Vec::Unit(2, a)))) - f.value(sp(Vec(p - h * Vec::Unit(2, a))))) / (2 * h);
    CHECK((fd - j.jacobian.col(a)).norm() < 1e-7);
  }
}

TEST_CASE("perturbations of the flat pair never decrease the area") {
  const SigmaComplex s = halfplane_pair();
  PerturbOptions opts;
  opts.trials = 5;
  const Report r = perturb_volume_test(s, QuadratureSpec{}, 3, opts);
  CHECK(r.passed());
  CHECK(r.metric("decreasing_trials") == 0.0);
  CHECK(r.metric("base_volume") == doctest::Approx(4.0));
  CHECK(r.metric("max_boundary_displacement") == 0.0);
  CHECK_THROWS_AS(perturb_volume_test(halfplane_pair({1}), QuadratureSpec{}, 3, opts), PreconditionError);
  opts.exploratory = true;
  const Report e = perturb_volume_test(halfplane_pair({1}), QuadratureSpec{}, 3, opts);
  CHECK(!e.notes.empty());
}

TEST_CASE("the z2 = z1^2 fan: hypotheses, volume and Stokes") {
  const auto scene = load_scene("builtin:zw2_fan");
  const auto fan = scene->complex("fan", "/");
  CHECK(fan->faces().size() == 3);
  CHECK(check_amd_hypotheses(*fan, 32, 1).passed());
  const Report stokes = stokes_certificate(*fan, scene->quadrature);
  CHECK(stokes.passed());
  // Each face is the graph z2 = z1^2 over {|z1|^2 + |z1|^4 <= 1, Im z1 >= 0}:
  // area = pi * (r^2 / 2 + r^4) with r^2 = (sqrt(5) - 1) / 2, halved.
  const double r2 = (std::sqrt(5.0) - 1) / 2;
  const double per_face = kPi * (r2 / 2 + r2 * r2);
  CHECK(stokes.metric("total_volume") == doctest::Approx(3 * per_face).epsilon(1e-6));

  const auto flipped = scene->complex("fan_flipped", "/");
  const Report bad = check_amd_hypotheses(*flipped, 32, 1);
  CHECK(!bad.passed());
  CHECK(bad.metric("orientation_mismatches") > 0.0);
  CHECK(bad.metric("max_calibration_sum_norm") > 0.1);
}

TEST_CASE("fan size follows the load option") {
  LoadOptions o;
  o.fan_k = 5;
  const auto scene = load_scene("builtin:halfplane_pair", o);
  const auto fan = scene->complex("pair", "/");
  CHECK(fan->faces().size() == 5);
  // Every rotation count keeps the calibrations cancelling along the edge.
  const Report hyp = check_amd_hypotheses(*fan, 8, 1);
  CHECK(hyp.passed());
  CHECK(hyp.metric("max_calibration_sum_norm") < 1e-12);
  CHECK(sigma_volume(*fan, QuadratureSpec{}).value == doctest::Approx(10.0).epsilon(1e-10));
}
