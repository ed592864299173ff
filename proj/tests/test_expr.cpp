#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "amdkit/expr.hpp"
#include "random_expr.hpp"

using namespace amdkit;
using amdkit::expr::parse;

namespace {

double eval1(const std::string& text, std::initializer_list<double> values, std::vector<std::string> vars) {
  return parse(text, std::move(vars)).eval(values);
}

}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(eval1("1 + 2*3", {}, {}) == 7.0);
  CHECK(eval1("-x^2", {3.0}, {"x"}) == -9.0);
  CHECK(eval1("8/2/2", {}, {}) == 2.0);
  CHECK(eval1("x - y - 1", {5.0, 1.0}, {"x", "y"}) == 3.0);
  CHECK(eval1("x^-2", {2.0}, {"x"}) == 0.25);
  CHECK(eval1("x^(-1)", {4.0}, {"x"}) == 0.25);
  CHECK(eval1("2*pi", {}, {}) == doctest::Approx(2 * std::numbers::pi));
  CHECK(eval1("1e-3 + .5", {}, {}) == doctest::Approx(0.501));
}

TEST_CASE("functions agree with the standard library") {
  const double x = 0.37;
  CHECK(eval1("sin(x)", {x}, {"x"}) == doctest::Approx(std::sin(x)));
  CHECK(eval1("cos(x)", {x}, {"x"}) == doctest::Approx(std::cos(x)));
  CHECK(eval1("sinh(x)", {x}, {"x"}) == doctest::Approx(std::sinh(x)));
  CHECK(eval1("cosh(x)", {x}, {"x"}) == doctest::Approx(std::cosh(x)));
  CHECK(eval1("tanh(x)", {x}, {"x"}) == doctest::Approx(std::tanh(x)));
  CHECK(eval1("exp(x)", {x}, {"x"}) == doctest::Approx(std::exp(x)));
  CHECK(eval1("sqrt(x)", {x}, {"x"}) == doctest::Approx(std::sqrt(x)));
}

TEST_CASE("complex evaluation continues the real functions") {
  using C = std::complex<double>;
  const auto e = parse("exp(z) - cosh(z) - sinh(z)", {"z"});
  const C z(0.3, 1.1);
  CHECK(std::abs(e.eval<C>(std::span<const C>(&z, 1))) < 1e-14);
  const auto euler = parse("exp(z)", {"z"});
  const C ipi(0.0, std::numbers::pi);
  CHECK(std::abs(euler.eval<C>(std::span<const C>(&ipi, 1)) + 1.0) < 1e-15);
}

TEST_CASE("syntax errors report line, column and expected tokens") {
  try {
    parse("sin(x + ", {"x"});
    FAIL("expected a syntax error");
  } catch (const expr::SyntaxError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 9);
    CHECK(!e.expected().empty());
  }
  try {
    parse("x ^ 1.5", {"x"});
    FAIL("fractional exponents are rejected");
  } catch (const expr::SyntaxError& e) {
    CHECK(e.column() >= 5);
  }
  CHECK_THROWS_AS(parse("x +* y", {"x", "y"}), expr::SyntaxError);
  CHECK_THROWS_AS(parse("log(x)", {"x"}), amdkit::Error);
}

TEST_CASE("unknown identifiers list the declared variables") {
  try {
    parse("u + w", {"u", "v"});
    FAIL("expected an unknown identifier");
  } catch (const expr::UnknownIdentifier& e) {
    CHECK(e.name() == "w");
    CHECK(e.declared() == std::vector<std::string>{"u", "v"});
  }
  CHECK_THROWS_AS(parse("pi", {"pi"}), InvalidInput);
}

TEST_CASE("free parsing declares variables in order of appearance") {
  const auto e = parse("b*a + b");
  CHECK(e.variables() == std::vector<std::string>{"b", "a"});
  CHECK(e.eval({2.0, 3.0}) == 8.0);
}

TEST_CASE("domain errors name the offending subtree") {
  const auto e = parse("1 + sqrt(x - 2)", {"x"});
  try {
    e.eval({1.0});
    FAIL("expected an evaluation error");
  } catch (const expr::EvalError& err) {
    CHECK(err.subtree().find("sqrt") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("x^-1", {"x"}).eval({0.0}), expr::EvalError);
}

TEST_CASE("printing round-trips random expressions") {
  RandomExpr gen(42);
  for (int i = 0; i < 200; ++i) {
    const auto e = parse(gen.generate(4), RandomExpr::variables());
    const auto back = parse(e.to_string(), RandomExpr::variables());
    CHECK(back.structurally_equal(e));
    CHECK(back.to_string() == e.to_string());
  }
  CHECK(parse("(x - y) - z", {"x", "y", "z"}).to_string() == "x - y - z");
  CHECK(parse("x - (y - z)", {"x", "y", "z"}).to_string() == "x - (y - z)");
}

TEST_CASE("jets agree with finite differences on random expressions") {
  RandomExpr gen(7);
  for (int i = 0; i < 100; ++i) {
    const auto e = parse(gen.generate(4), RandomExpr::variables());
    const AdErrors err = ad_against_fd(e, gen.point());
    INFO(e.to_string());
    CHECK(err.first < 1e-6);
    CHECK(err.second < 1e-4);
  }
}

TEST_CASE("complex jets satisfy Cauchy-Riemann through the chain rule") {
  using CJ = ComplexJet;
  const auto e = parse("sin(z)*exp(z)", {"z"});
  const CJ z = CJ::variable(std::complex<double>(0.2, 0.7), 0, 1);
  const CJ r = e.eval<CJ>(std::span<const CJ>(&z, 1));
  const std::complex<double> zz(0.2, 0.7);
  CHECK(std::abs(r.d(0) - (std::cos(zz) + std::sin(zz)) * std::exp(zz)) < 1e-13);
  CHECK(std::abs(r.dd(0, 0) - 2.0 * std::cos(zz) * std::exp(zz)) < 1e-13);
}
