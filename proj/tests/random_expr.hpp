#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "amdkit/expr.hpp"

// Random expressions that stay finite on [-1, 1]^3: divisions and negative
// powers only ever see denominators bounded away from zero, square roots
// only positive arguments.
class RandomExpr {
 public:
  explicit RandomExpr(std::uint64_t seed) : rng_(seed) {}

  std::string generate(int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 11);
    switch (pick(rng_)) {
      case 0: return variable();
      case 1: return constant();
      case 2: return "(" + generate(depth - 1) + " + " + generate(depth - 1) + ")";
      case 3: return "(" + generate(depth - 1) + " - " + generate(depth - 1) + ")";
      case 4: return "(" + generate(depth - 1) + " * " + generate(depth - 1) + ")";
      case 5: return "(" + generate(depth - 1) + ")/(2 + sin(" + generate(depth - 1) + "))";
      case 6: return "sin(" + generate(depth - 1) + ")";
      case 7: return "cos(" + generate(depth - 1) + ")";
      case 8: return "exp(tanh(" + generate(depth - 1) + "))";
      case 9: return "sqrt(1 + (" + generate(depth - 1) + ")^2)";
      case 10: return "(" + generate(depth - 1) + ")^" + std::to_string(1 + pick(rng_) % 3);
      default: return "(1.5 + cos(" + generate(depth - 1) + "))^-" + std::to_string(1 + pick(rng_) % 2);
    }
  }

  std::vector<double> point() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng_), u(rng_), u(rng_)};
  }

  static const std::vector<std::string>& variables() {
    static const std::vector<std::string> v{"x", "y", "z"};
    return v;
  }

 private:
  std::string variable() {
    std::uniform_int_distribution<int> pick(0, 2);
    return variables()[static_cast<std::size_t>(pick(rng_))];
  }
  std::string constant() {
    // Moderate constants keep nested powers from producing frequencies the
    // finite-difference reference cannot resolve.
    std::uniform_int_distribution<int> lead(0, 1), digit(1, 9);
    return std::to_string(lead(rng_)) + "." + std::to_string(digit(rng_));
  }

  std::mt19937_64 rng_;
};

struct AdErrors {
  double first = 0.0;
  double second = 0.0;
};

// Jet gradient and Hessian against central differences of values, relative
// to max(1, |exact|) in the max norm.
inline AdErrors ad_against_fd(const amdkit::expr::Expression& e, const std::vector<double>& p) {
  using amdkit::RealJet;
  const int n = static_cast<int>(p.size());
  std::vector<RealJet> jets;
  for (int i = 0; i < n; ++i) jets.push_back(RealJet::variable(p[static_cast<std::size_t>(i)], i, n));
  const RealJet j = e.eval<RealJet>(jets);
  auto f = [&](std::vector<double> q) { return e.eval<double>(q); };

  AdErrors err;
  double gnorm = 1.0, hnorm = 1.0;
  for (int a = 0; a < n; ++a) {
    gnorm = std::max(gnorm, std::abs(j.d(a)));
    for (int b = 0; b < n; ++b) hnorm = std::max(hnorm, std::abs(j.dd(a, b)));
  }
  const double h1 = 1e-5, h2 = 1e-4;
  for (int a = 0; a < n; ++a) {
    std::vector<double> pp = p, pm = p;
    pp[static_cast<std::size_t>(a)] += h1;
    pm[static_cast<std::size_t>(a)] -= h1;
    const double fd = (f(pp) - f(pm)) / (2 * h1);
    err.first = std::max(err.first, std::abs(fd - j.d(a)) / gnorm);
    for (int b = 0; b < n; ++b) {
      auto shifted = [&](double sa, double sb) {
        std::vector<double> q = p;
        q[static_cast<std::size_t>(a)] += sa;
        q[static_cast<std::size_t>(b)] += sb;
        return f(q);
      };
      const double fdd = (shifted(h2, h2) - shifted(h2, -h2) - shifted(-h2, h2) + shifted(-h2, -h2)) / (4 * h2 * h2);
      err.second = std::max(err.second, std::abs(fdd - j.dd(a, b)) / hnorm);
    }
  }
  return err;
}
