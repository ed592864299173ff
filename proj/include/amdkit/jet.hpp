#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <type_traits>

namespace amdkit {

inline constexpr int kMaxJetVars = 4;
inline constexpr int kJetPacked = kMaxJetVars * (kMaxJetVars + 1) / 2;

constexpr int packed_index(int a, int b) {
  return a >= b ? a * (a + 1) / 2 + b : b * (b + 1) / 2 + a;
}

/// Second-order forward-mode jet over a scalar S (double or complex):
/// value, gradient and packed symmetric Hessian with respect to up to
/// kMaxJetVars seeded variables. A jet with vars == 0 is a constant and
/// broadcasts against jets of any width.
template <class S>
struct Jet {
  S value{};
  std::array<S, kMaxJetVars> grad{};
  std::array<S, kJetPacked> hess{};
  int vars = 0;

  Jet() = default;
  Jet(S c) : value(c) {}  // NOLINT(google-explicit-constructor): constants promote

  static Jet variable(S v, int index, int vars) {
    Jet j(v);
    j.vars = vars;
    j.grad[index] = S(1);
    return j;
  }

  S d(int a) const { return grad[a]; }
  S dd(int a, int b) const { return hess[packed_index(a, b)]; }
};

using RealJet = Jet<double>;
using ComplexJet = Jet<std::complex<double>>;

template <class T>
struct is_jet : std::false_type {};
template <class S>
struct is_jet<Jet<S>> : std::true_type {};

/// Applies a scalar function through the chain rule given f, f', f'' at the
/// jet's value.
template <class S>
Jet<S> chain(const Jet<S>& a, S f0, S f1, S f2) {
  Jet<S> r;
  r.vars = a.vars;
  r.value = f0;
  for (int i = 0; i < a.vars; ++i) r.grad[i] = f1 * a.grad[i];
  for (int i = 0; i < a.vars; ++i)
    for (int j = 0; j <= i; ++j) {
      const int p = packed_index(i, j);
      r.hess[p] = f1 * a.hess[p] + f2 * a.grad[i] * a.grad[j];
    }
  return r;
}

template <class S>
Jet<S> operator+(const Jet<S>& a, const Jet<S>& b) {
  Jet<S> r;
  r.vars = std::max(a.vars, b.vars);
  r.value = a.value + b.value;
  for (int i = 0; i < r.vars; ++i) r.grad[i] = a.grad[i] + b.grad[i];
  for (int p = 0; p < r.vars * (r.vars + 1) / 2; ++p) r.hess[p] = a.hess[p] + b.hess[p];
  return r;
}

template <class S>
Jet<S> operator-(const Jet<S>& a) {
  Jet<S> r;
  r.vars = a.vars;
  r.value = -a.value;
  for (int i = 0; i < r.vars; ++i) r.grad[i] = -a.grad[i];
  for (int p = 0; p < r.vars * (r.vars + 1) / 2; ++p) r.hess[p] = -a.hess[p];
  return r;
}

template <class S>
Jet<S> operator-(const Jet<S>& a, const Jet<S>& b) {
  Jet<S> r;
  r.vars = std::max(a.vars, b.vars);
  r.value = a.value - b.value;
  for (int i = 0; i < r.vars; ++i) r.grad[i] = a.grad[i] - b.grad[i];
  for (int p = 0; p < r.vars * (r.vars + 1) / 2; ++p) r.hess[p] = a.hess[p] - b.hess[p];
  return r;
}

template <class S>
Jet<S> operator*(const Jet<S>& a, const Jet<S>& b) {
  Jet<S> r;
  r.vars = std::max(a.vars, b.vars);
  r.value = a.value * b.value;
  for (int i = 0; i < r.vars; ++i) r.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
  for (int i = 0; i < r.vars; ++i)
    for (int j = 0; j <= i; ++j) {
      const int p = packed_index(i, j);
      r.hess[p] = a.hess[p] * b.value + a.value * b.hess[p] + a.grad[i] * b.grad[j] +
                  a.grad[j] * b.grad[i];
    }
  return r;
}

template <class S>
Jet<S> reciprocal(const Jet<S>& a) {
  const S inv = S(1) / a.value;
  return chain(a, inv, -inv * inv, S(2) * inv * inv * inv);
}

template <class S>
Jet<S> operator/(const Jet<S>& a, const Jet<S>& b) {
  return a * reciprocal(b);
}

template <class S>
Jet<S> sin(const Jet<S>& a) {
  using std::cos, std::sin;
  const S s = sin(a.value);
  return chain(a, s, cos(a.value), -s);
}

template <class S>
Jet<S> cos(const Jet<S>& a) {
  using std::cos, std::sin;
  const S c = cos(a.value);
  return chain(a, c, -sin(a.value), -c);
}

template <class S>
Jet<S> sinh(const Jet<S>& a) {
  using std::cosh, std::sinh;
  const S s = sinh(a.value);
  return chain(a, s, cosh(a.value), s);
}

template <class S>
Jet<S> cosh(const Jet<S>& a) {
  using std::cosh, std::sinh;
  const S c = cosh(a.value);
  return chain(a, c, sinh(a.value), c);
}

template <class S>
Jet<S> tanh(const Jet<S>& a) {
  using std::tanh;
  const S t = tanh(a.value);
  const S d1 = S(1) - t * t;
  return chain(a, t, d1, S(-2) * t * d1);
}

template <class S>
Jet<S> exp(const Jet<S>& a) {
  using std::exp;
  const S e = exp(a.value);
  return chain(a, e, e, e);
}

template <class S>
Jet<S> sqrt(const Jet<S>& a) {
  using std::sqrt;
  const S s = sqrt(a.value);
  return chain(a, s, S(0.5) / s, S(-0.25) / (s * s * s));
}

/// x^n for integer n (n may be negative; x must then be nonzero).
template <class S>
S ipow(S x, int n) {
  if (n < 0) return S(1) / ipow(x, -n);
  S r(1);
  S base = x;
  while (n > 0) {
    if (n & 1) r *= base;
    base *= base;
    n >>= 1;
  }
  return r;
}

template <class S>
Jet<S> ipow(const Jet<S>& a, int n) {
  if (n == 0) return Jet<S>(S(1));
  const S f1 = S(double(n)) * ipow(a.value, n - 1);
  const S f2 = n == 1 ? S(0) : S(double(n) * (n - 1)) * ipow(a.value, n - 2);
  return chain(a, ipow(a.value, n), f1, f2);
}

}  // namespace amdkit
