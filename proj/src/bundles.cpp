#include "amdkit/bundles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>

#include "amdkit/errors.hpp"

namespace amdkit {

namespace {

using JVec = std::vector<RealJet>;
using cplx = std::complex<double>;

RealJet dot(const JVec& a, const JVec& b) {
  RealJet s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s = s + a[i] * b[i];
  return s;
}

JVec cross(const JVec& a, const JVec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Determinant by elimination with partial pivoting on the values.
RealJet det(std::vector<JVec> rows) {
  const std::size_t n = rows.size();
  RealJet d(1.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(rows[r][c].value) > std::abs(rows[pivot][c].value)) pivot = r;
    }
    if (rows[pivot][c].value == 0.0) return RealJet(0.0);
    if (pivot != c) {
      std::swap(rows[pivot], rows[c]);
      d = -d;
    }
    d = d * rows[c][c];
    const RealJet inv = reciprocal(rows[c][c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const RealJet factor = rows[r][c] * inv;
      for (std::size_t k = c; k < n; ++k) rows[r][k] = rows[r][k] - factor * rows[c][k];
    }
  }
  return d;
}

// Tangent vectors as first-order jets in the base parameters. Without
// Hessians the jets are constants (only values are needed).
std::vector<JVec> tangent_jets(const Mat& jac, const std::vector<Mat>* hessians) {
  const int n = static_cast<int>(jac.rows());
  const int m = static_cast<int>(jac.cols());
  if (hessians && m > kMaxJetVars) throw InvalidInput("bundle bases support at most 4 parameters");
  std::vector<JVec> t(static_cast<std::size_t>(m), JVec(static_cast<std::size_t>(n)));
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) {
      RealJet& x = t[a][i];
      x = RealJet(jac(i, a));
      if (hessians) {
        x.vars = m;
        for (int b = 0; b < m; ++b) x.grad[b] = (*hessians)[i](a, b);
      }
    }
  return t;
}

// Orthonormal normal frame, positively oriented after the tangent frame.
std::vector<JVec> normal_frame(const std::vector<JVec>& tangent, int n) {
  const int m = static_cast<int>(tangent.size());
  std::vector<JVec> normals;
  if (m == n - 1) {
    JVec nu(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::vector<JVec> rows;
      for (int r = 0; r < n; ++r) {
        if (r == i) continue;
        JVec row;
        for (int a = 0; a < m; ++a) row.push_back(tangent[a][r]);
        rows.push_back(std::move(row));
      }
      // Cofactor of the last column at row i.
      const RealJet minor = det(std::move(rows));
      nu[i] = ((i + n - 1) % 2 == 0) ? minor : -minor;
    }
    const RealJet len2 = dot(nu, nu);
    if (!(len2.value > 1e-24)) throw DegeneracyError("degenerate tangent frame: cannot form the normal");
    const RealJet inv = reciprocal(sqrt(len2));
    for (auto& x : nu) x = x * inv;
    normals.push_back(std::move(nu));
    return normals;
  }
  // Gram-Schmidt: tangent vectors first, then coordinate axes in fixed order.
  std::vector<JVec> basis;
  auto orthonormalize = [&](JVec v) {
    for (const JVec& q : basis) {
      const RealJet c = dot(v, q);
      for (int i = 0; i < n; ++i) v[i] = v[i] - c * q[i];
    }
    const RealJet len2 = dot(v, v);
    return std::make_pair(v, len2);
  };
  for (const JVec& t : tangent) {
    auto [v, len2] = orthonormalize(t);
    if (!(len2.value > 1e-24)) throw DegeneracyError("degenerate tangent frame");
    const RealJet inv = reciprocal(sqrt(len2));
    for (auto& x : v) x = x * inv;
    basis.push_back(std::move(v));
  }
  for (int axis = 0; axis < n && static_cast<int>(normals.size()) < n - m; ++axis) {
    JVec e(static_cast<std::size_t>(n), RealJet(0.0));
    e[axis] = RealJet(1.0);
    auto [v, len2] = orthonormalize(e);
    // Some axis always has residual >= 1/sqrt(n) > 0.25.
    if (len2.value < 0.0625) continue;
    const RealJet inv = reciprocal(sqrt(len2));
    for (auto& x : v) x = x * inv;
    basis.push_back(v);
    normals.push_back(std::move(v));
  }
  if (static_cast<int>(normals.size()) != n - m) throw DegeneracyError("could not seed a normal frame");
  Mat frame(n, n);
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < n; ++i) frame(i, c) = c < m ? tangent[c][i].value : normals[c - m][i].value;
  if (frame.determinant() < 0) {
    for (auto& x : normals.back()) x = -x;
  }
  return normals;
}

class BundleMap final : public Map {
 public:
  BundleMap(MapPtr base, std::optional<expr::Expression> rho)
      : base_(std::move(base)), rho_(std::move(rho)), m_(base_->param_dim()), n_(base_->ambient_dim()) {}

  int param_dim() const override { return n_; }
  int ambient_dim() const override { return 2 * n_; }

  Vec value(std::span<const double> p) const override {
    const auto u = p.first(static_cast<std::size_t>(m_));
    const Jet1 bj = base_->jet1(u);
    const auto tangent = tangent_jets(bj.jacobian, nullptr);
    const auto frame = normal_frame(tangent, n_);
    const JVec twist = twist_jets(u, tangent, frame, false);
    Vec out(2 * n_);
    out.head(n_) = bj.point;
    for (int i = 0; i < n_; ++i) {
      double s = twist[i].value;
      for (int j = 0; j < n_ - m_; ++j) s += p[m_ + j] * frame[j][i].value;
      out[n_ + i] = s;
    }
    return out;
  }

  Jet1 jet1(std::span<const double> p) const override {
    const auto u = p.first(static_cast<std::size_t>(m_));
    const Jet2 bj = base_->jet2(u);
    const auto tangent = tangent_jets(bj.jacobian, &bj.hessians);
    const auto frame = normal_frame(tangent, n_);
    const JVec twist = twist_jets(u, tangent, frame, true);
    Jet1 out{Vec(2 * n_), Mat::Zero(2 * n_, n_)};
    out.point.head(n_) = bj.point;
    out.jacobian.topLeftCorner(n_, m_) = bj.jacobian;
    for (int i = 0; i < n_; ++i) {
      double s = twist[i].value;
      for (int a = 0; a < m_; ++a) out.jacobian(n_ + i, a) = twist[i].grad[a];
      for (int j = 0; j < n_ - m_; ++j) {
        const double t = p[m_ + j];
        s += t * frame[j][i].value;
        for (int a = 0; a < m_; ++a) out.jacobian(n_ + i, a) += t * frame[j][i].grad[a];
        out.jacobian(n_ + i, m_ + j) = frame[j][i].value;
      }
      out.point[n_ + i] = s;
    }
    return out;
  }

 private:
  // tau x n for the twisted bundle, zero otherwise.
  JVec twist_jets(std::span<const double> u, const std::vector<JVec>& tangent, const std::vector<JVec>& frame,
                  bool derivs) const {
    JVec zero(static_cast<std::size_t>(n_), RealJet(0.0));
    if (!rho_) return zero;
    std::vector<RealJet> vars;
    for (int a = 0; a < m_; ++a) vars.push_back(RealJet::variable(u[a], a, m_));
    const RealJet r = rho_->eval<RealJet>(vars);
    std::array<RealJet, 2> grad;
    for (int a = 0; a < 2; ++a) {
      grad[a] = RealJet(r.grad[a]);
      if (derivs) {
        grad[a].vars = m_;
        for (int b = 0; b < m_; ++b) grad[a].grad[b] = r.dd(a, b);
      }
    }
    const JVec normal_area = cross(tangent[0], tangent[1]);
    const RealJet inv_area = reciprocal(sqrt(dot(normal_area, normal_area)));
    JVec tau(3);
    for (int i = 0; i < 3; ++i) tau[i] = (grad[0] * tangent[1][i] - grad[1] * tangent[0][i]) * inv_area;
    return cross(tau, frame[0]);
  }

  MapPtr base_;
  std::optional<expr::Expression> rho_;
  int m_;
  int n_;
};

std::vector<Interval> default_fiber(std::vector<Interval> box, int dim) {
  if (box.empty()) box.assign(static_cast<std::size_t>(dim), Interval{-1.0, 1.0});
  if (static_cast<int>(box.size()) != dim) {
    throw InvalidInput("fiber box needs " + std::to_string(dim) + " intervals");
  }
  return box;
}

std::vector<std::string> bundle_param_names(const Immersion& base, int fiber_dim) {
  std::vector<std::string> names = base.param_names();
  if (fiber_dim == 1) {
    names.push_back("t");
  } else {
    for (int j = 1; j <= fiber_dim; ++j) names.push_back("t" + std::to_string(j));
  }
  return names;
}

std::vector<std::string> bundle_coord_names(int n) {
  auto names = default_coord_names(n, "x");
  const auto ys = default_coord_names(n, "y");
  names.insert(names.end(), ys.begin(), ys.end());
  return names;
}

BundleImmersion make_bundle(const Immersion& base, std::optional<expr::Expression> rho, std::vector<Interval> fiber) {
  const int m = base.param_dim();
  const int n = base.ambient_dim();
  if (n - m < 1) throw InvalidInput("normal bundle needs codimension >= 1");
  fiber = default_fiber(std::move(fiber), n - m);
  auto map = std::make_shared<BundleMap>(base.map_ptr(), std::move(rho));
  Immersion total(map, base.region().extended(fiber), bundle_param_names(base, n - m), bundle_coord_names(n));
  return BundleImmersion{base, n - m, std::move(total)};
}

}  // namespace

BundleImmersion normal_bundle(const Immersion& base, std::vector<Interval> fiber_box) {
  return make_bundle(base, std::nullopt, std::move(fiber_box));
}

double harmonic_defect(const Immersion& m, const expr::Expression& rho, int samples, std::uint64_t seed) {
  const int k = m.param_dim();
  if (k > kMaxJetVars) throw InvalidInput("too many parameters for the Laplacian");
  if (rho.variables().size() > static_cast<std::size_t>(k)) {
    throw InvalidInput("rho uses more variables than the surface has parameters");
  }
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec p = m.region().sample_interior(rng);
    const Jet2 j = m.map().jet2(std::span<const double>(p.data(), p.size()));
    const Mat g = first_fundamental(j);
    const Mat ginv = g.inverse();
    std::vector<RealJet> vars;
    for (int a = 0; a < k; ++a) vars.push_back(RealJet::variable(p[a], a, k));
    const RealJet r = rho.eval<RealJet>(vars);
    double lap = 0.0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        double term = r.dd(a, b);
        for (int c = 0; c < k; ++c) {
          double gamma = 0.0;
          for (int d = 0; d < k; ++d) {
            double inner = 0.0;
            for (int i = 0; i < m.ambient_dim(); ++i) inner += j.hessians[i](a, b) * j.jacobian(i, d);
            gamma += ginv(c, d) * inner;
          }
          term -= gamma * r.grad[c];
        }
        lap += ginv(a, b) * term;
      }
    worst = std::max(worst, std::abs(lap));
  }
  return worst;
}

double max_mean_curvature(const Immersion& m, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec p = m.region().sample_interior(rng);
    worst = std::max(worst, mean_curvature_vector(m.map().jet2(std::span<const double>(p.data(), p.size()))).norm());
  }
  return worst;
}

BundleImmersion borisenko_bundle(const Immersion& base, const expr::Expression& rho, std::vector<Interval> fiber_box,
                                 int samples, std::uint64_t seed, double tol) {
  if (base.param_dim() != 2 || base.ambient_dim() != 3) throw InvalidInput("twisted bundle needs a surface in R^3");
  const double h = max_mean_curvature(base, samples, seed);
  if (h > tol) throw PreconditionError("base surface is not minimal", h);
  const double lap = harmonic_defect(base, rho, samples, seed);
  if (lap > tol) throw PreconditionError("rho is not harmonic on the base surface", lap);
  return make_bundle(base, rho, std::move(fiber_box));
}

// Bjorling problem.

namespace {

using C3 = std::array<cplx, 3>;

C3 ccross(const C3& a, const C3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct CurveJet {
  C3 c, c1, c2, n, n1;
};

class BjorlingMap final : public Map {
 public:
  explicit BjorlingMap(BjorlingData data) : data_(std::move(data)) {}

  int param_dim() const override { return 2; }
  int ambient_dim() const override { return 3; }

  Vec value(std::span<const double> p) const override {
    const CurveJet cj = at(cplx(p[0], p[1]));
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = cj.c[i].real();
    const auto integral = strip_integral(p[0], p[1]);
    for (int i = 0; i < 3; ++i) x[i] += integral[i];
    return x;
  }

  Jet1 jet1(std::span<const double> p) const override {
    const CurveJet cj = at(cplx(p[0], p[1]));
    Jet1 out{value(p), Mat(3, 2)};
    const C3 g = ccross(cj.n, cj.c1);
    for (int i = 0; i < 3; ++i) {
      const cplx d = cj.c1[i] - cplx(0, 1) * g[i];
      out.jacobian(i, 0) = d.real();
      out.jacobian(i, 1) = -d.imag();
    }
    return out;
  }

  Jet2 jet2(std::span<const double> p) const override {
    const CurveJet cj = at(cplx(p[0], p[1]));
    Jet1 j1 = jet1(p);
    Jet2 out{std::move(j1.point), std::move(j1.jacobian), std::vector<Mat>(3, Mat(2, 2))};
    const C3 a = ccross(cj.n1, cj.c1);
    const C3 b = ccross(cj.n, cj.c2);
    for (int i = 0; i < 3; ++i) {
      const cplx d2 = cj.c2[i] - cplx(0, 1) * (a[i] + b[i]);
      out.hessians[i] << d2.real(), -d2.imag(), -d2.imag(), -d2.real();
    }
    return out;
  }

  CurveJet at(cplx z) const {
    const ComplexJet var = ComplexJet::variable(z, 0, 1);
    const std::span<const ComplexJet> bind(&var, 1);
    CurveJet out;
    std::array<ComplexJet, 3> n;
    for (int i = 0; i < 3; ++i) {
      const ComplexJet c = data_.curve[i].eval<ComplexJet>(bind);
      out.c[i] = c.value;
      out.c1[i] = c.grad[0];
      out.c2[i] = c.dd(0, 0);
      n[i] = data_.unit_normal.empty() ? data_.normal[i].eval<ComplexJet>(bind)
                                       : data_.unit_normal[i].eval<ComplexJet>(bind);
    }
    if (data_.unit_normal.empty()) {
      const ComplexJet norm = data_.normal_norm->eval<ComplexJet>(bind);
      if (norm.value == cplx(0.0)) throw expr::EvalError("normal norm vanishes", data_.normal_norm->to_string());
      const ComplexJet inv = reciprocal(norm);
      for (auto& x : n) x = x * inv;
    }
    for (int i = 0; i < 3; ++i) {
      out.n[i] = n[i].value;
      out.n1[i] = n[i].grad[0];
    }
    return out;
  }

 private:
  // int_0^v Re (n x c')(u + i s) ds with 64-point Gauss-Legendre, checked
  // against the same rule on the two halves.
  std::array<double, 3> strip_integral(double u, double v) const {
    std::array<double, 3> whole{0, 0, 0};
    if (v == 0.0) return whole;
    auto rule = [&](double a, double b, std::array<double, 3>& acc) {
      const GaussRule& g = gauss_legendre(64);
      const double half = 0.5 * (b - a);
      for (std::size_t q = 0; q < g.nodes.size(); ++q) {
        const double s = a + half * (g.nodes[q] + 1.0);
        const CurveJet cj = at(cplx(u, s));
        const C3 gv = ccross(cj.n, cj.c1);
        for (int i = 0; i < 3; ++i) acc[i] += half * g.weights[q] * gv[i].real();
      }
    };
    rule(0.0, v, whole);
    std::array<double, 3> halves{0, 0, 0};
    rule(0.0, 0.5 * v, halves);
    rule(0.5 * v, v, halves);
    for (int i = 0; i < 3; ++i) {
      if (std::abs(whole[i] - halves[i]) > 1e-9 * std::max(1.0, std::abs(halves[i]))) {
        throw NumericalError("Bjorling path integral did not converge at (" + std::to_string(u) + ", " +
                             std::to_string(v) + ")");
      }
    }
    return halves;
  }

  BjorlingData data_;
};

struct RealCurvePoint {
  Vec c, c1, normal;
};

RealCurvePoint real_point(const BjorlingData& d, double t) {
  const RealJet var = RealJet::variable(t, 0, 1);
  const std::span<const RealJet> bind(&var, 1);
  RealCurvePoint out{Vec(3), Vec(3), Vec(3)};
  for (int i = 0; i < 3; ++i) {
    const RealJet c = d.curve[i].eval<RealJet>(bind);
    out.c[i] = c.value;
    out.c1[i] = c.grad[0];
    out.normal[i] = (d.normal.empty() ? d.unit_normal[i] : d.normal[i]).eval<RealJet>(bind).value;
  }
  return out;
}

}  // namespace

void BjorlingData::validate(int samples) const {
  if (curve.size() != 3) throw InvalidInput("Bjorling curve needs 3 components");
  if (!normal.empty() && normal.size() != 3) throw InvalidInput("Bjorling normal needs 3 components");
  if (!unit_normal.empty() && unit_normal.size() != 3) throw InvalidInput("Bjorling unit normal needs 3 components");
  if (normal.empty() && unit_normal.empty()) throw InvalidInput("Bjorling data needs a normal field");
  if (unit_normal.empty() && !normal_norm) {
    throw InvalidInput(
        "Bjorling data needs either 'unit_normal' expressions or a 'normal_norm' expression for |normal|; "
        "the toolkit does not take analytic square roots on its own because of branch ambiguity");
  }
  if (!(interval.hi > interval.lo)) throw InvalidInput("Bjorling interval must have lo < hi");
  if (!(v_max > 0.0)) throw InvalidInput("Bjorling strip half-width must be positive");
  double ortho = 0.0;
  double min_norm = std::numeric_limits<double>::infinity();
  double unit_dev = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = interval.lo + interval.width() * s / std::max(1, samples - 1);
    const RealCurvePoint p = real_point(*this, t);
    ortho = std::max(ortho, std::abs(p.c1.dot(p.normal)));
    min_norm = std::min(min_norm, p.normal.norm());
    const std::span<const double> bind(&t, 1);
    if (!unit_normal.empty()) {
      Vec un(3);
      for (int i = 0; i < 3; ++i) un[i] = unit_normal[i].eval<double>(bind);
      if (p.normal.norm() > 0) unit_dev = std::max(unit_dev, (un - p.normal.normalized()).norm());
    } else {
      unit_dev = std::max(unit_dev, std::abs(normal_norm->eval<double>(bind) - p.normal.norm()));
    }
  }
  if (!(min_norm > 1e-8)) throw PreconditionError("normal field vanishes on the interval", min_norm);
  if (ortho > 1e-8) throw PreconditionError("curve tangent is not orthogonal to the normal field", ortho);
  if (unit_dev > 1e-8) throw PreconditionError("unit normal is inconsistent with the normal field", unit_dev);
}

Immersion bjorling_solve(const BjorlingData& data) {
  data.validate();
  auto map = std::make_shared<BjorlingMap>(data);
  Region region({data.interval, Interval{-data.v_max, data.v_max}});
  return Immersion(map, region, {"u", "v"});
}

BjorlingBundle bjorling_bundle(const BjorlingData& data, std::vector<Interval> fiber_box, int samples,
                               std::uint64_t seed) {
  Immersion surface = bjorling_solve(data);
  double max_normal = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = data.interval.lo + data.interval.width() * s / std::max(1, samples - 1);
    max_normal = std::max(max_normal, real_point(data, t).normal.norm());
  }
  if (fiber_box.empty()) {
    const double half = std::max(1.0, 1.25 * max_normal);
    fiber_box = {Interval{-half, half}};
  }
  BundleImmersion bundle = normal_bundle(surface, fiber_box);

  double curve_dist = 0.0;
  double normal_angle = 0.0;
  double line_dist = 0.0;
  double fiber_margin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const double t = data.interval.lo + data.interval.width() * s / std::max(1, samples - 1);
    const RealCurvePoint cp = real_point(data, t);
    const std::array<double, 3> p{t, 0.0, 0.0};
    const Vec x = bundle.total.map().value(p);
    const Jet1 fiber_dir = bundle.total.map().jet1(p);
    const Vec nu = fiber_dir.jacobian.col(2).tail(3);
    curve_dist = std::max(curve_dist, (x.head(3) - cp.c).norm());
    normal_angle = std::max(normal_angle, std::acos(std::clamp(nu.dot(cp.normal.normalized()), -1.0, 1.0)));
    const double coord = cp.normal.dot(nu);
    line_dist = std::max(line_dist, (cp.normal - coord * nu).norm());
    fiber_margin = std::min(fiber_margin, std::min(coord - fiber_box[0].lo, fiber_box[0].hi - coord));
  }
  const double h = max_mean_curvature(surface, samples, seed);

  Report r;
  r.check = "bjorling";
  r.seed = seed;
  r.samples = 2L * samples;
  r.set("max_mean_curvature", h, 1e-6);
  r.set("max_curve_distance", curve_dist, 1e-8);
  r.set("max_normal_angle", normal_angle, 1e-6);
  r.set("max_normal_line_distance", line_dist, 1e-6);
  r.set("min_fiber_margin", fiber_margin);
  r.require(h < 1e-6);
  r.require(curve_dist < 1e-8);
  r.require(normal_angle < 1e-6);
  r.require(line_dist < 1e-6);
  r.require(fiber_margin >= 0.0);
  return BjorlingBundle{std::move(surface), std::move(bundle), std::move(r)};
}

}  // namespace amdkit
