#include "amdkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amdkit/errors.hpp"

namespace amdkit {

namespace {

constexpr double kFdStep = 1e-5;

std::vector<RealJet> seeded(std::span<const double> p) {
  const int k = static_cast<int>(p.size());
  if (k > kMaxJetVars) {
    throw InvalidInput("expression maps support at most " + std::to_string(kMaxJetVars) + " parameters");
  }
  std::vector<RealJet> vars;
  vars.reserve(p.size());
  for (int i = 0; i < k; ++i) vars.push_back(RealJet::variable(p[i], i, k));
  return vars;
}

}  // namespace

Jet2 Map::jet2(std::span<const double> p) const {
  const int k = param_dim();
  const int n = ambient_dim();
  Jet1 base = jet1(p);
  Jet2 out{base.point, base.jacobian, std::vector<Mat>(static_cast<std::size_t>(n), Mat::Zero(k, k))};
  std::vector<double> q(p.begin(), p.end());
  for (int b = 0; b < k; ++b) {
    q[b] = p[b] + kFdStep;
    const Mat plus = jet1(q).jacobian;
    q[b] = p[b] - kFdStep;
    const Mat minus = jet1(q).jacobian;
    q[b] = p[b];
    const Mat d = (plus - minus) / (2.0 * kFdStep);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < k; ++a) out.hessians[i](a, b) = d(i, a);
  }
  for (Mat& h : out.hessians) h = 0.5 * (h + h.transpose()).eval();
  return out;
}

ExpressionMap::ExpressionMap(std::vector<expr::Expression> components) : components_(std::move(components)) {
  if (components_.empty()) throw InvalidInput("expression map needs at least one component");
  param_dim_ = static_cast<int>(components_.front().variables().size());
  for (const auto& c : components_) {
    if (c.variables() != components_.front().variables()) {
      throw InvalidInput("expression map components must share one variable list");
    }
  }
  if (param_dim_ > kMaxJetVars) throw InvalidInput("too many parameters for an expression map");
}

ExpressionMap::ExpressionMap(const std::vector<std::string>& params, const std::vector<std::string>& components)
    : ExpressionMap([&] {
        std::vector<expr::Expression> parsed;
        for (const auto& c : components) parsed.push_back(expr::parse(c, params));
        return parsed;
      }()) {
  param_dim_ = static_cast<int>(params.size());
}

Vec ExpressionMap::value(std::span<const double> p) const {
  Vec v(ambient_dim());
  for (int i = 0; i < ambient_dim(); ++i) v[i] = components_[i].eval<double>(p);
  return v;
}

Jet1 ExpressionMap::jet1(std::span<const double> p) const {
  const auto vars = seeded(p);
  const int k = param_dim_;
  Jet1 out{Vec(ambient_dim()), Mat(ambient_dim(), k)};
  for (int i = 0; i < ambient_dim(); ++i) {
    const RealJet r = components_[i].eval<RealJet>(vars);
    out.point[i] = r.value;
    for (int a = 0; a < k; ++a) out.jacobian(i, a) = r.grad[a];
  }
  return out;
}

Jet2 ExpressionMap::jet2(std::span<const double> p) const {
  const auto vars = seeded(p);
  const int k = param_dim_;
  const int n = ambient_dim();
  Jet2 out{Vec(n), Mat(n, k), std::vector<Mat>(static_cast<std::size_t>(n), Mat(k, k))};
  for (int i = 0; i < n; ++i) {
    const RealJet r = components_[i].eval<RealJet>(vars);
    out.point[i] = r.value;
    for (int a = 0; a < k; ++a) {
      out.jacobian(i, a) = r.grad[a];
      for (int b = 0; b < k; ++b) out.hessians[i](a, b) = r.dd(a, b);
    }
  }
  return out;
}

LinearImageMap::LinearImageMap(Mat a, MapPtr base) : a_(std::move(a)), base_(std::move(base)) {
  if (a_.cols() != base_->ambient_dim()) throw InvalidInput("linear image: matrix/map dimension mismatch");
}

Vec LinearImageMap::value(std::span<const double> p) const { return a_ * base_->value(p); }

Jet1 LinearImageMap::jet1(std::span<const double> p) const {
  Jet1 j = base_->jet1(p);
  return Jet1{a_ * j.point, a_ * j.jacobian};
}

Jet2 LinearImageMap::jet2(std::span<const double> p) const {
  Jet2 j = base_->jet2(p);
  const int k = param_dim();
  std::vector<Mat> h(static_cast<std::size_t>(a_.rows()), Mat::Zero(k, k));
  for (Eigen::Index i = 0; i < a_.rows(); ++i)
    for (Eigen::Index m = 0; m < a_.cols(); ++m)
      if (a_(i, m) != 0.0) h[i] += a_(i, m) * j.hessians[m];
  return Jet2{a_ * j.point, a_ * j.jacobian, std::move(h)};
}

ComposedMap::ComposedMap(MapPtr outer, MapPtr inner) : outer_(std::move(outer)), inner_(std::move(inner)) {
  if (inner_->ambient_dim() != outer_->param_dim()) throw InvalidInput("composed maps have mismatched dimensions");
}

Vec ComposedMap::value(std::span<const double> p) const {
  const Vec mid = inner_->value(p);
  return outer_->value(std::span<const double>(mid.data(), mid.size()));
}

Jet1 ComposedMap::jet1(std::span<const double> p) const {
  const Jet1 in = inner_->jet1(p);
  Jet1 out = outer_->jet1(std::span<const double>(in.point.data(), in.point.size()));
  out.jacobian = out.jacobian * in.jacobian;
  return out;
}

Predicate parse_predicate(const std::string& text, const std::vector<std::string>& variables) {
  for (const char* op : {"<=", ">="}) {
    const auto pos = text.find(op);
    if (pos == std::string::npos) continue;
    const std::string lhs = text.substr(0, pos);
    const std::string rhs = text.substr(pos + 2);
    const std::string g = op[0] == '<' ? "(" + lhs + ") - (" + rhs + ")" : "(" + rhs + ") - (" + lhs + ")";
    try {
      // Validate each side separately so error columns refer to the user's text.
      expr::parse(lhs, variables);
      expr::parse(rhs, variables);
    } catch (const expr::SyntaxError& e) {
      throw InvalidInput("in predicate '" + text + "': " + e.what());
    }
    return Predicate{expr::parse(g, variables), text};
  }
  throw InvalidInput("predicate '" + text + "' must have the form 'lhs <= rhs' or 'lhs >= rhs'");
}

Region::Region(std::vector<Interval> box) : box_(std::move(box)) {
  for (const auto& iv : box_) {
    if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi)) || iv.hi < iv.lo) {
      throw InvalidInput("region box must be bounded with lo <= hi");
    }
  }
}

Region Region::with_clip(Clip clip) const {
  if (clip.param_count > dim()) throw InvalidInput("clip uses more parameters than the region has");
  Region r = *this;
  r.clips_.push_back(std::move(clip));
  return r;
}

Region Region::extended(const std::vector<Interval>& extra) const {
  Region r = *this;
  for (const auto& iv : extra) {
    if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi)) || iv.hi < iv.lo) {
      throw InvalidInput("region box must be bounded with lo <= hi");
    }
    r.box_.push_back(iv);
  }
  return r;
}

bool Region::in_box(std::span<const double> p, double tol) const {
  if (static_cast<int>(p.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (p[i] < box_[i].lo - tol || p[i] > box_[i].hi + tol) return false;
  }
  return true;
}

double Region::predicate_value(std::span<const double> p) const {
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<double> bindings;
  for (const Clip& clip : clips_) {
    const auto params = p.first(static_cast<std::size_t>(clip.param_count));
    const Vec coords = clip.coords->value(params);
    bindings.assign(params.begin(), params.end());
    bindings.insert(bindings.end(), coords.data(), coords.data() + coords.size());
    for (const Predicate& pr : clip.predicates) worst = std::max(worst, pr.g.eval<double>(bindings));
  }
  return worst;
}

bool Region::contains(std::span<const double> p) const {
  return in_box(p) && predicate_value(p) <= 0.0;
}

bool Region::on_boundary(std::span<const double> p, double tol) const {
  if (!in_box(p, tol)) return false;
  const double g = predicate_value(p);
  if (g > tol) return false;
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(p[i] - box_[i].lo) <= tol || std::abs(p[i] - box_[i].hi) <= tol) return true;
  }
  return clipped() && std::abs(g) <= tol;
}

Vec Region::outward_normal(std::span<const double> p, double tol) const {
  Vec normal = Vec::Zero(dim());
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(p[i] - box_[i].lo) <= tol) normal[i] -= 1.0;
    if (std::abs(p[i] - box_[i].hi) <= tol) normal[i] += 1.0;
  }
  for (const Clip& clip : clips_) {
    const int m = clip.param_count;
    if (m > kMaxJetVars) throw InvalidInput("predicate gradients support at most 4 parameters");
    const auto params = p.first(static_cast<std::size_t>(m));
    const Jet1 cj = clip.coords->jet1(params);
    std::vector<RealJet> bindings;
    for (int a = 0; a < m; ++a) bindings.push_back(RealJet::variable(params[a], a, m));
    for (Eigen::Index i = 0; i < cj.point.size(); ++i) {
      RealJet c(cj.point[i]);
      c.vars = m;
      for (int a = 0; a < m; ++a) c.grad[a] = cj.jacobian(i, a);
      bindings.push_back(c);
    }
    for (const Predicate& pr : clip.predicates) {
      const RealJet g = pr.g.eval<RealJet>(bindings);
      if (std::abs(g.value) > tol) continue;
      Vec grad = Vec::Zero(dim());
      for (int a = 0; a < m; ++a) grad[a] = g.grad[a];
      if (grad.norm() > 0) normal += grad.normalized();
    }
  }
  if (normal.norm() == 0.0) throw InvalidInput("point is not on the region boundary");
  return normal.normalized();
}

Vec Region::sample_interior(std::mt19937_64& rng, double margin) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec p(dim());
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (int i = 0; i < dim(); ++i) {
      const double w = box_[i].width();
      p[i] = box_[i].lo + margin * w + unit(rng) * w * (1.0 - 2.0 * margin);
    }
    if (contains(std::span<const double>(p.data(), p.size()))) return p;
  }
  throw InvalidInput("could not sample an interior point; region appears empty");
}

std::vector<Vec> Region::sample_boundary(int per_axis) const {
  const int k = dim();
  std::vector<Vec> out;
  if (k == 0) return out;
  const long count = [&] {
    long c = 1;
    for (int i = 0; i < k; ++i) c *= (per_axis + 1);
    return c;
  }();
  auto grid_point = [&](long idx) {
    Vec p(k);
    for (int i = 0; i < k; ++i) {
      const long c = idx % (per_axis + 1);
      idx /= (per_axis + 1);
      p[i] = box_[i].lo + box_[i].width() * static_cast<double>(c) / per_axis;
    }
    return p;
  };
  std::vector<char> inside(static_cast<std::size_t>(count));
  for (long idx = 0; idx < count; ++idx) {
    const Vec p = grid_point(idx);
    inside[idx] = contains(std::span<const double>(p.data(), p.size())) ? 1 : 0;
  }
  long stride = 1;
  for (int axis = 0; axis < k; ++axis) {
    for (long idx = 0; idx < count; ++idx) {
      const long c = (idx / stride) % (per_axis + 1);
      // Box faces.
      if ((c == 0 || c == per_axis) && inside[idx]) out.push_back(grid_point(idx));
      // Predicate crossings along this axis.
      if (c < per_axis && inside[idx] != inside[idx + stride]) {
        Vec a = grid_point(idx);
        Vec b = grid_point(idx + stride);
        if (!inside[idx]) std::swap(a, b);
        for (int it = 0; it < 50; ++it) {
          Vec mid = 0.5 * (a + b);
          if (contains(std::span<const double>(mid.data(), mid.size()))) {
            a = mid;
          } else {
            b = mid;
          }
        }
        out.push_back(a);
      }
    }
    stride *= (per_axis + 1);
  }
  return out;
}

std::vector<std::string> default_coord_names(int n, const std::string& prefix) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

Immersion::Immersion(MapPtr map, Region region, std::vector<std::string> param_names,
                     std::vector<std::string> coord_names)
    : map_(std::move(map)),
      region_(std::move(region)),
      param_names_(std::move(param_names)),
      coord_names_(std::move(coord_names)) {
  if (!map_) throw InvalidInput("immersion needs a map");
  if (region_.dim() != map_->param_dim()) {
    throw InvalidInput("region has " + std::to_string(region_.dim()) + " axes but the map has " +
                       std::to_string(map_->param_dim()) + " parameters");
  }
  if (param_names_.empty()) param_names_ = default_coord_names(map_->param_dim(), "u");
  if (coord_names_.empty()) coord_names_ = default_coord_names(map_->ambient_dim(), "x");
  if (static_cast<int>(param_names_.size()) != map_->param_dim() ||
      static_cast<int>(coord_names_.size()) != map_->ambient_dim()) {
    throw InvalidInput("immersion name lists do not match its dimensions");
  }
}

void Immersion::require_in_box(std::span<const double> p) const {
  if (!region_.in_box(p, 1e-12)) throw InvalidInput("parameter point outside the immersion domain");
}

Vec Immersion::value(std::span<const double> p) const {
  require_in_box(p);
  return map_->value(p);
}

Jet1 Immersion::jet1(std::span<const double> p) const {
  require_in_box(p);
  return map_->jet1(p);
}

Jet2 Immersion::jet2(std::span<const double> p) const {
  require_in_box(p);
  return map_->jet2(p);
}

Immersion Immersion::clipped(const std::vector<std::string>& predicates) const {
  if (predicates.empty()) return *this;
  std::vector<std::string> vars = param_names_;
  vars.insert(vars.end(), coord_names_.begin(), coord_names_.end());
  Region::Clip clip{map_, param_dim(), {}};
  for (const auto& text : predicates) clip.predicates.push_back(parse_predicate(text, vars));
  return with_region(region_.with_clip(std::move(clip)));
}

Immersion Immersion::with_region(Region region) const {
  return Immersion(map_, std::move(region), param_names_, coord_names_);
}

Immersion Immersion::with_map(MapPtr map) const {
  return Immersion(std::move(map), region_, param_names_,
                   map->ambient_dim() == ambient_dim() ? coord_names_ : std::vector<std::string>{});
}

Immersion Immersion::from_expressions(const std::vector<std::string>& params,
                                      const std::vector<std::string>& components,
                                      const std::vector<Interval>& box) {
  return Immersion(std::make_shared<ExpressionMap>(params, components), Region(box), params);
}

Jet2 jet2_eval(const Immersion& f, std::span<const double> p) { return f.jet2(p); }

namespace {

Mat gram_checked(const Mat& jac) {
  Mat g = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, g.diagonal().cwiseAbs().maxCoeff());
  if (g.rows() > 0 && es.eigenvalues().minCoeff() <= 1e-14 * scale) {
    throw DegeneracyError("first fundamental form is not positive definite (rank-deficient Jacobian)");
  }
  return g;
}

}  // namespace

Mat first_fundamental(const Jet1& j) { return gram_checked(j.jacobian); }
Mat first_fundamental(const Jet2& j) { return gram_checked(j.jacobian); }

double jacobian_min_singular(const Mat& jacobian) {
  if (jacobian.cols() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Mat> svd(jacobian);
  return svd.singularValues().minCoeff();
}

Vec unit_normal_hypersurface(const Mat& jac) {
  const Eigen::Index n = jac.rows();
  if (jac.cols() != n - 1) throw InvalidInput("hypersurface normal needs k == n - 1");
  Vec normal(n);
  Mat m(n, n);
  m.leftCols(n - 1) = jac;
  for (Eigen::Index i = 0; i < n; ++i) {
    m.col(n - 1).setZero();
    m(i, n - 1) = 1.0;
    normal[i] = small_det(m);
  }
  const double len = normal.norm();
  if (!(len > 1e-14)) throw DegeneracyError("degenerate tangent frame: cannot form a hypersurface normal");
  return normal / len;
}

Vec unit_normal_hypersurface(const Jet2& j) { return unit_normal_hypersurface(j.jacobian); }

Mat orthonormal_frame(const Mat& columns) {
  Mat q = columns;
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    const double original = columns.col(c).norm();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index prev = 0; prev < c; ++prev) q.col(c) -= q.col(prev).dot(q.col(c)) * q.col(prev);
    const double len = q.col(c).norm();
    if (!(len > 1e-12 * std::max(original, 1e-300)) || len == 0.0) {
      throw DegeneracyError("frame is rank-deficient");
    }
    q.col(c) /= len;
  }
  return q;
}

Vec random_unit_normal(const Mat& jacobian, std::mt19937_64& rng) {
  const Mat q = orthonormal_frame(jacobian);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec g(jacobian.rows());
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = gauss(rng);
    Vec r = g - q * (q.transpose() * g);
    if (r.norm() > 1e-6) return r.normalized();
  }
  throw DegeneracyError("normal space is empty (codimension 0)");
}

Mat shape_operator(const Jet2& j, const Vec& normal) {
  const Eigen::Index k = j.jacobian.cols();
  if (normal.size() != j.jacobian.rows()) throw InvalidInput("normal has wrong dimension");
  if (std::abs(normal.norm() - 1.0) > 1e-8) throw InvalidInput("normal is not a unit vector");
  const double tangential = (j.jacobian.transpose() * normal).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, j.jacobian.cwiseAbs().maxCoeff());
  if (tangential > 1e-8 * scale) throw InvalidInput("vector is not normal to the tangent space");
  Mat second(k, k);
  second.setZero();
  for (Eigen::Index i = 0; i < normal.size(); ++i) second += normal[i] * j.hessians[i];
  const Mat g = gram_checked(j.jacobian);
  return g.ldlt().solve(second);
}

std::vector<double> principal_curvatures(const Jet2& j, const Vec& normal) {
  // Validation and II assembly shared with shape_operator; the symmetric
  // generalized problem II x = kappa G x gives real sorted eigenvalues.
  shape_operator(j, normal);
  const Eigen::Index k = j.jacobian.cols();
  Mat second = Mat::Zero(k, k);
  for (Eigen::Index i = 0; i < normal.size(); ++i) second += normal[i] * j.hessians[i];
  second = 0.5 * (second + second.transpose()).eval();
  const Mat g = j.jacobian.transpose() * j.jacobian;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(second, g, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + k);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> principal_curvatures(const Immersion& f, std::span<const double> p, const Vec& normal) {
  return principal_curvatures(f.jet2(p), normal);
}

Vec mean_curvature_vector(const Jet2& j) {
  const Eigen::Index n = j.jacobian.rows();
  const Eigen::Index k = j.jacobian.cols();
  Eigen::HouseholderQR<Mat> qr(j.jacobian);
  const Mat full_q = qr.householderQ();
  Vec h = Vec::Zero(n);
  for (Eigen::Index c = k; c < n; ++c) {
    const Vec nu = full_q.col(c);
    h += shape_operator(j, nu).trace() * nu;
  }
  return h;
}

Report is_austere(const Immersion& f, int samples, int normal_trials, double tol, std::uint64_t seed) {
  if (f.ambient_dim() <= f.param_dim()) throw InvalidInput("austere test needs codimension >= 1");
  if (samples < 1 || normal_trials < 1) throw InvalidInput("austere test needs samples >= 1 and trials >= 1");
  Report r;
  r.check = "austere";
  r.seed = seed;
  std::mt19937_64 rng(seed);
  int skipped = 0;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec p = f.region().sample_interior(rng);
    const Jet2 j = f.map().jet2(std::span<const double>(p.data(), p.size()));
    if (jacobian_min_singular(j.jacobian) <= 1e-8) {
      ++skipped;
      continue;
    }
    for (int t = 0; t < normal_trials; ++t) {
      const Vec nu = random_unit_normal(j.jacobian, rng);
      const auto kappa = principal_curvatures(j, nu);
      const std::size_t k = kappa.size();
      for (std::size_t i = 0; i < k; ++i) worst = std::max(worst, std::abs(kappa[i] + kappa[k - 1 - i]));
    }
  }
  if (skipped > samples / 5) {
    throw InconclusiveError("austere test skipped " + std::to_string(skipped) + " of " + std::to_string(samples) +
                            " samples at degenerate points");
  }
  r.samples = static_cast<long>(samples - skipped) * normal_trials;
  r.set("max_symmetry_defect", worst, tol);
  r.set("skipped_samples", skipped);
  r.require(worst <= tol);
  return r;
}

QuadratureResult volume(const Immersion& f, const QuadratureSpec& q) {
  const Map& map = f.map();
  return integrate(
      f.region(),
      [&map](std::span<const double> p) {
        const Mat jac = map.jet1(p).jacobian;
        const Mat g = jac.transpose() * jac;
        return std::sqrt(std::max(0.0, small_det(g)));
      },
      q);
}

}  // namespace amdkit
