#include "amdkit/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "amdkit/errors.hpp"

namespace amdkit {

namespace {

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

double nearest_distance(const Vec& x, const std::vector<Vec>& cloud) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& c : cloud) best = std::min(best, (c - x).squaredNorm());
  return std::sqrt(best);
}

// Edge parameter whose image under `m` is closest to face parameter `p`:
// nearest grid point of the edge box, then Gauss-Newton clamped to the box.
Vec locate_on_edge(const Map& m, const Region& edge_region, const Vec& p) {
  const int d = edge_region.dim();
  const int per_axis = d == 1 ? 64 : (d == 2 ? 16 : 6);
  long count = 1;
  for (int i = 0; i < d; ++i) count *= per_axis + 1;
  Vec best(d);
  double best_dist = std::numeric_limits<double>::infinity();
  Vec s(d);
  for (long idx = 0; idx < count; ++idx) {
    long rest = idx;
    for (int i = 0; i < d; ++i) {
      const auto& iv = edge_region.box()[i];
      s[i] = iv.lo + iv.width() * static_cast<double>(rest % (per_axis + 1)) / per_axis;
      rest /= per_axis + 1;
    }
    const double dist = (m.value(as_span(s)) - p).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = s;
    }
  }
  s = best;
  for (int it = 0; it < 30; ++it) {
    const Jet1 j = m.jet1(as_span(s));
    const Vec r = j.point - p;
    const Vec step = j.jacobian.colPivHouseholderQr().solve(r);
    s -= step;
    for (int i = 0; i < d; ++i) s[i] = std::clamp(s[i], edge_region.box()[i].lo, edge_region.box()[i].hi);
    if (step.norm() < 1e-14) break;
  }
  return s;
}

Mat oriented_frame(const Mat& jac, int orientation) {
  Mat q = orthonormal_frame(jac);
  if (orientation < 0) q.col(q.cols() - 1) *= -1.0;
  return q;
}

}  // namespace

SigmaComplex::SigmaComplex(std::vector<Face> faces, std::vector<SingularEdge> edges, const BuildOptions& options)
    : faces_(std::move(faces)), edges_(std::move(edges)) {
  if (faces_.empty()) throw InvalidInput("a complex needs at least one face");
  const int m = faces_.front().immersion.param_dim();
  const int n = faces_.front().immersion.ambient_dim();
  if (m < 2) throw InvalidInput("faces must have dimension >= 2");
  build_report_.check = "build";
  build_report_.seed = options.seed;

  double worst_calibration = 0.0;
  std::mt19937_64 rng(options.seed);
  for (const Face& f : faces_) {
    if (f.immersion.param_dim() != m || f.immersion.ambient_dim() != n) {
      throw InvalidInput("face '" + f.name + "' has a different dimension from the first face");
    }
    if (f.orientation != 1 && f.orientation != -1) throw InvalidInput("face orientation must be +1 or -1");
    if (f.calibration.form.dim() != n || f.calibration.form.degree() != m) {
      throw InvalidInput("calibration of face '" + f.name + "' has the wrong degree or dimension");
    }
    double defect = 0.0;
    for (int s = 0; s < options.samples; ++s) {
      const Vec p = f.immersion.region().sample_interior(rng);
      const Mat jac = f.immersion.map().jet1(as_span(p)).jacobian;
      if (jacobian_min_singular(jac) <= 1e-8) continue;
      defect = std::max(defect, std::abs(evaluate(f.calibration.form, oriented_frame(jac, f.orientation)) - 1.0));
    }
    if (defect > options.calibration_tol) {
      throw PreconditionError("face '" + f.name + "' is not calibrated by its form", defect);
    }
    worst_calibration = std::max(worst_calibration, defect);
  }

  edge_faces_.assign(edges_.size(), {});
  face_edges_.assign(faces_.size(), {});
  double worst_edge = 0.0;
  for (std::size_t j = 0; j < edges_.size(); ++j) {
    const SingularEdge& e = edges_[j];
    if (e.curve.param_dim() != m - 1 || e.curve.ambient_dim() != n) {
      throw InvalidInput("edge '" + e.name + "' must be (m-1)-dimensional in the ambient space");
    }
    if (e.incident.size() < 2) throw InvalidInput("edge '" + e.name + "' needs at least two incident faces");
    for (const EdgeIncidence& inc : e.incident) {
      if (inc.face < 0 || inc.face >= static_cast<int>(faces_.size())) {
        throw InvalidInput("edge '" + e.name + "' references a missing face");
      }
      if (!inc.param_map || inc.param_map->param_dim() != m - 1 || inc.param_map->ambient_dim() != m) {
        throw InvalidInput("edge '" + e.name + "' has a malformed parameter map");
      }
      const Face& f = faces_[inc.face];
      double dist = 0.0;
      for (int s = 0; s < options.samples; ++s) {
        const Vec t = e.curve.region().sample_interior(rng);
        const Vec p = inc.param_map->value(as_span(t));
        if (!f.immersion.region().on_boundary(as_span(p), options.edge_tol)) {
          throw PreconditionError(
              "edge '" + e.name + "' does not lie on the boundary of face '" + f.name + "'",
              std::max(0.0, f.immersion.region().predicate_value(as_span(p))));
        }
        dist = std::max(dist, (f.immersion.map().value(as_span(p)) - e.curve.map().value(as_span(t))).norm());
      }
      if (dist > options.edge_tol) {
        throw PreconditionError("edge '" + e.name + "' does not match face '" + f.name + "'", dist);
      }
      worst_edge = std::max(worst_edge, dist);
      auto& fe = face_edges_[inc.face];
      if (std::find(fe.begin(), fe.end(), static_cast<int>(j)) == fe.end()) fe.push_back(static_cast<int>(j));
      edge_faces_[j].push_back(inc.face);
    }
  }

  // Boundary: face boundary samples not in the interior of a singular edge.
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    const Face& f = faces_[i];
    for (const Vec& p : f.immersion.region().sample_boundary(options.boundary_per_axis)) {
      bool singular = false;
      for (int j : face_edges_[i]) {
        for (const EdgeIncidence& inc : edges_[j].incident) {
          if (inc.face != static_cast<int>(i)) continue;
          const Region& er = edges_[j].curve.region();
          const Vec s = locate_on_edge(*inc.param_map, er, p);
          const bool on_map = (inc.param_map->value(as_span(s)) - p).norm() < 1e-7;
          if (on_map && er.contains(as_span(s)) && !er.on_boundary(as_span(s), 1e-9)) singular = true;
        }
      }
      const Vec x = f.immersion.map().value(as_span(p));
      surface_.push_back(x);
      if (!singular) boundary_.push_back(x);
    }
    for (int s = 0; s < options.samples; ++s) {
      surface_.push_back(f.immersion.map().value(as_span(f.immersion.region().sample_interior(rng))));
    }
  }
  build_report_.set("max_calibration_defect", worst_calibration, options.calibration_tol);
  build_report_.set("max_edge_distance", worst_edge, options.edge_tol);
  build_report_.set("boundary_samples", static_cast<double>(boundary_.size()));
  build_report_.samples = options.samples * static_cast<long>(faces_.size() + edges_.size());
}

SigmaComplex rotation_fan(const Face& base, const Codim2Plane& p, int k,
                          const std::vector<std::pair<Immersion, MapPtr>>& edges, const std::vector<int>& flip,
                          const BuildOptions& options) {
  if (k < 2) throw InvalidInput("a fan needs k >= 2 faces");
  if (base.immersion.ambient_dim() != p.dim()) throw InvalidInput("fan plane and face dimensions differ");
  std::vector<Face> faces;
  for (int i = 0; i < k; ++i) {
    const Mat r = rotation_about_plane(p, 2.0 * std::numbers::pi * i / k);
    Face f{base.name + "_" + std::to_string(i),
           base.immersion.with_map(std::make_shared<LinearImageMap>(r, base.immersion.map_ptr())), base.orientation,
           CalibrationForm{pushforward(base.calibration.form, r), CalibrationKind::Rotated, base.calibration.phase}};
    if (std::find(flip.begin(), flip.end(), i) != flip.end()) {
      f.orientation = -f.orientation;
      f.calibration.form = -f.calibration.form;
    }
    faces.push_back(std::move(f));
  }
  std::vector<SingularEdge> es;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    SingularEdge e{"edge_" + std::to_string(j), edges[j].first, {}};
    for (int i = 0; i < k; ++i) e.incident.push_back(EdgeIncidence{i, edges[j].second});
    es.push_back(std::move(e));
  }
  return SigmaComplex(std::move(faces), std::move(es), options);
}

Report check_amd_hypotheses(const SigmaComplex& s, int samples, std::uint64_t seed) {
  Report r;
  r.check = "amd-hypotheses";
  r.seed = seed;
  std::mt19937_64 rng(seed);
  long mismatches = 0;
  long checked = 0;
  double sum_norm = 0.0;
  for (std::size_t j = 0; j < s.edges().size(); ++j) {
    const SingularEdge& e = s.edges()[j];
    KForm sum(s.ambient_dim(), s.dim());
    for (const EdgeIncidence& inc : e.incident) sum += s.faces()[inc.face].calibration.form;
    sum_norm = std::max(sum_norm, sum.norm());
    int first_sign = 0;
    for (int k = 0; k < samples; ++k) {
      const Vec t = e.curve.region().sample_interior(rng);
      const Mat edge_frame = e.curve.map().jet1(as_span(t)).jacobian;
      std::vector<int> signs;
      for (const EdgeIncidence& inc : e.incident) {
        const Face& f = s.faces()[inc.face];
        const Jet1 pm = inc.param_map->jet1(as_span(t));
        const Vec& p = pm.point;
        const Vec conormal = f.immersion.region().outward_normal(as_span(p), 1e-6);
        Mat x(s.dim(), s.dim());
        x.col(0) = conormal;
        x.rightCols(s.dim() - 1) = pm.jacobian;
        const double dx = x.determinant();
        // Compare the face-induced edge frame with the edge's own frame.
        const Mat induced = f.immersion.map().jet1(as_span(p)).jacobian * pm.jacobian;
        const Mat a = edge_frame.colPivHouseholderQr().solve(induced);
        const double da = a.determinant();
        if (std::abs(dx) < 1e-9 || std::abs(da) < 1e-9) {
          throw DegeneracyError("edge '" + e.name + "' is tangent to the conormal or degenerate in face '" + f.name +
                                "'");
        }
        signs.push_back(f.orientation * (dx > 0 ? 1 : -1) * (da > 0 ? 1 : -1));
      }
      ++checked;
      const bool agree = std::all_of(signs.begin(), signs.end(), [&](int v) { return v == signs.front(); });
      if (!agree) ++mismatches;
      if (k == 0) first_sign = signs.front();
    }
    r.notes.push_back("edge '" + e.name + "': " + std::to_string(e.incident.size()) +
                      " incident faces, induced orientation of first face " + (first_sign > 0 ? "+1" : "-1"));
  }
  r.samples = checked;
  r.set("orientation_mismatches", static_cast<double>(mismatches), 0.0);
  r.set("max_calibration_sum_norm", sum_norm, 1e-10);
  r.set("edges", static_cast<double>(s.edges().size()));
  r.require(mismatches == 0);
  r.require(sum_norm < 1e-10);
  if (mismatches > 0) r.notes.push_back("hypothesis (i) fails: incident faces induce opposite edge orientations");
  if (!(sum_norm < 1e-10)) r.notes.push_back("hypothesis (ii) fails: calibrations do not sum to zero");
  return r;
}

Report stokes_certificate(const SigmaComplex& s, const QuadratureSpec& q, double rel_tol) {
  Report r;
  r.check = "stokes";
  double total_volume = 0.0;
  double total_integral = 0.0;
  long evaluations = 0;
  for (const Face& f : s.faces()) {
    const QuadratureResult vol = volume(f.immersion, q);
    const Map& map = f.immersion.map();
    const KForm& w = f.calibration.form;
    const double sign = f.orientation;
    const QuadratureResult cal = integrate(
        f.immersion.region(), [&](std::span<const double> p) { return sign * evaluate(w, map.jet1(p).jacobian); }, q);
    const double gap = std::abs(vol.value - cal.value) / std::max(vol.value, 1e-300);
    r.set(f.name + "_volume", vol.value);
    r.set(f.name + "_calibration_integral", cal.value);
    r.set(f.name + "_relative_gap", gap, rel_tol);
    r.set(f.name + "_quadrature_error", std::max(vol.error_estimate, cal.error_estimate));
    r.require(gap < rel_tol);
    if (vol.warning || cal.warning) r.warn("quadrature error above target on face '" + f.name + "'");
    total_volume += vol.value;
    total_integral += cal.value;
    evaluations += vol.evaluations + cal.evaluations;
  }
  r.set("total_volume", total_volume);
  r.set("total_calibration_integral", total_integral);
  r.samples = evaluations;
  return r;
}

double bump_profile_lipschitz() {
  static const double value = [] {
    double best = 0.0;
    const int n = 200000;
    for (int i = 1; i < n; ++i) {
      const double s = static_cast<double>(i) / n;
      const double den = 1.0 - s * s;
      best = std::max(best, std::exp(1.0 - 1.0 / den) * 2.0 * s / (den * den));
    }
    return best * (1.0 + 1e-6);
  }();
  return value;
}

BumpDiffeo::BumpDiffeo(int dim, std::vector<Bump> bumps, int steps) : dim_(dim), bumps_(std::move(bumps)), steps_(steps) {
  if (steps_ < 1) throw InvalidInput("flow needs at least one step");
  if (dim_ < 1 || dim_ > 8) throw InvalidInput("bump flows support ambient dimensions 1 to 8");
  for (Bump& b : bumps_) {
    if (b.center.size() != dim_ || b.direction.size() != dim_) throw InvalidInput("bump dimension mismatch");
    if (!(b.radius > 0.0)) throw InvalidInput("bump radius must be positive");
    const double len = b.direction.norm();
    if (!(len > 0.0)) throw InvalidInput("bump direction must be nonzero");
    b.direction /= len;
  }
}

double BumpDiffeo::lipschitz_bound() const {
  double l = 0.0;
  for (const Bump& b : bumps_) l += std::abs(b.amplitude) * bump_profile_lipschitz() / b.radius;
  return l;
}

bool BumpDiffeo::touches(const Vec& x) const {
  for (const Bump& b : bumps_) {
    if ((x - b.center).squaredNorm() < b.radius * b.radius) return true;
  }
  return false;
}

namespace {

// Stack-allocated vectors for the flow hot path; ambient dimension <= 8.
constexpr int kMaxFlowDim = 8;
using SVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxFlowDim, 1>;
using SMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxFlowDim, kMaxFlowDim>;

SVec bump_field(const std::vector<Bump>& bumps, const SVec& x) {
  SVec v = SVec::Zero(x.size());
  for (const Bump& b : bumps) {
    const double s2 = (x - b.center).squaredNorm() / (b.radius * b.radius);
    if (s2 >= 1.0) continue;
    v += b.amplitude * std::exp(1.0 - 1.0 / (1.0 - s2)) * b.direction;
  }
  return v;
}

SMat bump_jacobian(const std::vector<Bump>& bumps, const SVec& x) {
  SMat d = SMat::Zero(x.size(), x.size());
  for (const Bump& b : bumps) {
    const SVec off = x - b.center;
    const double s2 = off.squaredNorm() / (b.radius * b.radius);
    if (s2 >= 1.0) continue;
    const double den = 1.0 - s2;
    // d/dx beta(|x - c| / r) = beta * (-1 / den^2) * 2 (x - c) / r^2.
    const double beta = std::exp(1.0 - 1.0 / den);
    const double scale = -beta * 2.0 / (den * den * b.radius * b.radius);
    d.noalias() += (b.amplitude * scale) * b.direction * off.transpose();
  }
  return d;
}

}  // namespace

Vec BumpDiffeo::field(const Vec& x) const { return bump_field(bumps_, x); }

Mat BumpDiffeo::field_jacobian(const Vec& x) const { return bump_jacobian(bumps_, x); }

Vec BumpDiffeo::flow(const Vec& x, double sign) const {
  if (!touches(x)) return x;
  const double h = sign / steps_;
  SVec y = x;
  for (int i = 0; i < steps_; ++i) {
    const SVec k1 = bump_field(bumps_, y);
    const SVec k2 = bump_field(bumps_, y + 0.5 * h * k1);
    const SVec k3 = bump_field(bumps_, y + 0.5 * h * k2);
    const SVec k4 = bump_field(bumps_, y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

Vec BumpDiffeo::apply(const Vec& x) const { return flow(x, 1.0); }
Vec BumpDiffeo::apply_inverse(const Vec& x) const { return flow(x, -1.0); }

std::pair<Vec, Mat> BumpDiffeo::apply_with_jacobian(const Vec& x) const {
  if (!touches(x)) return {x, Mat::Identity(dim_, dim_)};
  const double h = 1.0 / steps_;
  SVec y = x;
  SMat m = SMat::Identity(dim_, dim_);
  for (int i = 0; i < steps_; ++i) {
    const SVec k1 = bump_field(bumps_, y);
    const SMat l1 = bump_jacobian(bumps_, y) * m;
    const SVec y2 = y + 0.5 * h * k1;
    const SVec k2 = bump_field(bumps_, y2);
    const SMat l2 = bump_jacobian(bumps_, y2) * (m + 0.5 * h * l1);
    const SVec y3 = y + 0.5 * h * k2;
    const SVec k3 = bump_field(bumps_, y3);
    const SMat l3 = bump_jacobian(bumps_, y3) * (m + 0.5 * h * l2);
    const SVec y4 = y + h * k3;
    const SVec k4 = bump_field(bumps_, y4);
    const SMat l4 = bump_jacobian(bumps_, y4) * (m + h * l3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    m += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  return {Vec(y), Mat(m)};
}

FlowedMap::FlowedMap(MapPtr base, std::shared_ptr<const BumpDiffeo> phi) : base_(std::move(base)), phi_(std::move(phi)) {
  if (phi_->dim() != base_->ambient_dim()) throw InvalidInput("diffeomorphism and map dimensions differ");
}

Vec FlowedMap::value(std::span<const double> p) const { return phi_->apply(base_->value(p)); }

Jet1 FlowedMap::jet1(std::span<const double> p) const {
  const Jet1 j = base_->jet1(p);
  auto [y, d] = phi_->apply_with_jacobian(j.point);
  return Jet1{std::move(y), d * j.jacobian};
}

namespace {

struct Extent {
  Vec lo, hi;
  double diameter() const { return (hi - lo).norm(); }
};

Extent extent_of(const std::vector<Vec>& cloud) {
  Extent e{cloud.front(), cloud.front()};
  for (const Vec& x : cloud) {
    e.lo = e.lo.cwiseMin(x);
    e.hi = e.hi.cwiseMax(x);
  }
  return e;
}

void require_lipschitz(const BumpDiffeo& phi) {
  if (!(phi.lipschitz_bound() < 0.9)) {
    throw InvalidInput("bump amplitude too large: Lipschitz bound " + std::to_string(phi.lipschitz_bound()) +
                       " must stay below 0.9");
  }
}

}  // namespace

BumpDiffeo random_boundary_fixing_diffeo(const SigmaComplex& s, int bump_count, double amplitude, std::uint64_t seed) {
  if (bump_count < 0) throw InvalidInput("bump count must be non-negative");
  const int n = s.ambient_dim();
  std::vector<Bump> bumps;
  if (bump_count == 0) return BumpDiffeo(n, {});
  const Extent ext = extent_of(s.surface_cloud());
  const double diam = std::max(ext.diameter(), 1e-9);
  const double margin = 0.02 * diam;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_face(0, s.faces().size() - 1);
  for (int b = 0; b < bump_count; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
      const Face& f = s.faces()[pick_face(rng)];
      const Vec p = f.immersion.region().sample_interior(rng);
      const double radius = (0.1 + 0.2 * unit(rng)) * diam;
      Vec center = f.immersion.map().value(as_span(p));
      for (int i = 0; i < n; ++i) center[i] += 0.1 * radius * gauss(rng);
      if (nearest_distance(center, s.boundary_cloud()) <= radius + margin) continue;
      Vec dir(n);
      for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      bumps.push_back(Bump{center, radius, dir, sign * amplitude});
      placed = true;
    }
    if (!placed) throw PlacementError("could not place a bump away from the boundary");
  }
  BumpDiffeo phi(n, std::move(bumps));
  require_lipschitz(phi);
  return phi;
}

BumpDiffeo edge_bump(const SigmaComplex& s, int edge, double amplitude) {
  if (edge < 0 || edge >= static_cast<int>(s.edges().size())) throw InvalidInput("no such edge");
  const SingularEdge& e = s.edges()[edge];
  const Region& er = e.curve.region();
  Vec t(er.dim());
  for (int i = 0; i < er.dim(); ++i) t[i] = 0.5 * (er.box()[i].lo + er.box()[i].hi);
  if (!er.contains(as_span(t))) {
    std::mt19937_64 rng(0);
    t = er.sample_interior(rng);
  }
  const Vec center = e.curve.map().value(as_span(t));
  const double radius = 0.5 * nearest_distance(center, s.boundary_cloud());
  if (!(radius > 0.0)) throw PlacementError("edge midpoint lies on the boundary");

  const EdgeIncidence& inc = e.incident.front();
  const Face& f = s.faces()[inc.face];
  const Vec p = inc.param_map->value(as_span(t));
  const Mat jac = f.immersion.map().jet1(as_span(p)).jacobian;
  Vec dir = -(jac * f.immersion.region().outward_normal(as_span(p), 1e-6));
  const Mat edge_q = orthonormal_frame(e.curve.map().jet1(as_span(t)).jacobian);
  dir -= edge_q * (edge_q.transpose() * dir);
  BumpDiffeo phi(s.ambient_dim(), {Bump{center, radius, dir, amplitude}});
  require_lipschitz(phi);
  return phi;
}

namespace {

std::vector<QuadratureResult> face_volumes(const SigmaComplex& s, const QuadratureSpec& q,
                                           const std::shared_ptr<const BumpDiffeo>& phi) {
  std::vector<QuadratureResult> out;
  for (const Face& f : s.faces()) {
    if (!phi) {
      out.push_back(volume(f.immersion, q));
    } else {
      out.push_back(volume(f.immersion.with_map(std::make_shared<FlowedMap>(f.immersion.map_ptr(), phi)), q));
    }
  }
  return out;
}

double density(const Mat& jac) { return std::sqrt(std::max(0.0, (jac.transpose() * jac).determinant())); }

// Vol(phi(F)) - Vol(F) per face, integrating the density difference. It
// vanishes identically away from the bumps, so refinement concentrates on
// them; the tolerance is absolute, relative to each face's base volume.
std::vector<QuadratureResult> volume_changes(const SigmaComplex& s, const QuadratureSpec& q,
                                             const std::vector<QuadratureResult>& base, const BumpDiffeo& phi) {
  std::vector<QuadratureResult> out;
  for (std::size_t i = 0; i < s.faces().size(); ++i) {
    const Map& map = s.faces()[i].immersion.map();
    QuadratureSpec local = q;
    local.target_abs_tol = std::max(q.target_abs_tol, q.target_rel_tol * std::abs(base[i].value));
    out.push_back(integrate(
        s.faces()[i].immersion.region(),
        [&](std::span<const double> p) {
          const Jet1 j = map.jet1(p);
          if (!phi.touches(j.point)) return 0.0;
          const auto moved = phi.apply_with_jacobian(j.point);
          return density(moved.second * j.jacobian) - density(j.jacobian);
        },
        local));
  }
  return out;
}

double total(const std::vector<QuadratureResult>& v) {
  double s = 0.0;
  for (const auto& r : v) s += r.value;
  return s;
}

double worst_error(const std::vector<QuadratureResult>& v) {
  double e = 0.0;
  for (const auto& r : v) e = std::max(e, r.error_estimate);
  return e;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  // splitmix64 step so neighbouring trials get unrelated streams.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(trial + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

QuadratureResult sigma_volume(const SigmaComplex& s, const QuadratureSpec& q, const std::shared_ptr<const BumpDiffeo>& phi) {
  QuadratureResult out;
  for (const auto& r : face_volumes(s, q, phi)) {
    out.value += r.value;
    out.error_estimate += r.error_estimate;
    out.evaluations += r.evaluations;
    out.cells += r.cells;
    out.warning = out.warning || r.warning;
  }
  return out;
}

Report perturb_volume_test(const SigmaComplex& s, const QuadratureSpec& q, std::uint64_t seed,
                           const PerturbOptions& options) {
  if (options.trials < 0) throw InvalidInput("trials must be non-negative");
  Report r;
  r.check = "perturb";
  r.seed = seed;
  if (!options.exploratory) {
    const Report hyp = check_amd_hypotheses(s, 16, seed);
    if (!hyp.passed()) {
      throw PreconditionError("complex fails the hypotheses; rerun in exploratory mode",
                              hyp.metric("orientation_mismatches") + hyp.metric("max_calibration_sum_norm"));
    }
  }
  const auto base = face_volumes(s, q, nullptr);
  const double vol0 = total(base);
  double worst_err = worst_error(base);
  bool warned = std::any_of(base.begin(), base.end(), [](const auto& x) { return x.warning; });

  std::vector<double> margins;
  double boundary_disp = 0.0;
  double roundtrip = 0.0;
  for (int t = 0; t < options.trials; ++t) {
    auto phi = std::make_shared<const BumpDiffeo>(
        random_boundary_fixing_diffeo(s, options.bump_count, options.amplitude, trial_seed(seed, t)));
    const auto changes = volume_changes(s, q, base, *phi);
    worst_err = std::max(worst_err, worst_error(changes));
    warned = warned || std::any_of(changes.begin(), changes.end(), [](const auto& x) { return x.warning; });
    margins.push_back(total(changes));
    for (const Vec& x : s.boundary_cloud()) boundary_disp = std::max(boundary_disp, (phi->apply(x) - x).norm());
    for (const Vec& x : s.surface_cloud()) {
      if (phi->touches(x)) roundtrip = std::max(roundtrip, (phi->apply_inverse(phi->apply(x)) - x).norm());
    }
  }
  const double eps = std::max(10.0 * worst_err, 1e-12 * vol0);
  double min_margin = std::numeric_limits<double>::infinity();
  int decreasing = 0;
  for (double m : margins) {
    min_margin = std::min(min_margin, m);
    if (m < -eps) ++decreasing;
  }
  if (margins.empty()) min_margin = 0.0;

  r.set("base_volume", vol0);
  r.set("epsilon_quad", eps);
  r.set("min_margin", min_margin);
  r.set("max_margin", margins.empty() ? 0.0 : *std::max_element(margins.begin(), margins.end()));
  r.set("decreasing_trials", decreasing, 0.0);
  r.set("max_boundary_displacement", boundary_disp, 1e-12);
  r.set("max_inverse_roundtrip_error", roundtrip, 1e-8);
  r.set("trials", options.trials);
  r.require(boundary_disp <= 1e-12);
  r.require(roundtrip <= 1e-8);

  if (!s.edges().empty()) {
    auto phi = std::make_shared<const BumpDiffeo>(edge_bump(s, 0, options.edge_amplitude));
    const auto changes = volume_changes(s, q, base, *phi);
    r.set("edge_bump_increase", total(changes));
    r.set("edge_bump_quadrature_error", worst_error(changes));
    r.set("edge_bump_radius", phi->bumps().front().radius);
    r.set("edge_bump_amplitude", options.edge_amplitude);
  }
  r.samples = options.trials;
  if (options.exploratory) {
    r.notes.push_back("exploratory run: " + std::to_string(decreasing) + " of " + std::to_string(options.trials) +
                      " trials decreased the volume beyond epsilon_quad");
  } else {
    r.require(decreasing == 0);
    if (decreasing == 0) {
      r.notes.push_back("consistent with AMD at " + std::to_string(options.trials) + " samples");
    }
  }
  if (warned) r.warn("quadrature error above target in at least one volume");
  return r;
}

}  // namespace amdkit
