#include "amdkit/complexgeo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "amdkit/errors.hpp"

namespace amdkit {

ComplexStructure::ComplexStructure(int real_dim, std::vector<std::pair<int, int>> pairs)
    : real_dim_(real_dim), pairs_(std::move(pairs)), j_(Mat::Zero(real_dim, real_dim)) {
  if (real_dim <= 0 || real_dim % 2 != 0) throw InvalidInput("complex structure needs an even positive dimension");
  if (static_cast<int>(pairs_.size()) != real_dim / 2) {
    throw InvalidInput("complex structure needs exactly " + std::to_string(real_dim / 2) + " coordinate pairs");
  }
  std::vector<int> seen(static_cast<std::size_t>(real_dim), 0);
  for (const auto& [a, b] : pairs_) {
    if (a < 0 || b < 0 || a >= real_dim || b >= real_dim || a == b) {
      throw InvalidInput("complex structure pair out of range");
    }
    if (seen[a]++ || seen[b]++) throw InvalidInput("complex structure pairs must cover each coordinate once");
    j_(b, a) = 1.0;
    j_(a, b) = -1.0;
  }
}

ComplexStructure ComplexStructure::split(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < n; ++j) pairs.emplace_back(j, n + j);
  return ComplexStructure(2 * n, std::move(pairs));
}

CMat ComplexStructure::complex_coordinates(const Mat& frame) const {
  if (frame.rows() != real_dim_) throw InvalidInput("frame dimension does not match the complex structure");
  CMat c(complex_dim(), frame.cols());
  for (int j = 0; j < complex_dim(); ++j) {
    const auto [a, b] = pairs_[j];
    for (Eigen::Index k = 0; k < frame.cols(); ++k) c(j, k) = {frame(a, k), frame(b, k)};
  }
  return c;
}

Mat ComplexStructure::realify(const CMat& u) const {
  const int n = complex_dim();
  if (u.rows() != n || u.cols() != n) throw InvalidInput("realify needs an n x n complex matrix");
  Mat r = Mat::Zero(real_dim_, real_dim_);
  for (int j = 0; j < n; ++j) {
    const auto [aj, bj] = pairs_[j];
    for (int k = 0; k < n; ++k) {
      const auto [ak, bk] = pairs_[k];
      // U e_k: real unit e_{a_k} goes to column k; i e_k = e_{b_k}.
      r(aj, ak) = u(j, k).real();
      r(bj, ak) = u(j, k).imag();
      r(aj, bk) = -u(j, k).imag();
      r(bj, bk) = u(j, k).real();
    }
  }
  return r;
}

CMat ComplexStructure::complexify(const Mat& r) const {
  const int n = complex_dim();
  CMat u(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) u(j, k) = {r(pairs_[j].first, pairs_[k].first), r(pairs_[j].second, pairs_[k].first)};
  return u;
}

const char* calibration_kind_name(CalibrationKind k) {
  switch (k) {
    case CalibrationKind::Kahler: return "kahler";
    case CalibrationKind::SpecialLagrangian: return "special_lagrangian";
    case CalibrationKind::Rotated: return "rotated";
    case CalibrationKind::Custom: return "custom";
  }
  return "?";
}

Codim2Plane::Codim2Plane(Vec f1, Vec f2) : f1_(std::move(f1)), f2_(std::move(f2)) {
  if (f1_.size() != f2_.size() || f1_.size() < 2) throw InvalidInput("plane normals must share a dimension >= 2");
  const double tol = 1e-10;
  if (std::abs(f1_.norm() - 1.0) > tol || std::abs(f2_.norm() - 1.0) > tol || std::abs(f1_.dot(f2_)) > tol) {
    throw InvalidInput("plane complement basis (f1, f2) is not orthonormal");
  }
}

bool Codim2Plane::is_complex(const ComplexStructure& cs, double tol) const {
  if (cs.real_dim() != dim()) throw InvalidInput("plane and complex structure dimensions differ");
  for (const Vec* f : {&f1_, &f2_}) {
    const Vec jf = cs.j() * *f;
    const Vec off = jf - f1_.dot(jf) * f1_ - f2_.dot(jf) * f2_;
    if (off.norm() > tol) return false;
  }
  return true;
}

double Codim2Plane::distance(const Vec& x) const { return std::hypot(f1_.dot(x), f2_.dot(x)); }

CalibrationForm kahler_form(const ComplexStructure& cs) {
  const int n = cs.real_dim();
  KForm w(n, 2);
  const auto& combos = combinations(n, 2);
  for (std::size_t r = 0; r < combos.size(); ++r) w.coeffs()[r] = cs.j()(combos[r][1], combos[r][0]);
  return CalibrationForm{std::move(w), CalibrationKind::Kahler, 0.0};
}

CalibrationForm sl_form(const ComplexStructure& cs, double theta) {
  const int n = cs.complex_dim();
  KForm w(cs.real_dim(), n);
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    int imaginary = 0;
    for (int j = 0; j < n; ++j) {
      const bool pick_b = (mask >> j) & 1u;
      idx[j] = pick_b ? cs.pairs()[j].second : cs.pairs()[j].first;
      imaginary += pick_b ? 1 : 0;
    }
    // Re(e^{-i theta} i^m) = cos(m pi / 2 - theta).
    const double c = std::cos(imaginary * std::numbers::pi / 2 - theta);
    if (std::abs(c) < 1e-15) continue;
    w += c * KForm::basis(cs.real_dim(), idx);
  }
  for (double& c : w.coeffs()) {
    if (std::abs(c) < 1e-15) c = 0.0;
  }
  return CalibrationForm{std::move(w), CalibrationKind::SpecialLagrangian, theta};
}

Mat rotation_about_plane(const Codim2Plane& p, double alpha) {
  const Vec& f1 = p.f1();
  const Vec& f2 = p.f2();
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  Mat r = Mat::Identity(p.dim(), p.dim());
  r += (c - 1.0) * (f1 * f1.transpose() + f2 * f2.transpose());
  r += s * (f2 * f1.transpose() - f1 * f2.transpose());
  return r;
}

namespace {

// Runs `visit` on the Jacobian at `samples` interior points, skipping
// degenerate ones; throws InconclusiveError when more than 20% are skipped.
int for_each_sample(const Immersion& f, int samples, std::uint64_t seed, const std::function<void(const Mat&)>& visit) {
  if (samples < 1) throw InvalidInput("need at least one sample");
  std::mt19937_64 rng(seed);
  int skipped = 0;
  for (int s = 0; s < samples; ++s) {
    const Vec p = f.region().sample_interior(rng);
    const Mat jac = f.map().jet1(std::span<const double>(p.data(), p.size())).jacobian;
    if (jacobian_min_singular(jac) <= 1e-8) {
      ++skipped;
      continue;
    }
    visit(jac);
  }
  if (skipped > samples / 5) {
    throw InconclusiveError("skipped " + std::to_string(skipped) + " of " + std::to_string(samples) +
                            " samples at degenerate points");
  }
  return skipped;
}

void require_half_dim(const Immersion& f, const ComplexStructure& cs) {
  if (f.ambient_dim() != cs.real_dim()) throw InvalidInput("immersion and complex structure dimensions differ");
  if (2 * f.param_dim() != cs.real_dim()) throw InvalidInput("immersion must be half-dimensional");
}

double circular_distance(std::complex<double> z, double theta) {
  return std::abs(std::arg(z * std::polar(1.0, -theta)));
}

}  // namespace

double lagrangian_defect(const Immersion& f, const ComplexStructure& cs, int samples, std::uint64_t seed) {
  require_half_dim(f, cs);
  double worst = 0.0;
  for_each_sample(f, samples, seed, [&](const Mat& jac) {
    const Mat q = orthonormal_frame(jac);
    const Mat omega = (cs.j() * q).transpose() * q;
    worst = std::max(worst, omega.cwiseAbs().maxCoeff());
  });
  return worst;
}

std::complex<double> complex_volume(const ComplexStructure& cs, const Mat& frame) {
  if (frame.cols() != cs.complex_dim()) throw InvalidInput("complex volume needs n tangent vectors");
  return cs.complex_coordinates(orthonormal_frame(frame)).determinant();
}

Report sl_phase_defect(const Immersion& f, const ComplexStructure& cs, double expected_phase, int samples,
                       std::uint64_t seed, double tol, int orientation) {
  require_half_dim(f, cs);
  if (orientation != 1 && orientation != -1) throw InvalidInput("orientation must be +1 or -1");
  double phase_dev = 0.0;
  double modulus_dev = 0.0;
  const int skipped = for_each_sample(f, samples, seed, [&](const Mat& jac) {
    const std::complex<double> z = static_cast<double>(orientation) * complex_volume(cs, jac);
    phase_dev = std::max(phase_dev, circular_distance(z, expected_phase));
    modulus_dev = std::max(modulus_dev, std::abs(1.0 - std::abs(z)));
  });
  Report r;
  r.check = "sl-phase";
  r.seed = seed;
  r.samples = samples - skipped;
  r.set("expected_phase", expected_phase);
  r.set("max_phase_deviation", phase_dev, tol);
  r.set("max_modulus_deviation", modulus_dev, tol);
  r.set("skipped_samples", skipped);
  r.require(phase_dev <= tol && modulus_dev <= tol);
  return r;
}

double holomorphic_defect(const Immersion& f, const ComplexStructure& cs, int samples, std::uint64_t seed) {
  if (f.ambient_dim() != cs.real_dim()) throw InvalidInput("immersion and complex structure dimensions differ");
  if (f.param_dim() % 2 != 0) throw InvalidInput("holomorphic check needs an even-dimensional immersion");
  double worst = 0.0;
  for_each_sample(f, samples, seed, [&](const Mat& jac) {
    const Mat q = orthonormal_frame(jac);
    const Mat jq = cs.j() * q;
    const Mat off = jq - q * (q.transpose() * jq);
    Eigen::JacobiSVD<Mat> svd(off);
    worst = std::max(worst, svd.singularValues().maxCoeff());
  });
  return worst;
}

KForm pushforward(const KForm& w, const Mat& r) { return pullback_linear(w, r.transpose()); }

RotatedFamily rotated_calibration_family(const CalibrationForm& w, const Codim2Plane& p, int k, int comass_trials,
                                         std::uint64_t seed) {
  if (k < 2) throw InvalidInput("rotated family needs k >= 2");
  if (w.form.dim() != p.dim()) throw InvalidInput("form and plane dimensions differ");
  RotatedFamily out;
  const double alpha = 2.0 * std::numbers::pi / k;
  KForm sum(w.form.dim(), w.form.degree());
  double comass = 0.0;
  for (int i = 0; i < k; ++i) {
    KForm wi = i == 0 ? w.form : pushforward(w.form, rotation_about_plane(p, i * alpha));
    sum += wi;
    comass = std::max(comass, comass_sample(wi, comass_trials, seed + static_cast<std::uint64_t>(i)));
    out.forms.push_back(std::move(wi));
  }
  out.report.check = "vanishing-sum";
  out.report.seed = seed;
  out.report.samples = static_cast<long>(k) * comass_trials;
  out.report.set("k", k);
  out.report.set("sum_norm", sum.norm(), 1e-10);
  out.report.set("max_sampled_comass", comass, 1.0 + 1e-9);
  out.report.require(sum.norm() < 1e-10 && comass <= 1.0 + 1e-9);
  return out;
}

Report reflect_and_unite_check(const Immersion& s, const Codim2Plane& p, const ComplexStructure& cs, double phase,
                               int samples, std::uint64_t seed, double tol) {
  if (!p.is_complex(cs)) throw InvalidInput("symmetry plane is not complex (J P != P)");
  Report source = sl_phase_defect(s, cs, phase, samples, seed, tol);
  if (!source.passed()) {
    throw PreconditionError("source piece is not special Lagrangian with the given phase",
                            source.metric("max_phase_deviation"));
  }
  const Mat r = rotation_about_plane(p, std::numbers::pi);
  const KForm phi = sl_form(cs, phase).form;
  const double push_defect = (pushforward(phi, r) + phi).norm();

  const Immersion reflected = s.with_map(std::make_shared<LinearImageMap>(r, s.map_ptr()));
  // f(S) carries phase theta + pi; with reversed orientation it is calibrated by phi.
  Report raw = sl_phase_defect(reflected, cs, phase + std::numbers::pi, samples, seed, tol);
  Report flipped = sl_phase_defect(reflected, cs, phase, samples, seed, tol, -1);

  Report out;
  out.check = "symmetry";
  out.seed = seed;
  out.set("pushforward_plus_phi_norm", push_defect, 1e-12);
  out.require(push_defect < 1e-12);
  merge_report(out, source, "source_");
  merge_report(out, raw, "reflected_");
  merge_report(out, flipped, "reflected_reversed_");
  out.samples = source.samples + flipped.samples;
  return out;
}

}  // namespace amdkit
