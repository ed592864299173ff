#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amdkit/exterior.hpp"
#include "amdkit/geometry.hpp"
#include "amdkit/report.hpp"

namespace amdkit {

using CMat = Eigen::MatrixXcd;

/// Complex structure on R^{2n} given by coordinate pairs (a_j, b_j),
/// 0-based, meaning z_j = x_{a_j} + i x_{b_j}; J e_a = e_b, J e_b = -e_a.
class ComplexStructure {
 public:
  ComplexStructure(int real_dim, std::vector<std::pair<int, int>> pairs);
  /// Pairs (j, n + j): R^{2n} = R^n + R^n with z_j = x_j + i y_j.
  static ComplexStructure split(int n);

  int real_dim() const { return real_dim_; }
  int complex_dim() const { return real_dim_ / 2; }
  const Mat& j() const { return j_; }
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

  /// Complex n x k matrix of dz_j(v_a) for the columns v_a of `frame`.
  CMat complex_coordinates(const Mat& frame) const;
  /// Real 2n x 2n matrix of a complex-linear map U in this structure.
  Mat realify(const CMat& u) const;
  /// Inverse of realify for matrices commuting with J.
  CMat complexify(const Mat& r) const;

 private:
  int real_dim_;
  std::vector<std::pair<int, int>> pairs_;
  Mat j_;
};

enum class CalibrationKind { Kahler, SpecialLagrangian, Rotated, Custom };

const char* calibration_kind_name(CalibrationKind k);

struct CalibrationForm {
  KForm form;
  CalibrationKind kind = CalibrationKind::Custom;
  double phase = 0.0;  // special Lagrangian phase, radians
};

/// Real codimension-2 plane P stored through an orthonormal basis (f1, f2)
/// of its orthogonal complement. The order of (f1, f2) orients P^perp.
class Codim2Plane {
 public:
  Codim2Plane(Vec f1, Vec f2);

  int dim() const { return static_cast<int>(f1_.size()); }
  const Vec& f1() const { return f1_; }
  const Vec& f2() const { return f2_; }
  /// J P = P, equivalently J maps span(f1, f2) into itself.
  bool is_complex(const ComplexStructure& cs, double tol = 1e-9) const;
  double distance(const Vec& x) const;

 private:
  Vec f1_;
  Vec f2_;
};

/// omega(X, Y) = <JX, Y>.
CalibrationForm kahler_form(const ComplexStructure& cs);

/// Re(e^{-i theta} dz_1 ^ ... ^ dz_n).
CalibrationForm sl_form(const ComplexStructure& cs, double theta);

/// Identity on P, rotation by alpha in P^perp taking f1 towards f2.
Mat rotation_about_plane(const Codim2Plane& p, double alpha);

/// Max |omega(t_i, t_j)| over sampled orthonormal tangent frames. Samples at
/// degenerate points are skipped; more than 20% skipped is inconclusive.
double lagrangian_defect(const Immersion& f, const ComplexStructure& cs, int samples, std::uint64_t seed);

/// Complex volume dz_1 ^ ... ^ dz_n on the orientation-preserving
/// orthonormalization of `frame` (n x n tangent frame in R^{2n}).
std::complex<double> complex_volume(const ComplexStructure& cs, const Mat& frame);

/// Phase of the complex volume on sampled tangent frames against
/// e^{i expected_phase}. `orientation` = -1 reverses the parametrization
/// orientation. Metrics: max circular phase deviation and max |1 - modulus|.
Report sl_phase_defect(const Immersion& f, const ComplexStructure& cs, double expected_phase, int samples,
                       std::uint64_t seed, double tol = 1e-7, int orientation = 1);

/// Max over samples of the largest principal-angle sine between J T and T.
double holomorphic_defect(const Immersion& f, const ComplexStructure& cs, int samples, std::uint64_t seed);

struct RotatedFamily {
  std::vector<KForm> forms;  // w_i = R_{(i alpha, P)} pushforward of w, alpha = 2 pi / k
  Report report;             // sum norm and per-form sampled comass
};

/// Pushforward of w under R is the pullback under R^T.
KForm pushforward(const KForm& w, const Mat& r);

RotatedFamily rotated_calibration_family(const CalibrationForm& w, const Codim2Plane& p, int k,
                                         int comass_trials = 2000, std::uint64_t seed = 1);

/// Reflection through a complex plane P applied to a special Lagrangian S:
/// checks f(phi) = -phi and that -f(S) is calibrated by phi.
Report reflect_and_unite_check(const Immersion& s, const Codim2Plane& p, const ComplexStructure& cs,
                               double phase, int samples, std::uint64_t seed, double tol = 1e-7);

}  // namespace amdkit
