#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amdkit/complexgeo.hpp"
#include "amdkit/geometry.hpp"
#include "amdkit/report.hpp"

namespace amdkit {

struct Face {
  std::string name;
  Immersion immersion;
  int orientation = 1;
  CalibrationForm calibration;
};

/// Identification of an edge inside one incident face: a map from edge
/// parameters to face parameters landing on the face's region boundary.
struct EdgeIncidence {
  int face;
  MapPtr param_map;
};

struct SingularEdge {
  std::string name;
  Immersion curve;  // (m-1)-dimensional
  std::vector<EdgeIncidence> incident;
};

struct BuildOptions {
  int samples = 64;
  std::uint64_t seed = 1;
  double calibration_tol = 1e-7;
  double edge_tol = 1e-6;
  int boundary_per_axis = 48;
};

/// Faces glued along singular edges. Construction validates calibration
/// equality on every face and edge placement on every incident face, and
/// samples the boundary: face boundaries minus the interiors of the
/// singular edges.
class SigmaComplex {
 public:
  SigmaComplex(std::vector<Face> faces, std::vector<SingularEdge> edges, const BuildOptions& options = {});

  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<SingularEdge>& edges() const { return edges_; }
  int dim() const { return faces_.front().immersion.param_dim(); }
  int ambient_dim() const { return faces_.front().immersion.ambient_dim(); }

  /// Faces containing edge j.
  const std::vector<int>& faces_of_edge(int j) const { return edge_faces_[j]; }
  /// Edges lying on the boundary of face i.
  const std::vector<int>& edges_of_face(int i) const { return face_edges_[i]; }

  /// Ambient sample points of the boundary.
  const std::vector<Vec>& boundary_cloud() const { return boundary_; }
  /// Ambient sample points of the faces (interior and boundary), used to
  /// size and place bumps.
  const std::vector<Vec>& surface_cloud() const { return surface_; }

  /// Build measurements: max calibration defect and max edge distance.
  const Report& build_report() const { return build_report_; }

 private:
  std::vector<Face> faces_;
  std::vector<SingularEdge> edges_;
  std::vector<std::vector<int>> edge_faces_;
  std::vector<std::vector<int>> face_edges_;
  std::vector<Vec> boundary_;
  std::vector<Vec> surface_;
  Report build_report_;
};

/// Rotated copies R_{(i alpha, P)} of one calibrated face, alpha = 2 pi / k,
/// glued along edges lying in P. `edges` pairs an edge immersion with its
/// parameter map into the base face. Faces listed in `flip` get reversed
/// orientation and negated calibration.
SigmaComplex rotation_fan(const Face& base, const Codim2Plane& p, int k,
                          const std::vector<std::pair<Immersion, MapPtr>>& edges, const std::vector<int>& flip = {},
                          const BuildOptions& options = {});

/// Theorem hypotheses: (i) incident faces induce one orientation on every
/// edge (convention: outward conormal first, then the edge frame), and
/// (ii) the calibrations of the incident faces sum to the zero form.
Report check_amd_hypotheses(const SigmaComplex& s, int samples, std::uint64_t seed);

/// Per-face Vol(F) against the integral of its calibration.
Report stokes_certificate(const SigmaComplex& s, const QuadratureSpec& q, double rel_tol = 1e-4);

struct Bump {
  Vec center;
  double radius;
  Vec direction;  // unit
  double amplitude;
};

/// Time-one flow of V(x) = sum_j a_j beta(|x - c_j| / r_j) d_j with
/// beta(s) = exp(1 - 1/(1 - s^2)) on s < 1, integrated with fixed-step RK4.
/// Points outside every ball are fixed exactly. Ambient dimension <= 8.
class BumpDiffeo {
 public:
  BumpDiffeo(int dim, std::vector<Bump> bumps, int steps = 16);

  int dim() const { return dim_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  /// sum_j |a_j| max|beta'| / r_j; below 1 the flow is a diffeomorphism.
  double lipschitz_bound() const;
  bool touches(const Vec& x) const;

  Vec field(const Vec& x) const;
  Mat field_jacobian(const Vec& x) const;

  Vec apply(const Vec& x) const;
  /// Image and Jacobian of the flow (variational equation).
  std::pair<Vec, Mat> apply_with_jacobian(const Vec& x) const;
  /// Flow of the reversed field, approximately the inverse.
  Vec apply_inverse(const Vec& x) const;

 private:
  Vec flow(const Vec& x, double sign) const;

  int dim_;
  std::vector<Bump> bumps_;
  int steps_;
};

/// max |beta'| on [0, 1), computed once.
double bump_profile_lipschitz();

/// Map x -> phi(f(x)).
class FlowedMap final : public Map {
 public:
  FlowedMap(MapPtr base, std::shared_ptr<const BumpDiffeo> phi);
  int param_dim() const override { return base_->param_dim(); }
  int ambient_dim() const override { return base_->ambient_dim(); }
  Vec value(std::span<const double> p) const override;
  Jet1 jet1(std::span<const double> p) const override;

 private:
  MapPtr base_;
  std::shared_ptr<const BumpDiffeo> phi_;
};

/// Random bumps centered near the complex, with balls kept away from the
/// boundary cloud. Throws PlacementError when no admissible center is found
/// and InvalidInput when the amplitude breaks the Lipschitz bound.
BumpDiffeo random_boundary_fixing_diffeo(const SigmaComplex& s, int bump_count, double amplitude, std::uint64_t seed);

/// Single bump centered at the midpoint of edge `edge`, pushing into the
/// first incident face. Radius is half the distance to the boundary cloud.
BumpDiffeo edge_bump(const SigmaComplex& s, int edge, double amplitude);

struct PerturbOptions {
  int trials = 50;
  int bump_count = 2;
  double amplitude = 0.02;
  double edge_amplitude = 0.05;
  bool exploratory = false;  // skip the hypothesis gate, record instead of assert
};

/// Volume of the complex after each of `trials` random boundary-fixing
/// diffeomorphisms, against the unperturbed volume minus 10x the worst
/// quadrature error.
Report perturb_volume_test(const SigmaComplex& s, const QuadratureSpec& q, std::uint64_t seed,
                           const PerturbOptions& options = {});

/// Total volume of the complex; `phi` (optional) is applied to every face.
QuadratureResult sigma_volume(const SigmaComplex& s, const QuadratureSpec& q,
                                const std::shared_ptr<const BumpDiffeo>& phi = nullptr);

}  // namespace amdkit
