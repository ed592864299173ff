#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "amdkit/exterior.hpp"
#include "amdkit/expr.hpp"
#include "amdkit/report.hpp"

namespace amdkit {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

/// Value and first derivatives of a map at a parameter point.
struct Jet1 {
  Vec point;
  Mat jacobian;  // n x k
};

/// Value, Jacobian and the stack of component Hessians.
struct Jet2 {
  Vec point;
  Mat jacobian;               // n x k
  std::vector<Mat> hessians;  // n matrices, each k x k and symmetric
};

/// A smooth map R^k -> R^n. Implementations must be immutable and
/// thread-compatible.
class Map {
 public:
  virtual ~Map() = default;
  virtual int param_dim() const = 0;
  virtual int ambient_dim() const = 0;
  virtual Vec value(std::span<const double> p) const { return jet1(p).point; }
  virtual Jet1 jet1(std::span<const double> p) const = 0;
  /// Defaults to central differences of jet1 (step 1e-5), symmetrized.
  virtual Jet2 jet2(std::span<const double> p) const;
};

using MapPtr = std::shared_ptr<const Map>;

/// Component expressions in the parameters, evaluated over jet rings.
class ExpressionMap final : public Map {
 public:
  explicit ExpressionMap(std::vector<expr::Expression> components);
  /// Parses every component against `params`.
  ExpressionMap(const std::vector<std::string>& params, const std::vector<std::string>& components);

  int param_dim() const override { return param_dim_; }
  int ambient_dim() const override { return static_cast<int>(components_.size()); }
  Vec value(std::span<const double> p) const override;
  Jet1 jet1(std::span<const double> p) const override;
  Jet2 jet2(std::span<const double> p) const override;
  const std::vector<expr::Expression>& components() const { return components_; }

 private:
  std::vector<expr::Expression> components_;
  int param_dim_;
};

/// x -> A f(x).
class LinearImageMap final : public Map {
 public:
  LinearImageMap(Mat a, MapPtr base);
  int param_dim() const override { return base_->param_dim(); }
  int ambient_dim() const override { return static_cast<int>(a_.rows()); }
  Vec value(std::span<const double> p) const override;
  Jet1 jet1(std::span<const double> p) const override;
  Jet2 jet2(std::span<const double> p) const override;

 private:
  Mat a_;
  MapPtr base_;
};

/// x -> outer(inner(x)).
class ComposedMap final : public Map {
 public:
  ComposedMap(MapPtr outer, MapPtr inner);
  int param_dim() const override { return inner_->param_dim(); }
  int ambient_dim() const override { return outer_->ambient_dim(); }
  Vec value(std::span<const double> p) const override;
  Jet1 jet1(std::span<const double> p) const override;

 private:
  MapPtr outer_;
  MapPtr inner_;
};

/// `lhs <= rhs` stored as g = lhs - rhs; the point is inside when g <= 0.
struct Predicate {
  expr::Expression g;
  std::string text;
};

/// Parses "a <= b" or "a >= b" over the given variables.
Predicate parse_predicate(const std::string& text, const std::vector<std::string>& variables);

/// Parameter region: a closed box optionally clipped by predicates. Each
/// clip group evaluates its predicates on (first `param_count` parameters,
/// coordinates of its own map), so regions survive composition with
/// ambient diffeomorphisms unchanged.
class Region {
 public:
  struct Clip {
    MapPtr coords;
    int param_count;
    std::vector<Predicate> predicates;
  };

  Region() = default;
  explicit Region(std::vector<Interval> box);

  int dim() const { return static_cast<int>(box_.size()); }
  const std::vector<Interval>& box() const { return box_; }
  const std::vector<Clip>& clips() const { return clips_; }
  bool clipped() const { return !clips_.empty(); }

  Region with_clip(Clip clip) const;
  /// Appends intervals (e.g. a fiber box) to the parameter box.
  Region extended(const std::vector<Interval>& extra) const;

  bool in_box(std::span<const double> p, double tol = 0.0) const;
  bool contains(std::span<const double> p) const;
  /// Largest predicate value (<= 0 inside); -inf without clips.
  double predicate_value(std::span<const double> p) const;
  /// True when p is in the closed region and on a box face or a predicate
  /// level set, within tol.
  bool on_boundary(std::span<const double> p, double tol) const;
  /// Outward unit normal in parameter space at a boundary point.
  Vec outward_normal(std::span<const double> p, double tol) const;

  /// Uniform interior sample (box shrunk by `margin` relative, then
  /// predicate rejection).
  Vec sample_interior(std::mt19937_64& rng, double margin = 1e-3) const;

  /// Points on the region boundary: box faces that are inside, plus
  /// predicate crossings located by bisection on a grid of `per_axis`
  /// cells per side.
  std::vector<Vec> sample_boundary(int per_axis) const;

 private:
  std::vector<Interval> box_;
  std::vector<Clip> clips_;
};

/// A parametrized map restricted to a region, with names for parameters
/// and ambient coordinates (used by predicates and scene files).
class Immersion {
 public:
  Immersion(MapPtr map, Region region, std::vector<std::string> param_names = {},
            std::vector<std::string> coord_names = {});

  const Map& map() const { return *map_; }
  const MapPtr& map_ptr() const { return map_; }
  const Region& region() const { return region_; }
  int param_dim() const { return map_->param_dim(); }
  int ambient_dim() const { return map_->ambient_dim(); }
  const std::vector<std::string>& param_names() const { return param_names_; }
  const std::vector<std::string>& coord_names() const { return coord_names_; }

  /// Evaluation entry points; throw InvalidInput outside the parameter box.
  Vec value(std::span<const double> p) const;
  Jet1 jet1(std::span<const double> p) const;
  Jet2 jet2(std::span<const double> p) const;

  /// Adds predicates written over param_names() and coord_names().
  Immersion clipped(const std::vector<std::string>& predicates) const;
  Immersion with_region(Region region) const;
  Immersion with_map(MapPtr map) const;

  static Immersion from_expressions(const std::vector<std::string>& params,
                                    const std::vector<std::string>& components,
                                    const std::vector<Interval>& box);

 private:
  void require_in_box(std::span<const double> p) const;

  MapPtr map_;
  Region region_;
  std::vector<std::string> param_names_;
  std::vector<std::string> coord_names_;
};

std::vector<std::string> default_coord_names(int n, const std::string& prefix = "x");

struct QuadratureSpec {
  int gauss_order = 16;
  int max_subdivision_depth = 8;
  double target_rel_tol = 1e-6;
  double target_abs_tol = 0.0;     // met when either tolerance is met
  long max_evaluations = 4000000;  // refinement stops here with a warning
  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
  int cells = 0;
  bool warning = false;  // estimated error above tolerance after max depth
};

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int order);

/// Tensor Gauss-Legendre over the region with globally adaptive
/// subdivision: the cell with the largest error estimate (order n against
/// n/2) is split until the total estimate meets the tolerance. Cells cut by
/// the predicates integrate along lines in the axis most transverse to the
/// boundary, restricted to the inside segments.
QuadratureResult integrate(const Region& region, const std::function<double(std::span<const double>)>& f,
                           const QuadratureSpec& spec);

Jet2 jet2_eval(const Immersion& f, std::span<const double> p);

/// Gram matrix J^T J; throws DegeneracyError when it is not positive definite.
Mat first_fundamental(const Jet1& j);
Mat first_fundamental(const Jet2& j);

/// Hodge dual of the wedge of the Jacobian columns, normalized; k == n - 1.
Vec unit_normal_hypersurface(const Mat& jacobian);
Vec unit_normal_hypersurface(const Jet2& j);

/// G^{-1} II with II_ab = <hess_ab, normal>.
Mat shape_operator(const Jet2& j, const Vec& normal);

std::vector<double> principal_curvatures(const Jet2& j, const Vec& normal);
std::vector<double> principal_curvatures(const Immersion& f, std::span<const double> p, const Vec& normal);

/// Orientation-preserving Gram-Schmidt of the columns; throws
/// DegeneracyError when a column collapses.
Mat orthonormal_frame(const Mat& columns);

/// Random unit vector orthogonal to the columns of `jacobian`.
Vec random_unit_normal(const Mat& jacobian, std::mt19937_64& rng);

/// Mean curvature vector of an immersion, trace of the shape operator
/// along every normal direction: H = sum_i tr(S_{nu_i}) nu_i.
Vec mean_curvature_vector(const Jet2& j);

Report is_austere(const Immersion& f, int samples, int normal_trials, double tol, std::uint64_t seed);

QuadratureResult volume(const Immersion& f, const QuadratureSpec& q);

/// Smallest singular value of the Jacobian.
double jacobian_min_singular(const Mat& jacobian);

}  // namespace amdkit
