#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amdkit/expr.hpp"
#include "amdkit/geometry.hpp"
#include "amdkit/report.hpp"

namespace amdkit {

/// Total space of a (twisted) normal bundle, parametrized by the base
/// parameters followed by the fiber coordinates t_1..t_{n-m}:
/// (u, t) -> (r(u), s(u) + sum_j t_j nu_j(u)) in R^n + R^n.
struct BundleImmersion {
  Immersion base;
  int fiber_dim;
  Immersion total;
};

/// Normal bundle of an m-dimensional immersion in R^n. The normal frame is
/// the Hodge dual of the tangent frame for hypersurfaces and Gram-Schmidt of
/// the first usable coordinate axes otherwise; it is oriented so that
/// (tangent frame, normal frame) is positive. Empty `fiber_box` means
/// [-1, 1] per fiber coordinate.
BundleImmersion normal_bundle(const Immersion& base, std::vector<Interval> fiber_box = {});

/// Twisted bundle over a minimal surface in R^3 with second component
/// tau x n + t n, tau = (rho_u r_v - rho_v r_u) / |r_u x r_v|. Checks the
/// minimality of the base and the harmonicity of rho at `samples` points
/// and throws PreconditionError with the measured defect otherwise.
BundleImmersion borisenko_bundle(const Immersion& base, const expr::Expression& rho,
                                 std::vector<Interval> fiber_box = {}, int samples = 64, std::uint64_t seed = 1,
                                 double tol = 1e-6);

/// Max |Laplace-Beltrami(rho)| over interior samples of a surface. `rho`
/// is written over the surface parameters.
double harmonic_defect(const Immersion& m, const expr::Expression& rho, int samples, std::uint64_t seed);

/// Max |H| over interior samples.
double max_mean_curvature(const Immersion& m, int samples, std::uint64_t seed);

/// Analytic curve and normal field in R^3, written over one parameter.
/// The unit normal is either given directly or as normal / normal_norm
/// where normal_norm is an expression for |normal|.
struct BjorlingData {
  std::string param = "t";
  std::vector<expr::Expression> curve;
  std::vector<expr::Expression> normal;
  std::vector<expr::Expression> unit_normal;      // optional
  std::optional<expr::Expression> normal_norm;    // optional
  Interval interval{0.0, 1.0};
  double v_max = 0.5;

  /// Checks curve' . normal = 0, normal != 0 and the unit-normal
  /// consistency on `samples` points; throws PreconditionError.
  void validate(int samples = 101) const;
};

/// Minimal surface X(u, v) = Re c(z) + int_0^v Re (n x c')(u + i s) ds,
/// z = u + i v, on interval x [-v_max, v_max]. Along v = 0 it contains the
/// curve and its unit normal is +normal/|normal|.
Immersion bjorling_solve(const BjorlingData& data);

struct BjorlingBundle {
  Immersion surface;
  BundleImmersion bundle;
  Report report;
};

/// Solves the Bjorling problem, takes the normal bundle of the solution and
/// checks that t -> (curve(t), normal(t)) lies on it. The fiber box
/// defaults to a symmetric interval covering |normal|.
BjorlingBundle bjorling_bundle(const BjorlingData& data, std::vector<Interval> fiber_box = {}, int samples = 101,
                               std::uint64_t seed = 1);

}  // namespace amdkit
