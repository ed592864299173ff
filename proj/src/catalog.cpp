#include <algorithm>

#include "amdkit/scene.hpp"

namespace amdkit {

namespace {

// z2 = z1^2 in C^2 with z1 = x1 + i x3, z2 = x2 + i x4, cut by the unit ball
// and by {Im z1 >= 0}. The boundary piece {x3 = x4 = 0} is x2 = x1^2 in the
// plane P = span(e1, e2); rotating about P in the (x3, x4) plane gives the
// fan. The ball meets the surface where r^2 + r^4 = 1.
const char* const kZw2Fan = R"json({
  "name": "zw2_fan",
  "ambient_dim": 4,
  "complex_structure": {"pairs": [[1, 3], [2, 4]]},
  "immersions": {
    "S0": {
      "kind": "expression",
      "params": ["p", "q"],
      "components": ["p", "p^2 - q^2", "q", "2*p*q"],
      "domain": [[-0.8, 0.8], [0, 0.8]],
      "predicates": ["x1^2 + x2^2 + x3^2 + x4^2 <= 1"]
    },
    "K": {
      "kind": "expression",
      "params": ["s"],
      "components": ["s", "s^2", "0", "0"],
      "domain": [["-sqrt((sqrt(5) - 1)/2)", "sqrt((sqrt(5) - 1)/2)"]]
    }
  },
  "planes": {"P": {"zero_coords": [3, 4]}},
  "calibrations": {"omega0": {"kind": "kahler"}},
  "complexes": {
    "fan": {"rotation_fan": {"face": "S0", "calibration": "omega0", "plane": "P", "k": 3,
                             "edges": [{"curve": "K", "map": ["s", "0"]}]}},
    "fan_flipped": {"rotation_fan": {"face": "S0", "calibration": "omega0", "plane": "P", "k": 3,
                                     "edges": [{"curve": "K", "map": ["s", "0"]}], "flip": [1]}}
  },
  "checks": {
    "check-holomorphic": {"immersion": "S0", "samples": 200},
    "check-vanishing-sum": {"calibration": "omega0", "plane": "P", "ks": [2, 3, 4, 5, 6, 7, 8]},
    "check-amd": {"complex": "fan", "samples": 64, "trials": 10},
    "volume": {"complex": "fan", "expected_per_face": "pi*((sqrt(5) - 1)/4 + ((sqrt(5) - 1)/2)^2)"},
    "stokes": {"complex": "fan"},
    "perturb": {"complex": "fan", "trials": 50, "seed": 7}
  }
})json";

// Catenoid with axis x1 and its normal bundle in C^3 = R^3 + R^3, cut by
// the ball of radius 2. The half v in [0, pi] has its boundary in the
// complex plane {x3 = y3 = 0}.
const char* const kCatenoidBundle = R"json({
  "name": "catenoid_bundle",
  "ambient_dim": 6,
  "complex_structure": "split",
  "immersions": {
    "M": {
      "kind": "expression",
      "params": ["u", "v"],
      "components": ["u", "cosh(u)*cos(v)", "cosh(u)*sin(v)"],
      "domain": [[-1.2, 1.2], [0, "2*pi"]]
    },
    "nuM": {"kind": "normal_bundle", "base": "M", "fiber": [[-2, 2]],
            "predicates": ["x1^2 + x2^2 + x3^2 + y1^2 + y2^2 + y3^2 <= 4"]},
    "M_half": {
      "kind": "expression",
      "params": ["u", "v"],
      "components": ["u", "cosh(u)*cos(v)", "cosh(u)*sin(v)"],
      "domain": [[-1.2, 1.2], [0, "pi"]]
    },
    "nuM_half": {"kind": "normal_bundle", "base": "M_half", "fiber": [[-2, 2]],
                 "predicates": ["x1^2 + x2^2 + x3^2 + y1^2 + y2^2 + y3^2 <= 4"]},
    "E0": {"kind": "restriction", "base": "nuM_half", "params": ["u", "t"], "components": ["u", "0", "t"],
           "domain": [[-1.2, 1.2], [-2, 2]], "predicates": ["x1^2 + x2^2 + x3^2 + y1^2 + y2^2 + y3^2 <= 4"]},
    "Epi": {"kind": "restriction", "base": "nuM_half", "params": ["u", "t"], "components": ["u", "pi", "t"],
            "domain": [[-1.2, 1.2], [-2, 2]], "predicates": ["x1^2 + x2^2 + x3^2 + y1^2 + y2^2 + y3^2 <= 4"]}
  },
  "planes": {"P": {"zero_coords": [3, 6]}},
  "calibrations": {"phi": {"kind": "special_lagrangian", "phase": "pi/2"}},
  "complexes": {
    "fan": {"rotation_fan": {"face": "nuM_half", "calibration": "phi", "plane": "P", "k": 3,
                             "edges": [{"curve": "E0", "map": ["u", "0", "t"]},
                                       {"curve": "Epi", "map": ["u", "pi", "t"]}]}}
  },
  "quadrature": {"gauss_order": 8, "max_subdivision_depth": 6, "target_rel_tol": 1e-4},
  "checks": {
    "check-austere": {"immersion": "M", "samples": 100},
    "check-lagrangian": {"immersion": "nuM", "samples": 200},
    "check-sl": {"immersion": "nuM", "phase": "pi/2", "samples": 200},
    "check-symmetry": {"immersion": "nuM_half", "plane": "P", "phase": "pi/2", "samples": 200},
    "check-vanishing-sum": {"calibration": "phi", "plane": "P", "ks": [2, 3, 4, 5, 6, 7, 8]},
    "check-amd": {"complex": "fan", "samples": 32, "trials": 4},
    "stokes": {"complex": "fan", "tol": 1e-3}
  }
})json";

// Quarter of the catenoid bundle, v in [0, pi/2]: one boundary part lies in
// {x3 = y3 = 0}, the other in {x2 = y2 = 0}.
const char* const kCatenoidBundleM1 = R"json({
  "name": "catenoid_bundle_m1",
  "ambient_dim": 6,
  "complex_structure": "split",
  "immersions": {
    "M1": {
      "kind": "expression",
      "params": ["u", "v"],
      "components": ["u", "cosh(u)*cos(v)", "cosh(u)*sin(v)"],
      "domain": [[-1.2, 1.2], [0, "pi/2"]]
    },
    "nuM1": {"kind": "normal_bundle", "base": "M1", "fiber": [[-2, 2]],
             "predicates": ["x1^2 + x2^2 + x3^2 + y1^2 + y2^2 + y3^2 <= 4"]}
  },
  "planes": {"P1": {"zero_coords": [3, 6]}, "P2": {"zero_coords": [2, 5]}},
  "calibrations": {"phi": {"kind": "special_lagrangian", "phase": "pi/2"}},
  "checks": {
    "check-sl": {"immersion": "nuM1", "phase": "pi/2", "samples": 200},
    "check-lagrangian": {"immersion": "nuM1", "samples": 200},
    "check-symmetry": {"immersion": "nuM1", "planes": ["P1", "P2"], "phase": "pi/2", "samples": 200},
    "check-vanishing-sum": {"calibration": "phi", "plane": "P2", "ks": [2, 3, 4]}
  }
})json";

// Catenoid with axis x1 (conformal parameters) and the harmonic function
// sinh(u) cos(v). The twist is tau x n = (cos v / cosh u, tanh u, 0).
const char* const kBorisenkoCatenoid = R"json({
  "name": "borisenko_catenoid",
  "ambient_dim": 6,
  "complex_structure": "split",
  "immersions": {
    "C": {
      "kind": "expression",
      "params": ["u", "v"],
      "components": ["u", "cosh(u)*cos(v)", "cosh(u)*sin(v)"],
      "domain": [[-1, 1], [0, "2*pi"]]
    },
    "B": {"kind": "borisenko", "base": "C", "rho": "sinh(u)*cos(v)", "fiber": [[-1, 1]]},
    "N": {"kind": "normal_bundle", "base": "C", "fiber": [[-1, 1]]}
  },
  "checks": {
    "check-sl": {"immersion": "B", "phase": "pi/2", "samples": 200},
    "check-lagrangian": {"immersion": "B", "samples": 200},
    "check-austere": {"immersion": "C", "samples": 100}
  }
})json";

// Cone over the Clifford torus in R^4, apex cut away, and its normal bundle
// in C^4.
const char* const kCliffordCone = R"json({
  "name": "clifford_cone_bundle",
  "ambient_dim": 8,
  "complex_structure": "split",
  "immersions": {
    "cone": {
      "kind": "expression",
      "params": ["w", "a", "b"],
      "components": ["w*cos(a)/sqrt(2)", "w*sin(a)/sqrt(2)", "w*cos(b)/sqrt(2)", "w*sin(b)/sqrt(2)"],
      "domain": [[0.05, 1], [0, "2*pi"], [0, "2*pi"]]
    },
    "nu": {"kind": "normal_bundle", "base": "cone", "fiber": [[-1, 1]]}
  },
  "checks": {
    "check-austere": {"immersion": "cone", "samples": 100},
    "check-lagrangian": {"immersion": "nu", "samples": 200},
    "check-sl": {"immersion": "nu", "phase": "pi/2", "samples": 200, "tol": 1e-6}
  }
})json";

// Unit circle with the inward unit normal spans the catenoid; the bundle
// variant hands the solver the normal scaled by 2.
const char* const kBjorlingCircle = R"json({
  "name": "bjorling_circle_catenoid",
  "ambient_dim": 6,
  "complex_structure": "split",
  "immersions": {
    "X": {"kind": "bjorling", "curve": ["cos(t)", "sin(t)", "0"], "normal": ["-cos(t)", "-sin(t)", "0"],
          "unit_normal": ["-cos(t)", "-sin(t)", "0"], "interval": [0, "2*pi"], "v_max": 0.5},
    "XB": {"kind": "bjorling_bundle", "curve": ["cos(t)", "sin(t)", "0"], "normal": ["-2*cos(t)", "-2*sin(t)", "0"],
           "normal_norm": "2", "interval": [0, "2*pi"], "v_max": 0.5}
  },
  "checks": {
    "bjorling": {"immersion": "XB", "samples": 101},
    "check-austere": {"immersion": "X", "samples": 100},
    "check-sl": {"immersion": "XB", "phase": "pi/2", "samples": 200}
  }
})json";

// Round sphere: its normal bundle is Lagrangian but not special Lagrangian.
const char* const kSphereBundle = R"json({
  "name": "sphere_bundle",
  "ambient_dim": 6,
  "complex_structure": "split",
  "immersions": {
    "S": {
      "kind": "expression",
      "params": ["a", "b"],
      "components": ["sin(a)*cos(b)", "sin(a)*sin(b)", "cos(a)"],
      "domain": [[0.3, "pi - 0.3"], [0, "2*pi"]]
    },
    "nuS": {"kind": "normal_bundle", "base": "S", "fiber": [[-1, 1]]}
  },
  "checks": {
    "check-sl": {"immersion": "nuS", "phase": "pi/2", "samples": 200},
    "check-lagrangian": {"immersion": "nuS", "samples": 200},
    "check-austere": {"immersion": "S", "samples": 100}
  }
})json";

// Two rectangles of the complex line {x2 = x4 = 0} meeting along a segment
// of the x1 axis: a k = 2 fan whose union is a flat square.
const char* const kHalfplanePair = R"json({
  "name": "halfplane_pair",
  "ambient_dim": 4,
  "complex_structure": {"pairs": [[1, 3], [2, 4]]},
  "immersions": {
    "F": {"kind": "expression", "params": ["a", "b"], "components": ["a", "0", "b", "0"],
          "domain": [[-1, 1], [0, 1]]},
    "E": {"kind": "expression", "params": ["s"], "components": ["s", "0", "0", "0"], "domain": [[-1, 1]]}
  },
  "planes": {"P": {"zero_coords": [3, 4]}},
  "calibrations": {"omega0": {"kind": "kahler"}},
  "complexes": {
    "pair": {"rotation_fan": {"face": "F", "calibration": "omega0", "plane": "P", "k": 2,
                              "edges": [{"curve": "E", "map": ["s", "0"]}]}}
  },
  "checks": {
    "check-vanishing-sum": {"calibration": "omega0", "plane": "P", "k": 2},
    "check-amd": {"complex": "pair", "samples": 64, "trials": 10},
    "volume": {"complex": "pair", "expected_per_face": 2},
    "stokes": {"complex": "pair"},
    "perturb": {"complex": "pair", "trials": 20}
  }
})json";

}  // namespace

const std::vector<BuiltinScene>& builtin_scenes() {
  static const std::vector<BuiltinScene> scenes{
      {"zw2_fan", "k rotated copies of the cut surface z2 = z1^2 glued along x2 = x1^2", kZw2Fan},
      {"catenoid_bundle", "normal bundle of the catenoid and the k = 3 fan of its half", kCatenoidBundle},
      {"catenoid_bundle_m1", "quarter catenoid bundle with two planar boundary parts", kCatenoidBundleM1},
      {"borisenko_catenoid", "twisted bundle over the catenoid with rho = sinh(u) cos(v)", kBorisenkoCatenoid},
      {"clifford_cone_bundle", "normal bundle of the cone over the Clifford torus", kCliffordCone},
      {"bjorling_circle_catenoid", "Bjorling data on the unit circle, solution and bundle", kBjorlingCircle},
      {"sphere_bundle", "normal bundle of the round sphere (not special Lagrangian)", kSphereBundle},
      {"halfplane_pair", "two half-strips of a complex line glued along a segment, k = 2", kHalfplanePair},
  };
  return scenes;
}

const BuiltinScene* find_builtin(const std::string& name) {
  const auto& all = builtin_scenes();
  auto it = std::find_if(all.begin(), all.end(), [&](const BuiltinScene& s) { return s.name == name; });
  return it == all.end() ? nullptr : &*it;
}

}  // namespace amdkit
