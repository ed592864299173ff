#include "amdkit/scene.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace amdkit {

namespace {

using json = nlohmann::ordered_json;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

template <class M>
std::vector<std::string> keys_of(const M& m) {
  std::vector<std::string> out;
  for (const auto& [k, v] : m) out.push_back(k);
  return out;
}

std::string child(const std::string& loc, const std::string& key) { return loc + "/" + key; }
std::string child(const std::string& loc, std::size_t i) { return loc + "/" + std::to_string(i); }

void require_object(const json& j, const std::string& loc) {
  if (!j.is_object()) throw ValidationError(loc, "expected an object");
}

void require_keys(const json& j, const std::string& loc, const std::vector<std::string>& allowed) {
  require_object(j, loc);
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(child(loc, key), "unknown field; allowed: " + join(allowed));
    }
  }
}

const json& field(const json& j, const std::string& key, const std::string& loc) {
  if (!j.contains(key)) throw ValidationError(child(loc, key), "missing required field");
  return j.at(key);
}

std::string string_of(const json& j, const std::string& loc) {
  if (!j.is_string()) throw ValidationError(loc, "expected a string");
  return j.get<std::string>();
}

int int_of(const json& j, const std::string& loc) {
  if (!j.is_number_integer()) throw ValidationError(loc, "expected an integer");
  return j.get<int>();
}

/// Wraps parser errors with the location and the offending text.
expr::Expression parse_at(const std::string& text, const std::vector<std::string>& vars, const std::string& loc) {
  try {
    return expr::parse(text, vars);
  } catch (const expr::SyntaxError& e) {
    throw ValidationError(loc, "cannot parse expression '" + text + "' at line " + std::to_string(e.line()) +
                                   ", column " + std::to_string(e.column()) + ": " + e.what());
  } catch (const expr::UnknownIdentifier& e) {
    throw ValidationError(loc, "expression '" + text + "': " + e.what());
  }
}

/// A number or a constant expression such as "pi/2".
double number_of(const json& j, const std::string& loc) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const expr::Expression e = parse_at(j.get<std::string>(), {}, loc);
    try {
      const double v = e.eval({});
      if (!std::isfinite(v)) throw ValidationError(loc, "value is not finite");
      return v;
    } catch (const expr::EvalError& err) {
      throw ValidationError(loc, err.what());
    }
  }
  throw ValidationError(loc, "expected a number or a constant expression");
}

std::vector<std::string> strings_of(const json& j, const std::string& loc) {
  if (!j.is_array()) throw ValidationError(loc, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(string_of(j[i], child(loc, i)));
  return out;
}

std::vector<Interval> box_of(const json& j, const std::string& loc) {
  if (!j.is_array()) throw ValidationError(loc, "expected an array of [lo, hi] pairs");
  std::vector<Interval> box;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string l = child(loc, i);
    if (!j[i].is_array() || j[i].size() != 2) throw ValidationError(l, "expected [lo, hi]");
    const Interval iv{number_of(j[i][0], child(l, 0)), number_of(j[i][1], child(l, 1))};
    if (!(iv.lo < iv.hi)) throw ValidationError(l, "empty or unbounded interval");
    box.push_back(iv);
  }
  return box;
}

Vec vector_of(const json& j, int n, const std::string& loc) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw ValidationError(loc, "expected " + std::to_string(n) + " numbers");
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = number_of(j[static_cast<std::size_t>(i)], child(loc, static_cast<std::size_t>(i)));
  return v;
}

template <class F>
auto guarded(const std::string& loc, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ValidationError(loc, e.what());
  } catch (const expr::SyntaxError& e) {
    throw ValidationError(loc, e.what());
  } catch (const expr::UnknownIdentifier& e) {
    throw ValidationError(loc, e.what());
  }
}

MapPtr param_map_of(const json& j, const std::vector<std::string>& params, int target_dim, const std::string& loc) {
  const auto comps = strings_of(j, loc);
  if (static_cast<int>(comps.size()) != target_dim) {
    throw ValidationError(loc, "expected " + std::to_string(target_dim) + " components");
  }
  std::vector<expr::Expression> exprs;
  for (std::size_t i = 0; i < comps.size(); ++i) exprs.push_back(parse_at(comps[i], params, child(loc, i)));
  return std::make_shared<ExpressionMap>(std::move(exprs));
}

// ---------------------------------------------------------------------------
// Immersions

class Loader {
 public:
  Loader(Scene& scene, const json& doc) : scene_(scene), doc_(doc) {}

  void load();

 private:
  void load_structure(const json& j, const std::string& loc);
  void load_plane(const std::string& name, const json& j, const std::string& loc);
  const SceneImmersion& immersion_ref(const json& j, const std::string& loc);
  SceneImmersion load_immersion(const json& j, const std::string& loc);
  Immersion apply_predicates(const Immersion& im, const json& j, const std::string& loc);
  BjorlingData bjorling_data(const json& j, const std::string& loc);
  CalibrationForm load_calibration(const json& j, const std::string& loc, int depth);
  void validate_complex(const json& j, const std::string& loc);
  void validate_checks(const json& j, const std::string& loc);

  Scene& scene_;
  const json& doc_;
  std::set<std::string> loading_;
};

void Loader::load_structure(const json& j, const std::string& loc) {
  if (j.is_string() && j.get<std::string>() == "split") {
    if (scene_.ambient_dim % 2 != 0) throw ValidationError(loc, "split structure needs an even ambient dimension");
    scene_.complex_structure = ComplexStructure::split(scene_.ambient_dim / 2);
    return;
  }
  require_keys(j, loc, {"pairs"});
  const json& pairs = field(j, "pairs", loc);
  const std::string ploc = child(loc, "pairs");
  if (!pairs.is_array()) throw ValidationError(ploc, "expected an array of [a, b] index pairs");
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string l = child(ploc, i);
    if (!pairs[i].is_array() || pairs[i].size() != 2) throw ValidationError(l, "expected [a, b]");
    // Scene files count coordinates from 1, like x1..xn.
    out.emplace_back(int_of(pairs[i][0], child(l, 0)) - 1, int_of(pairs[i][1], child(l, 1)) - 1);
  }
  scene_.complex_structure = guarded(loc, [&] { return ComplexStructure(scene_.ambient_dim, out); });
}

void Loader::load_plane(const std::string& name, const json& j, const std::string& loc) {
  require_keys(j, loc, {"perp", "zero_coords"});
  const int n = scene_.ambient_dim;
  Vec f1, f2;
  if (j.contains("perp")) {
    const json& perp = j.at("perp");
    const std::string l = child(loc, "perp");
    if (!perp.is_array() || perp.size() != 2) throw ValidationError(l, "expected two vectors");
    f1 = vector_of(perp[0], n, child(l, 0));
    f2 = vector_of(perp[1], n, child(l, 1));
  } else if (j.contains("zero_coords")) {
    const json& z = j.at("zero_coords");
    const std::string l = child(loc, "zero_coords");
    if (!z.is_array() || z.size() != 2) throw ValidationError(l, "expected two coordinate indices");
    const int a = int_of(z[0], child(l, 0));
    const int b = int_of(z[1], child(l, 1));
    if (a < 1 || a > n || b < 1 || b > n || a == b) throw ValidationError(l, "indices must be distinct in 1.." + std::to_string(n));
    f1 = Vec::Unit(n, a - 1);
    f2 = Vec::Unit(n, b - 1);
  } else {
    throw ValidationError(loc, "plane needs 'perp' or 'zero_coords'");
  }
  scene_.planes.emplace(name, guarded(loc, [&] { return Codim2Plane(f1, f2); }));
}

const SceneImmersion& Loader::immersion_ref(const json& j, const std::string& loc) {
  const std::string name = string_of(j, loc);
  if (scene_.immersions.count(name) == 0) {
    const json& defs = doc_.at("immersions");
    if (defs.contains(name) && loading_.count(name) == 0) {
      loading_.insert(name);
      scene_.immersions.emplace(name, load_immersion(defs.at(name), "/immersions/" + name));
    } else if (loading_.count(name) != 0) {
      throw ValidationError(loc, "immersion '" + name + "' refers to itself");
    }
  }
  return scene_.immersion(name, loc);
}

Immersion Loader::apply_predicates(const Immersion& im, const json& j, const std::string& loc) {
  if (!j.contains("predicates")) return im;
  const auto preds = strings_of(j.at("predicates"), child(loc, "predicates"));
  if (preds.empty()) return im;
  std::vector<std::string> vars = im.param_names();
  vars.insert(vars.end(), im.coord_names().begin(), im.coord_names().end());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    guarded(child(child(loc, "predicates"), i), [&] { return parse_predicate(preds[i], vars); });
  }
  return im.clipped(preds);
}

BjorlingData Loader::bjorling_data(const json& j, const std::string& loc) {
  BjorlingData d;
  if (j.contains("param")) d.param = string_of(j.at("param"), child(loc, "param"));
  const std::vector<std::string> vars{d.param};
  auto triple = [&](const char* key) {
    const std::string l = child(loc, key);
    const auto comps = strings_of(j.at(key), l);
    if (comps.size() != 3) throw ValidationError(l, "expected 3 components");
    std::vector<expr::Expression> out;
    for (std::size_t i = 0; i < 3; ++i) out.push_back(parse_at(comps[i], vars, child(l, i)));
    return out;
  };
  field(j, "curve", loc);
  field(j, "normal", loc);
  d.curve = triple("curve");
  d.normal = triple("normal");
  if (j.contains("unit_normal")) d.unit_normal = triple("unit_normal");
  if (j.contains("normal_norm")) {
    d.normal_norm = parse_at(string_of(j.at("normal_norm"), child(loc, "normal_norm")), vars, child(loc, "normal_norm"));
  }
  if (d.unit_normal.empty() && !d.normal_norm) {
    throw ValidationError(loc, "Bjorling data needs 'unit_normal' or 'normal_norm'");
  }
  const auto iv = box_of(json::array({field(j, "interval", loc)}), child(loc, "interval"));
  d.interval = iv[0];
  if (j.contains("v_max")) d.v_max = number_of(j.at("v_max"), child(loc, "v_max"));
  if (!(d.v_max > 0.0)) throw ValidationError(child(loc, "v_max"), "must be positive");
  return d;
}

SceneImmersion Loader::load_immersion(const json& j, const std::string& loc) {
  require_object(j, loc);
  const std::string kind = string_of(field(j, "kind", loc), child(loc, "kind"));
  struct {
    std::optional<Immersion> immersion;
    std::optional<BundleImmersion> bundle;
    std::optional<expr::Expression> rho;
    std::optional<BjorlingData> bjorling;
  } out;

  auto fiber = [&]() -> std::vector<Interval> {
    return j.contains("fiber") ? box_of(j.at("fiber"), child(loc, "fiber")) : std::vector<Interval>{};
  };

  if (kind == "expression") {
    require_keys(j, loc, {"kind", "params", "components", "domain", "predicates", "coords"});
    const auto params = strings_of(field(j, "params", loc), child(loc, "params"));
    const auto comps = strings_of(field(j, "components", loc), child(loc, "components"));
    const auto box = box_of(field(j, "domain", loc), child(loc, "domain"));
    if (box.size() != params.size()) throw ValidationError(child(loc, "domain"), "needs one interval per parameter");
    if (comps.empty()) throw ValidationError(child(loc, "components"), "expected at least one component");
    std::vector<expr::Expression> exprs;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      exprs.push_back(parse_at(comps[i], params, child(child(loc, "components"), i)));
    }
    std::vector<std::string> coords;
    if (j.contains("coords")) coords = strings_of(j.at("coords"), child(loc, "coords"));
    out.immersion = guarded(loc, [&] {
      return Immersion(std::make_shared<ExpressionMap>(std::move(exprs)), Region(box), params, coords);
    });
  } else if (kind == "restriction") {
    require_keys(j, loc, {"kind", "base", "params", "components", "domain", "predicates"});
    const SceneImmersion& base = immersion_ref(field(j, "base", loc), child(loc, "base"));
    const auto params = strings_of(field(j, "params", loc), child(loc, "params"));
    const auto box = box_of(field(j, "domain", loc), child(loc, "domain"));
    if (box.size() != params.size()) throw ValidationError(child(loc, "domain"), "needs one interval per parameter");
    MapPtr inner = param_map_of(field(j, "components", loc), params, base.immersion.param_dim(), child(loc, "components"));
    out.immersion = guarded(loc, [&] {
      return Immersion(std::make_shared<ComposedMap>(base.immersion.map_ptr(), inner), Region(box), params,
                       base.immersion.coord_names());
    });
  } else if (kind == "normal_bundle") {
    require_keys(j, loc, {"kind", "base", "fiber", "predicates"});
    const SceneImmersion& base = immersion_ref(field(j, "base", loc), child(loc, "base"));
    out.bundle = guarded(loc, [&] { return normal_bundle(base.immersion, fiber()); });
    out.immersion = out.bundle->total;
  } else if (kind == "borisenko") {
    require_keys(j, loc, {"kind", "base", "rho", "fiber", "predicates"});
    const SceneImmersion& base = immersion_ref(field(j, "base", loc), child(loc, "base"));
    out.rho = parse_at(string_of(field(j, "rho", loc), child(loc, "rho")), base.immersion.param_names(), child(loc, "rho"));
    out.bundle = guarded(loc, [&] { return borisenko_bundle(base.immersion, *out.rho, fiber()); });
    out.immersion = out.bundle->total;
  } else if (kind == "bjorling" || kind == "bjorling_bundle") {
    require_keys(j, loc, {"kind", "param", "curve", "normal", "unit_normal", "normal_norm", "interval", "v_max", "fiber",
                          "predicates"});
    out.bjorling = bjorling_data(j, loc);
    if (kind == "bjorling") {
      out.immersion = guarded(loc, [&] { return bjorling_solve(*out.bjorling); });
    } else {
      BjorlingBundle b = guarded(loc, [&] { return bjorling_bundle(*out.bjorling, fiber()); });
      out.bundle = b.bundle;
      out.immersion = b.bundle.total;
    }
  } else if (kind == "rotated") {
    require_keys(j, loc, {"kind", "base", "plane", "angle", "predicates"});
    const SceneImmersion& base = immersion_ref(field(j, "base", loc), child(loc, "base"));
    const Codim2Plane& p = scene_.plane(string_of(field(j, "plane", loc), child(loc, "plane")), child(loc, "plane"));
    const double angle = number_of(field(j, "angle", loc), child(loc, "angle"));
    out.immersion = guarded(loc, [&] {
      return base.immersion.with_map(
          std::make_shared<LinearImageMap>(rotation_about_plane(p, angle), base.immersion.map_ptr()));
    });
  } else {
    throw ValidationError(child(loc, "kind"), "unknown immersion kind '" + kind +
                                                  "'; known: expression, restriction, normal_bundle, borisenko, "
                                                  "bjorling, bjorling_bundle, rotated");
  }
  out.immersion = apply_predicates(*out.immersion, j, loc);
  if (out.bundle) out.bundle->total = *out.immersion;
  return SceneImmersion{kind, *out.immersion, out.bundle, out.rho, out.bjorling};
}

CalibrationForm Loader::load_calibration(const json& j, const std::string& loc, int depth) {
  require_keys(j, loc, {"kind", "phase", "base", "plane", "angle", "sign"});
  if (depth > 16) throw ValidationError(loc, "calibration definitions nest too deeply");
  const std::string kind = string_of(field(j, "kind", loc), child(loc, "kind"));
  std::optional<CalibrationForm> out;
  if (kind == "kahler") {
    out = kahler_form(scene_.structure(loc));
  } else if (kind == "special_lagrangian") {
    const double phase = j.contains("phase") ? number_of(j.at("phase"), child(loc, "phase")) : 0.0;
    out = sl_form(scene_.structure(loc), phase);
  } else if (kind == "rotated") {
    const std::string base = string_of(field(j, "base", loc), child(loc, "base"));
    const json& defs = doc_.at("calibrations");
    if (!defs.contains(base)) {
      std::vector<std::string> names;
      for (const auto& [k, v] : defs.items()) names.push_back(k);
      throw ValidationError(child(loc, "base"), "undefined calibration '" + base + "'; defined: " + join(names));
    }
    const CalibrationForm b = load_calibration(defs.at(base), "/calibrations/" + base, depth + 1);
    const Codim2Plane& p = scene_.plane(string_of(field(j, "plane", loc), child(loc, "plane")), child(loc, "plane"));
    const double angle = number_of(field(j, "angle", loc), child(loc, "angle"));
    out = CalibrationForm{pushforward(b.form, rotation_about_plane(p, angle)), CalibrationKind::Rotated, b.phase};
  } else {
    throw ValidationError(child(loc, "kind"), "unknown calibration kind '" + kind +
                                                  "'; known: kahler, special_lagrangian, rotated");
  }
  if (j.contains("sign")) {
    const int sign = int_of(j.at("sign"), child(loc, "sign"));
    if (sign != 1 && sign != -1) throw ValidationError(child(loc, "sign"), "must be 1 or -1");
    if (sign == -1) out->form = -out->form;
  }
  return *out;
}

void Loader::validate_complex(const json& j, const std::string& loc) {
  require_object(j, loc);
  auto check_map = [&](const json& m, const SceneImmersion& curve, const SceneImmersion& face, const std::string& l) {
    param_map_of(m, curve.immersion.param_names(), face.immersion.param_dim(), l);
  };
  if (j.contains("rotation_fan")) {
    require_keys(j, loc, {"rotation_fan"});
    const json& f = j.at("rotation_fan");
    const std::string l = child(loc, "rotation_fan");
    require_keys(f, l, {"face", "calibration", "orientation", "plane", "k", "edges", "flip"});
    const SceneImmersion& face = immersion_ref(field(f, "face", l), child(l, "face"));
    scene_.calibration(string_of(field(f, "calibration", l), child(l, "calibration")), child(l, "calibration"));
    scene_.plane(string_of(field(f, "plane", l), child(l, "plane")), child(l, "plane"));
    if (f.contains("k") && int_of(f.at("k"), child(l, "k")) < 2) throw ValidationError(child(l, "k"), "k must be >= 2");
    if (f.contains("orientation")) {
      const int o = int_of(f.at("orientation"), child(l, "orientation"));
      if (o != 1 && o != -1) throw ValidationError(child(l, "orientation"), "must be 1 or -1");
    }
    const json& edges = field(f, "edges", l);
    if (!edges.is_array() || edges.empty()) throw ValidationError(child(l, "edges"), "expected a non-empty array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string el = child(child(l, "edges"), i);
      require_keys(edges[i], el, {"curve", "map"});
      const SceneImmersion& curve = immersion_ref(field(edges[i], "curve", el), child(el, "curve"));
      check_map(field(edges[i], "map", el), curve, face, child(el, "map"));
    }
    if (f.contains("flip")) {
      const json& flip = f.at("flip");
      if (!flip.is_array()) throw ValidationError(child(l, "flip"), "expected an array of face indices");
      for (std::size_t i = 0; i < flip.size(); ++i) int_of(flip[i], child(child(l, "flip"), i));
    }
    return;
  }
  require_keys(j, loc, {"faces", "edges"});
  const json& faces = field(j, "faces", loc);
  if (!faces.is_array() || faces.empty()) throw ValidationError(child(loc, "faces"), "expected a non-empty array");
  std::map<std::string, const SceneImmersion*> by_name;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const std::string fl = child(child(loc, "faces"), i);
    require_keys(faces[i], fl, {"name", "immersion", "orientation", "calibration"});
    const std::string name = string_of(field(faces[i], "name", fl), child(fl, "name"));
    by_name[name] = &immersion_ref(field(faces[i], "immersion", fl), child(fl, "immersion"));
    scene_.calibration(string_of(field(faces[i], "calibration", fl), child(fl, "calibration")), child(fl, "calibration"));
  }
  const json& edges = field(j, "edges", loc);
  if (!edges.is_array()) throw ValidationError(child(loc, "edges"), "expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string el = child(child(loc, "edges"), i);
    require_keys(edges[i], el, {"name", "curve", "incident"});
    const SceneImmersion& curve = immersion_ref(field(edges[i], "curve", el), child(el, "curve"));
    const json& inc = field(edges[i], "incident", el);
    if (!inc.is_array() || inc.empty()) throw ValidationError(child(el, "incident"), "expected a non-empty array");
    for (std::size_t k = 0; k < inc.size(); ++k) {
      const std::string il = child(child(el, "incident"), k);
      require_keys(inc[k], il, {"face", "map"});
      const std::string fname = string_of(field(inc[k], "face", il), child(il, "face"));
      if (by_name.count(fname) == 0) {
        throw ValidationError(child(il, "face"), "undefined face '" + fname + "'; defined: " + join(keys_of(by_name)));
      }
      check_map(field(inc[k], "map", il), curve, *by_name[fname], child(il, "map"));
    }
  }
}

void Loader::validate_checks(const json& j, const std::string& loc) {
  require_object(j, loc);
  const auto& names = check_names();
  for (const auto& [key, value] : j.items()) {
    if (std::find(names.begin(), names.end(), key) == names.end()) {
      throw ValidationError(child(loc, key), "unknown check; known: " + join(names));
    }
    const std::string l = child(loc, key);
    require_object(value, l);
    // Names are resolved now so a typo fails at load time, not mid-run.
    if (value.contains("immersion")) scene_.immersion(string_of(value.at("immersion"), child(l, "immersion")), child(l, "immersion"));
    if (value.contains("calibration")) {
      scene_.calibration(string_of(value.at("calibration"), child(l, "calibration")), child(l, "calibration"));
    }
    if (value.contains("plane")) scene_.plane(string_of(value.at("plane"), child(l, "plane")), child(l, "plane"));
    if (value.contains("planes")) {
      const auto names = strings_of(value.at("planes"), child(l, "planes"));
      for (std::size_t i = 0; i < names.size(); ++i) scene_.plane(names[i], child(child(l, "planes"), i));
    }
    if (value.contains("complex")) {
      const std::string c = string_of(value.at("complex"), child(l, "complex"));
      if (!doc_.contains("complexes") || !doc_.at("complexes").contains(c)) {
        std::vector<std::string> names;
        if (doc_.contains("complexes")) {
          for (const auto& [k, v] : doc_.at("complexes").items()) names.push_back(k);
        }
        throw ValidationError(child(l, "complex"), "undefined complex '" + c + "'; defined: " + join(names));
      }
    }
  }
}

QuadratureSpec quadrature_of(const json& j, QuadratureSpec q, const std::string& loc) {
  require_keys(j, loc, {"gauss_order", "max_subdivision_depth", "target_rel_tol", "target_abs_tol", "max_evaluations"});
  if (j.contains("gauss_order")) q.gauss_order = int_of(j.at("gauss_order"), child(loc, "gauss_order"));
  if (j.contains("max_subdivision_depth")) {
    q.max_subdivision_depth = int_of(j.at("max_subdivision_depth"), child(loc, "max_subdivision_depth"));
  }
  if (j.contains("target_rel_tol")) q.target_rel_tol = number_of(j.at("target_rel_tol"), child(loc, "target_rel_tol"));
  if (j.contains("target_abs_tol")) q.target_abs_tol = number_of(j.at("target_abs_tol"), child(loc, "target_abs_tol"));
  if (j.contains("max_evaluations")) {
    if (!j.at("max_evaluations").is_number_integer()) throw ValidationError(child(loc, "max_evaluations"), "expected an integer");
    q.max_evaluations = j.at("max_evaluations").get<long>();
  }
  guarded(loc, [&] {
    q.validate();
    return 0;
  });
  return q;
}

void Loader::load() {
  require_keys(doc_, "", {"name", "ambient_dim", "complex_structure", "immersions", "planes", "calibrations", "complexes",
                          "checks", "quadrature"});
  scene_.name = string_of(field(doc_, "name", ""), "/name");
  scene_.ambient_dim = int_of(field(doc_, "ambient_dim", ""), "/ambient_dim");
  if (scene_.ambient_dim < 1) throw ValidationError("/ambient_dim", "must be positive");
  if (doc_.contains("complex_structure")) load_structure(doc_.at("complex_structure"), "/complex_structure");
  if (doc_.contains("quadrature")) scene_.quadrature = quadrature_of(doc_.at("quadrature"), {}, "/quadrature");

  static const json empty = json::object();
  const json& planes = doc_.contains("planes") ? doc_.at("planes") : empty;
  require_object(planes, "/planes");
  for (const auto& [name, def] : planes.items()) load_plane(name, def, "/planes/" + name);

  const json& cals = doc_.contains("calibrations") ? doc_.at("calibrations") : empty;
  require_object(cals, "/calibrations");
  for (const auto& [name, def] : cals.items()) {
    scene_.calibrations.emplace(name, load_calibration(def, "/calibrations/" + name, 0));
  }

  require_object(field(doc_, "immersions", ""), "/immersions");
  for (const auto& [name, def] : doc_.at("immersions").items()) {
    if (scene_.immersions.count(name) != 0) continue;  // pulled in as a dependency
    loading_.insert(name);
    scene_.immersions.emplace(name, load_immersion(def, "/immersions/" + name));
  }

  const json& complexes = doc_.contains("complexes") ? doc_.at("complexes") : empty;
  require_object(complexes, "/complexes");
  for (const auto& [name, def] : complexes.items()) validate_complex(def, "/complexes/" + name);
  scene_.complexes = complexes;

  const json& checks = doc_.contains("checks") ? doc_.at("checks") : empty;
  validate_checks(checks, "/checks");
  scene_.checks = checks;
}

// ---------------------------------------------------------------------------
// Complex construction

SigmaComplex build_complex(const Scene& scene, const json& j, const std::string& loc) {
  BuildOptions opts;
  if (j.contains("rotation_fan")) {
    const json& f = j.at("rotation_fan");
    const std::string l = child(loc, "rotation_fan");
    const SceneImmersion& face = scene.immersion(f.at("face").get<std::string>(), child(l, "face"));
    Face base{f.at("face").get<std::string>(), face.immersion, f.value("orientation", 1),
              scene.calibration(f.at("calibration").get<std::string>(), child(l, "calibration"))};
    const Codim2Plane& p = scene.plane(f.at("plane").get<std::string>(), child(l, "plane"));
    const int k = scene.options.fan_k.value_or(f.value("k", 3));
    if (k < 2) throw ValidationError(child(l, "k"), "k must be >= 2");
    std::vector<std::pair<Immersion, MapPtr>> edges;
    for (std::size_t i = 0; i < f.at("edges").size(); ++i) {
      const json& e = f.at("edges")[i];
      const SceneImmersion& curve = scene.immersion(e.at("curve").get<std::string>(), child(l, "edges"));
      edges.emplace_back(curve.immersion, param_map_of(e.at("map"), curve.immersion.param_names(),
                                                       face.immersion.param_dim(), child(l, "edges")));
    }
    std::vector<int> flip;
    if (f.contains("flip")) flip = f.at("flip").get<std::vector<int>>();
    return rotation_fan(base, p, k, edges, flip, opts);
  }
  std::vector<Face> faces;
  std::map<std::string, int> index;
  for (const json& fj : j.at("faces")) {
    const std::string name = fj.at("name").get<std::string>();
    index[name] = static_cast<int>(faces.size());
    faces.push_back(Face{name, scene.immersion(fj.at("immersion").get<std::string>(), loc).immersion,
                         fj.value("orientation", 1), scene.calibration(fj.at("calibration").get<std::string>(), loc)});
  }
  std::vector<SingularEdge> edges;
  for (const json& ej : j.at("edges")) {
    const SceneImmersion& curve = scene.immersion(ej.at("curve").get<std::string>(), loc);
    SingularEdge e{ej.value("name", ej.at("curve").get<std::string>()), curve.immersion, {}};
    for (const json& inc : ej.at("incident")) {
      const int fi = index.at(inc.at("face").get<std::string>());
      e.incident.push_back(EdgeIncidence{
          fi, param_map_of(inc.at("map"), curve.immersion.param_names(), faces[static_cast<std::size_t>(fi)].immersion.param_dim(),
                           loc)});
    }
    edges.push_back(std::move(e));
  }
  return SigmaComplex(std::move(faces), std::move(edges), opts);
}

// ---------------------------------------------------------------------------
// Checks

/// Directive parameters with the overrides folded in and unknown keys
/// rejected.
class Params {
 public:
  Params(const json& directive, std::string loc, const Overrides& o, std::vector<std::string> allowed)
      : j_(directive), loc_(std::move(loc)), o_(o) {
    allowed.insert(allowed.end(), {"seed"});
    require_keys(j_, loc_, allowed);
  }

  const std::string& loc() const { return loc_; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return field(j_, key, loc_); }

  std::string name(const std::string& key) const { return string_of(field(j_, key, loc_), child(loc_, key)); }
  std::vector<std::string> names(const std::string& key) const {
    const json& v = field(j_, key, loc_);
    if (v.is_string()) return {v.get<std::string>()};
    return strings_of(v, child(loc_, key));
  }

  int integer(const std::string& key, int def) const {
    if (key == "samples" && o_.samples) return *o_.samples;
    if (key == "trials" && o_.trials) return *o_.trials;
    const int v = j_.contains(key) ? int_of(j_.at(key), child(loc_, key)) : def;
    return v;
  }
  int positive(const std::string& key, int def) const {
    const int v = integer(key, def);
    if (v < 1) throw ValidationError(child(loc_, key), "must be positive");
    return v;
  }
  double number(const std::string& key, double def) const {
    if (key == "tol" && o_.tol) return *o_.tol;
    return j_.contains(key) ? number_of(j_.at(key), child(loc_, key)) : def;
  }
  bool flag(const std::string& key, bool def) const {
    if (!j_.contains(key)) return def;
    if (!j_.at(key).is_boolean()) throw ValidationError(child(loc_, key), "expected true or false");
    return j_.at(key).get<bool>();
  }
  std::uint64_t seed() const {
    if (o_.seed) return *o_.seed;
    if (!j_.contains("seed")) return 1;
    if (!j_.at("seed").is_number_unsigned()) throw ValidationError(child(loc_, "seed"), "expected a non-negative integer");
    return j_.at("seed").get<std::uint64_t>();
  }
  QuadratureSpec quadrature(const QuadratureSpec& base) const {
    return j_.contains("quadrature") ? quadrature_of(j_.at("quadrature"), base, child(loc_, "quadrature")) : base;
  }

 private:
  const json& j_;
  std::string loc_;
  const Overrides& o_;
};

Report run_austere(const Scene& scene, const Params& p) {
  const int samples = p.positive("samples", 100);
  const SceneImmersion& im = scene.immersion(p.name("immersion"), child(p.loc(), "immersion"));
  Report r = is_austere(im.immersion, samples, p.positive("normal_trials", 8), p.number("tol", 1e-8), p.seed());
  r.samples = samples;
  return r;
}

Report run_lagrangian(const Scene& scene, const Params& p) {
  const int samples = p.positive("samples", 200);
  const double tol = p.number("tol", 1e-8);
  const SceneImmersion& im = scene.immersion(p.name("immersion"), child(p.loc(), "immersion"));
  Report r;
  const double d = lagrangian_defect(im.immersion, scene.structure(p.loc()), samples, p.seed());
  r.set("lagrangian_defect", d, tol);
  r.require(d < tol);
  r.samples = samples;
  return r;
}

Report run_sl(const Scene& scene, const Params& p) {
  const int samples = p.positive("samples", 200);
  const std::uint64_t seed = p.seed();
  const SceneImmersion& im = scene.immersion(p.name("immersion"), child(p.loc(), "immersion"));
  const ComplexStructure& cs = scene.structure(p.loc());
  const double phase = p.number("phase", M_PI / 2);
  const int orientation = p.integer("orientation", 1);
  if (orientation != 1 && orientation != -1) throw ValidationError(child(p.loc(), "orientation"), "must be 1 or -1");
  Report r = sl_phase_defect(im.immersion, cs, phase, samples, seed, p.number("tol", 1e-7), orientation);
  const double lag_tol = p.number("lagrangian_tol", 1e-8);
  const double lag = lagrangian_defect(im.immersion, cs, samples, seed);
  r.set("lagrangian_defect", lag, lag_tol);
  r.require(lag < lag_tol);
  if (im.rho && im.bundle) {
    const double harmonic_tol = p.number("harmonic_tol", 1e-7);
    const double h = harmonic_defect(im.bundle->base, *im.rho, samples, seed);
    r.set("base_harmonic_defect", h, harmonic_tol);
    r.set("base_max_mean_curvature", max_mean_curvature(im.bundle->base, samples, seed), 1e-6);
    r.require(h < harmonic_tol && r.metric("base_max_mean_curvature") < 1e-6);
  }
  r.samples = samples;
  return r;
}

Report run_holomorphic(const Scene& scene, const Params& p) {
  const int samples = p.positive("samples", 200);
  const double tol = p.number("tol", 1e-9);
  const SceneImmersion& im = scene.immersion(p.name("immersion"), child(p.loc(), "immersion"));
  Report r;
  const double d = holomorphic_defect(im.immersion, scene.structure(p.loc()), samples, p.seed());
  r.set("holomorphic_defect", d, tol);
  r.require(d < tol);
  r.samples = samples;
  return r;
}

Report run_vanishing_sum(const Scene& scene, const Params& p) {
  const CalibrationForm& w = scene.calibration(p.name("calibration"), child(p.loc(), "calibration"));
  const Codim2Plane& plane = scene.plane(p.name("plane"), child(p.loc(), "plane"));
  std::vector<int> ks;
  if (p.has("ks")) {
    const json& v = p.raw("ks");
    if (!v.is_array() || v.empty()) throw ValidationError(child(p.loc(), "ks"), "expected a non-empty array");
    for (std::size_t i = 0; i < v.size(); ++i) ks.push_back(int_of(v[i], child(child(p.loc(), "ks"), i)));
  } else {
    ks.push_back(p.integer("k", scene.options.fan_k.value_or(3)));
  }
  const int trials = p.positive("trials", 2000);
  Report r;
  for (int k : ks) {
    if (k < 2) throw ValidationError(child(p.loc(), "ks"), "k must be >= 2");
    RotatedFamily fam = rotated_calibration_family(w, plane, k, trials, p.seed());
    merge_report(r, fam.report, ks.size() == 1 ? "" : "k" + std::to_string(k) + "/");
  }
  r.samples = trials;
  return r;
}

Report run_symmetry(const Scene& scene, const Params& p) {
  const int samples = p.positive("samples", 200);
  const SceneImmersion& im = scene.immersion(p.name("immersion"), child(p.loc(), "immersion"));
  const auto planes = p.names(p.has("planes") ? "planes" : "plane");
  const double phase = p.number("phase", M_PI / 2);
  Report r;
  for (const auto& name : planes) {
    const Codim2Plane& plane = scene.plane(name, child(p.loc(), "plane"));
    Report part = reflect_and_unite_check(im.immersion, plane, scene.structure(p.loc()), phase, samples, p.seed(),
                                          p.number("tol", 1e-7));
    merge_report(r, part, planes.size() == 1 ? "" : name + "/");
  }
  r.samples = samples;
  return r;
}

PerturbOptions perturb_options(const Params& p, int default_trials) {
  PerturbOptions o;
  o.trials = p.positive("trials", default_trials);
  o.bump_count = p.positive("bump_count", o.bump_count);
  o.amplitude = p.number("amplitude", o.amplitude);
  o.edge_amplitude = p.number("edge_amplitude", o.edge_amplitude);
  o.exploratory = p.flag("exploratory", false);
  return o;
}

Report run_amd(const Scene& scene, const Params& p) {
  const int samples = p.positive("samples", 64);
  const std::uint64_t seed = p.seed();
  auto s = scene.complex(p.name("complex"), child(p.loc(), "complex"));
  const QuadratureSpec q = p.quadrature(scene.quadrature);
  Report r;
  merge_report(r, s->build_report(), "build/");
  Report hyp = check_amd_hypotheses(*s, samples, seed);
  merge_report(r, hyp, "hypotheses/");
  if (!hyp.passed()) {
    r.notes.push_back("hypotheses failed; certificate and perturbation skipped");
  } else {
    merge_report(r, stokes_certificate(*s, q, p.number("tol", 1e-4)), "stokes/");
    merge_report(r, perturb_volume_test(*s, q, seed, perturb_options(p, 10)), "perturb/");
  }
  r.samples = samples;
  return r;
}

Report run_volume(const Scene& scene, const Params& p) {
  const QuadratureSpec q = p.quadrature(scene.quadrature);
  const double tol = p.number("tol", 1e-4);
  Report r;
  auto compare = [&](const std::string& prefix, const QuadratureResult& v, const std::string& key) {
    r.set(prefix + "volume", v.value);
    r.set(prefix + "quadrature_error", v.error_estimate);
    r.samples += v.evaluations;
    if (v.warning) r.warn(prefix + "volume: quadrature tolerance not met");
    if (p.has(key)) {
      const double expected = p.number(key, 0.0);
      const double rel = std::abs(v.value - expected) / std::max(std::abs(expected), 1e-300);
      r.set(prefix + "expected", expected);
      r.set(prefix + "relative_error", rel, tol);
      r.require(rel < tol);
    }
  };
  if (p.has("complex")) {
    auto s = scene.complex(p.name("complex"), child(p.loc(), "complex"));
    double total = 0.0;
    for (const Face& f : s->faces()) {
      const QuadratureResult v = volume(f.immersion, q);
      total += v.value;
      compare(f.name + "_", v, "expected_per_face");
    }
    r.set("total_volume", total);
  } else {
    const SceneImmersion& im = scene.immersion(p.name("immersion"), child(p.loc(), "immersion"));
    compare("", volume(im.immersion, q), "expected");
  }
  return r;
}

Report run_stokes(const Scene& scene, const Params& p) {
  auto s = scene.complex(p.name("complex"), child(p.loc(), "complex"));
  return stokes_certificate(*s, p.quadrature(scene.quadrature), p.number("tol", 1e-4));
}

Report run_perturb(const Scene& scene, const Params& p) {
  auto s = scene.complex(p.name("complex"), child(p.loc(), "complex"));
  const PerturbOptions o = perturb_options(p, 50);
  Report r = perturb_volume_test(*s, p.quadrature(scene.quadrature), p.seed(), o);
  r.samples = o.trials;
  return r;
}

Report run_bjorling(const Scene& scene, const Params& p) {
  const int samples = p.positive("samples", 101);
  const SceneImmersion& im = scene.immersion(p.name("immersion"), child(p.loc(), "immersion"));
  if (!im.bjorling) throw ValidationError(child(p.loc(), "immersion"), "immersion is not of kind bjorling or bjorling_bundle");
  std::vector<Interval> fiber;
  if (im.bundle) fiber = std::vector<Interval>(im.bundle->total.region().box().end() - 1, im.bundle->total.region().box().end());
  Report r = bjorling_bundle(*im.bjorling, fiber, samples, p.seed()).report;
  r.samples = samples;
  return r;
}

struct CheckEntry {
  std::string name;
  std::vector<std::string> params;
  Report (*fn)(const Scene&, const Params&);
};

const std::vector<CheckEntry>& check_table() {
  static const std::vector<CheckEntry> table{
      {"check-austere", {"immersion", "samples", "normal_trials", "tol"}, run_austere},
      {"check-lagrangian", {"immersion", "samples", "tol"}, run_lagrangian},
      {"check-sl", {"immersion", "phase", "orientation", "samples", "tol", "lagrangian_tol", "harmonic_tol"}, run_sl},
      {"check-holomorphic", {"immersion", "samples", "tol"}, run_holomorphic},
      {"check-vanishing-sum", {"calibration", "plane", "k", "ks", "trials"}, run_vanishing_sum},
      {"check-symmetry", {"immersion", "plane", "planes", "phase", "samples", "tol"}, run_symmetry},
      {"check-amd",
       {"complex", "samples", "trials", "tol", "quadrature", "bump_count", "amplitude", "edge_amplitude", "exploratory"},
       run_amd},
      {"volume", {"immersion", "complex", "expected", "expected_per_face", "tol", "quadrature"}, run_volume},
      {"stokes", {"complex", "tol", "quadrature"}, run_stokes},
      {"perturb", {"complex", "trials", "quadrature", "bump_count", "amplitude", "edge_amplitude", "exploratory"},
       run_perturb},
      {"bjorling", {"immersion", "samples"}, run_bjorling},
  };
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------

const SceneImmersion& Scene::immersion(const std::string& n, const std::string& location) const {
  auto it = immersions.find(n);
  if (it == immersions.end()) {
    throw ValidationError(location, "undefined immersion '" + n + "'; defined: " + join(keys_of(immersions)));
  }
  return it->second;
}

const Codim2Plane& Scene::plane(const std::string& n, const std::string& location) const {
  auto it = planes.find(n);
  if (it == planes.end()) throw ValidationError(location, "undefined plane '" + n + "'; defined: " + join(keys_of(planes)));
  return it->second;
}

const CalibrationForm& Scene::calibration(const std::string& n, const std::string& location) const {
  auto it = calibrations.find(n);
  if (it == calibrations.end()) {
    throw ValidationError(location, "undefined calibration '" + n + "'; defined: " + join(keys_of(calibrations)));
  }
  return it->second;
}

const ComplexStructure& Scene::structure(const std::string& location) const {
  if (!complex_structure) throw ValidationError(location, "the scene declares no complex_structure");
  return *complex_structure;
}

std::shared_ptr<const SigmaComplex> Scene::complex(const std::string& n, const std::string& location) const {
  if (!complexes.contains(n)) {
    std::vector<std::string> names;
    for (const auto& [k, v] : complexes.items()) names.push_back(k);
    throw ValidationError(location, "undefined complex '" + n + "'; defined: " + join(names));
  }
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = built_.find(n);
  if (it != built_.end()) return it->second;
  auto s = std::make_shared<const SigmaComplex>(build_complex(*this, complexes.at(n), "/complexes/" + n));
  built_.emplace(n, s);
  return s;
}

std::unique_ptr<Scene> parse_scene(const std::string& text, const LoadOptions& options) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("/", std::string("malformed JSON: ") + e.what());
  }
  auto scene = std::make_unique<Scene>();
  scene->options = options;
  if (options.fan_k && *options.fan_k < 2) throw InvalidInput("k must be >= 2");
  Loader(*scene, doc).load();
  return scene;
}

std::unique_ptr<Scene> load_scene(const std::string& source, const LoadOptions& options) {
  const std::string prefix = "builtin:";
  if (source.rfind(prefix, 0) == 0) {
    const std::string name = source.substr(prefix.size());
    const BuiltinScene* b = find_builtin(name);
    if (!b) {
      std::vector<std::string> names;
      for (const auto& s : builtin_scenes()) names.push_back(s.name);
      throw InvalidInput("unknown builtin scene '" + name + "'; available: " + join(names));
    }
    return parse_scene(b->json, options);
  }
  std::ifstream in(source);
  if (!in) throw InvalidInput("cannot read scene file '" + source + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_scene(os.str(), options);
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : check_table()) out.push_back(e.name);
    return out;
  }();
  return names;
}

Report run(const Scene& scene, const std::string& check, const Overrides& overrides) {
  const auto& table = check_table();
  auto it = std::find_if(table.begin(), table.end(), [&](const CheckEntry& e) { return e.name == check; });
  if (it == table.end()) throw InvalidInput("unknown check '" + check + "'; known: " + join(check_names()));
  static const json empty = json::object();
  const json& directive = scene.checks.contains(check) ? scene.checks.at(check) : empty;
  const Params params(directive, "/checks/" + check, overrides, it->params);

  const auto start = std::chrono::steady_clock::now();
  Report r = it->fn(scene, params);
  r.scene = scene.name;
  r.check = check;
  r.seed = params.seed();
  if (overrides.timing) {
    r.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  } else {
    r.duration_ms.reset();
  }
  return r;
}

}  // namespace amdkit
