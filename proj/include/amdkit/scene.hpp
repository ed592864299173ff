#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "amdkit/bundles.hpp"
#include "amdkit/complexgeo.hpp"
#include "amdkit/geometry.hpp"
#include "amdkit/report.hpp"
#include "amdkit/sigma.hpp"

namespace amdkit {

/// A named immersion with whatever its constructor left behind that later
/// checks need (bundle structure, twist function, Bjorling data).
struct SceneImmersion {
  std::string kind;
  Immersion immersion;
  std::optional<BundleImmersion> bundle;
  std::optional<expr::Expression> rho;
  std::optional<BjorlingData> bjorling;
};

struct LoadOptions {
  std::optional<int> fan_k;  // replaces k in every rotation_fan complex
};

/// Parsed and validated scene document. Complexes are validated at load
/// and built on first use.
class Scene {
 public:
  std::string name;
  int ambient_dim = 0;
  std::optional<ComplexStructure> complex_structure;
  std::map<std::string, SceneImmersion> immersions;
  std::map<std::string, Codim2Plane> planes;
  std::map<std::string, CalibrationForm> calibrations;
  nlohmann::ordered_json complexes;  // validated definitions
  nlohmann::ordered_json checks;     // check name -> parameters
  QuadratureSpec quadrature;
  LoadOptions options;

  const SceneImmersion& immersion(const std::string& name, const std::string& location) const;
  const Codim2Plane& plane(const std::string& name, const std::string& location) const;
  const CalibrationForm& calibration(const std::string& name, const std::string& location) const;
  const ComplexStructure& structure(const std::string& location) const;
  std::shared_ptr<const SigmaComplex> complex(const std::string& name, const std::string& location) const;

 private:
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const SigmaComplex>> built_;
};

/// `source` is a file path or `builtin:NAME`. Throws ValidationError with a
/// JSON-pointer location on any schema, name or expression problem.
std::unique_ptr<Scene> load_scene(const std::string& source, const LoadOptions& options = {});
std::unique_ptr<Scene> parse_scene(const std::string& text, const LoadOptions& options = {});

/// Command-line overrides applied on top of the check directive.
struct Overrides {
  std::optional<int> samples;
  std::optional<int> trials;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  bool timing = false;
};

const std::vector<std::string>& check_names();

/// Runs one check. Parameters come from the scene's directive for that
/// check (an empty object when the scene has none), then the overrides.
Report run(const Scene& scene, const std::string& check, const Overrides& overrides = {});

struct BuiltinScene {
  std::string name;
  std::string summary;
  std::string json;
};

const std::vector<BuiltinScene>& builtin_scenes();
const BuiltinScene* find_builtin(const std::string& name);

}  // namespace amdkit
