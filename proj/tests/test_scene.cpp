#include <doctest.h>

#include <string>

#include "amdkit/expr.hpp"
#include "amdkit/scene.hpp"

using namespace amdkit;

namespace {

// Captures the ValidationError raised while loading `text`.
std::string load_error(const std::string& text, std::string* location = nullptr) {
  try {
    parse_scene(text);
  } catch (const ValidationError& e) {
    if (location) *location = e.location();
    return e.what();
  }
  FAIL("scene loaded without error");
  return {};
}

const char* const kSmall = R"json({
  "name": "small",
  "ambient_dim": 6,
  "complex_structure": "split",
  "immersions": {
    "M": {"kind": "expression", "params": ["u", "v"], "components": ["u", "cosh(u)*cos(v)", "cosh(u)*sin(v)"],
          "domain": [[-1, 1], [0, "2*pi"]]},
    "nuM": {"kind": "normal_bundle", "base": "M", "fiber": [[-1, 1]]}
  },
  "checks": {"check-sl": {"immersion": "nuM", "samples": 40}}
})json";

}  // namespace

TEST_CASE("every builtin scene loads and lists its checks") {
  CHECK(builtin_scenes().size() >= 8);
  for (const BuiltinScene& b : builtin_scenes()) {
    INFO(b.name);
    const auto s = load_scene("builtin:" + b.name);
    CHECK(s->name == b.name);
    CHECK(!s->checks.empty());
    for (const auto& [check, params] : s->checks.items()) {
      CHECK(std::find(check_names().begin(), check_names().end(), check) != check_names().end());
    }
  }
  CHECK(find_builtin("zw2_fan") != nullptr);
  CHECK(find_builtin("nope") == nullptr);
  CHECK_THROWS_AS(load_scene("builtin:nope"), InvalidInput);
}

TEST_CASE("unparseable expressions report their text, column and location") {
  std::string where;
  const std::string msg = load_error(R"json({
    "name": "bad", "ambient_dim": 3,
    "immersions": {"S": {"kind": "expression", "params": ["a", "b"],
                         "components": ["sin(a)*cos(b", "a", "b"], "domain": [[0, 1], [0, 1]]}}
  })json", &where);
  CHECK(where == "/immersions/S/components/0");
  CHECK(msg.find("sin(a)*cos(b") != std::string::npos);
  CHECK(msg.find("column 13") != std::string::npos);
}

TEST_CASE("unknown identifiers in expressions name the declared variables") {
  const std::string msg = load_error(R"json({
    "name": "bad", "ambient_dim": 3,
    "immersions": {"S": {"kind": "expression", "params": ["a", "b"],
                         "components": ["c", "a", "b"], "domain": [[0, 1], [0, 1]]}}
  })json");
  CHECK(msg.find("'c'") != std::string::npos);
  CHECK(msg.find("a, b") != std::string::npos);
}

TEST_CASE("undefined names list what is defined") {
  std::string where;
  const std::string msg = load_error(R"json({
    "name": "bad", "ambient_dim": 6, "complex_structure": "split",
    "immersions": {"M": {"kind": "expression", "params": ["u", "v"], "components": ["u", "v", "0"],
                         "domain": [[0, 1], [0, 1]]},
                   "nuM": {"kind": "normal_bundle", "base": "M"}},
    "planes": {"P1": {"zero_coords": [3, 6]}, "P2": {"zero_coords": [2, 5]}},
    "checks": {"check-symmetry": {"immersion": "nuM", "plane": "P3"}}
  })json", &where);
  CHECK(where == "/checks/check-symmetry/plane");
  CHECK(msg.find("P3") != std::string::npos);
  CHECK(msg.find("defined: P1, P2") != std::string::npos);

  const std::string base = load_error(R"json({
    "name": "bad", "ambient_dim": 6,
    "immersions": {"nuM": {"kind": "normal_bundle", "base": "M"}}
  })json");
  CHECK(base.find("'M'") != std::string::npos);
}

TEST_CASE("unknown fields, kinds and checks are rejected") {
  std::string where;
  load_error(R"json({"name": "bad", "ambient_dim": 3, "colour": 1})json", &where);
  CHECK(where == "/colour");
  load_error(R"json({"name": "bad", "ambient_dim": 3,
    "immersions": {"S": {"kind": "surface", "params": ["a"]}}})json", &where);
  CHECK(where == "/immersions/S/kind");
  load_error(R"json({"name": "bad", "ambient_dim": 3, "immersions": {}, "checks": {"check-everything": {}}})json", &where);
  CHECK(where == "/checks/check-everything");
  load_error(R"json({"name": "bad", "ambient_dim": 3, "immersions": {}, "checks": {"check-sl": {"immersion": "S"}}})json", &where);
  CHECK(where == "/checks/check-sl/immersion");
  load_error(R"json({"name": "bad", "ambient_dim": 3,
    "immersions": {"S": {"kind": "expression", "params": ["a"], "components": ["a", "0", "0"],
                         "domain": [[1, 0]]}}})json", &where);
  CHECK(where.rfind("/immersions/S/domain", 0) == 0);
  CHECK_THROWS_AS(parse_scene("{ not json"), ValidationError);
  CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), InvalidInput);
}

TEST_CASE("runs are deterministic and carry no timing by default") {
  const auto scene = parse_scene(kSmall);
  const Report a = run(*scene, "check-sl");
  const Report b = run(*scene, "check-sl");
  CHECK(a.passed());
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.to_json()["duration_ms"].is_null());
  CHECK(a.to_json()["scene"] == "small");
  CHECK(a.to_json()["check"] == "check-sl");
  CHECK(a.seed == 1);

  Overrides timed;
  timed.timing = true;
  CHECK(run(*scene, "check-sl", timed).to_json()["duration_ms"].is_number());
}

TEST_CASE("overrides replace directive parameters") {
  const auto scene = parse_scene(kSmall);
  Overrides o;
  o.samples = 7;
  o.seed = 99;
  const Report r = run(*scene, "check-sl", o);
  CHECK(r.samples == 7);
  CHECK(r.seed == 99);
  o.tol = 1e-30;
  CHECK(!run(*scene, "check-sl", o).passed());
  // Checks without a directive run on an empty parameter object and
  // complain about the missing name.
  CHECK_THROWS_AS(run(*scene, "check-austere"), ValidationError);
  CHECK_THROWS_AS(run(*scene, "check-nothing"), InvalidInput);
}

TEST_CASE("text reports list every metric") {
  const auto scene = parse_scene(kSmall);
  const Report r = run(*scene, "check-sl");
  const std::string text = r.to_text();
  for (const auto& [name, m] : r.metrics) CHECK(text.find(name) != std::string::npos);
  CHECK(text.find("pass") != std::string::npos);
}
