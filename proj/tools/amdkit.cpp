#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "amdkit/scene.hpp"

namespace {

using json = nlohmann::ordered_json;

enum Exit { kPass = 0, kFail = 1, kInput = 2, kStrictWarn = 3 };

struct ErrorInfo {
  int code;
  std::string type;
};

ErrorInfo classify(const std::exception& e) {
  using namespace amdkit;
  if (dynamic_cast<const ValidationError*>(&e)) return {kInput, "validation_error"};
  if (dynamic_cast<const InvalidInput*>(&e)) return {kInput, "invalid_input"};
  if (dynamic_cast<const expr::SyntaxError*>(&e)) return {kInput, "syntax_error"};
  if (dynamic_cast<const expr::UnknownIdentifier*>(&e)) return {kInput, "unknown_identifier"};
  if (dynamic_cast<const DegreeError*>(&e)) return {kInput, "degree_error"};
  if (dynamic_cast<const PreconditionError*>(&e)) return {kFail, "precondition_error"};
  if (dynamic_cast<const DegeneracyError*>(&e)) return {kFail, "degeneracy_error"};
  if (dynamic_cast<const InconclusiveError*>(&e)) return {kFail, "inconclusive"};
  if (dynamic_cast<const NumericalError*>(&e)) return {kFail, "numerical_error"};
  if (dynamic_cast<const PlacementError*>(&e)) return {kFail, "placement_error"};
  if (dynamic_cast<const expr::EvalError*>(&e)) return {kFail, "evaluation_error"};
  return {kFail, "internal_error"};
}

json error_payload(const std::exception& e, const ErrorInfo& info, const std::string& scene, const std::string& check) {
  json err;
  err["type"] = info.type;
  err["message"] = e.what();
  if (auto* v = dynamic_cast<const amdkit::ValidationError*>(&e)) err["location"] = v->location();
  if (auto* p = dynamic_cast<const amdkit::PreconditionError*>(&e)) err["measured"] = p->measured();
  json out;
  out["scene"] = scene;
  out["check"] = check;
  out["status"] = "error";
  out["error"] = err;
  return out;
}

int status_code(const amdkit::Report& r, bool strict) {
  switch (r.status) {
    case amdkit::Status::Pass: return kPass;
    case amdkit::Status::Fail: return kFail;
    case amdkit::Status::Warn: return strict ? kStrictWarn : kPass;
  }
  return kFail;
}

// Worst outcome wins when several checks run: input error, fail, warning.
int severity(int code) {
  switch (code) {
    case kPass: return 0;
    case kStrictWarn: return 1;
    case kFail: return 2;
    default: return 3;
  }
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw amdkit::InvalidInput("cannot write '" + out_path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical certificates for calibrated complexes and special Lagrangian bundles"};
  std::string scene_src;
  std::string check;
  std::string report_format = "json";
  std::string out_path;
  std::optional<int> samples;
  std::optional<int> trials;
  std::optional<int> fan_k;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  bool list = false;
  bool timing = false;

  app.add_option("--scene", scene_src, "Scene file or builtin:NAME");
  app.add_option("--check", check, "Check to run, or 'all' for every directive in the scene");
  app.add_option("--samples", samples, "Override the sample count")->check(CLI::PositiveNumber);
  app.add_option("--trials", trials, "Override the trial count")->check(CLI::PositiveNumber);
  app.add_option("--tol", tol, "Override the primary tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Override the seed");
  app.add_option("--k", fan_k, "Number of faces in rotation fans")->check(CLI::Range(2, 64));
  app.add_option("--report", report_format, "Report format")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--out", out_path, "Write the report here instead of stdout");
  app.add_flag("--strict", strict, "Treat numerical warnings as failures (exit 3)");
  app.add_flag("--list", list, "List builtin scenes and checks");
  app.add_flag("--timing", timing, "Record wall time in duration_ms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kInput;
  }

  if (list) {
    std::cout << "scenes:\n";
    for (const auto& s : amdkit::builtin_scenes()) std::cout << "  builtin:" << s.name << "  " << s.summary << "\n";
    std::cout << "checks:\n";
    for (const auto& c : amdkit::check_names()) std::cout << "  " << c << "\n";
    return kPass;
  }
  if (scene_src.empty() || check.empty()) {
    std::cerr << "--scene and --check are required (see --help)\n";
    return kInput;
  }

  std::string scene_name = scene_src;
  try {
    auto scene = amdkit::load_scene(scene_src, amdkit::LoadOptions{fan_k});
    scene_name = scene->name;
    const amdkit::Overrides overrides{samples, trials, tol, seed, timing};

    std::vector<std::string> checks;
    if (check == "all") {
      for (const auto& [name, params] : scene->checks.items()) checks.push_back(name);
    } else {
      checks.push_back(check);
    }

    int code = kPass;
    json all = json::array();
    std::string text;
    for (const auto& c : checks) {
      int rc;
      try {
        const amdkit::Report r = amdkit::run(*scene, c, overrides);
        rc = status_code(r, strict);
        all.push_back(r.to_json());
        text += r.to_text();
      } catch (const amdkit::Error& e) {
        const ErrorInfo info = classify(e);
        rc = info.code;
        const json payload = error_payload(e, info, scene_name, c);
        all.push_back(payload);
        text += scene_name + " / " + c + ": error (" + info.type + ") " + e.what() + "\n";
      }
      if (severity(rc) > severity(code)) code = rc;
    }
    if (report_format == "text") {
      emit(text, out_path);
    } else {
      emit((checks.size() == 1 ? all[0] : all).dump(2) + "\n", out_path);
    }
    return code;
  } catch (const amdkit::Error& e) {
    const ErrorInfo info = classify(e);
    const json payload = error_payload(e, info, scene_name, check);
    if (report_format == "text") {
      std::cerr << "error (" << info.type << "): " << e.what() << "\n";
    } else {
      try {
        emit(payload.dump(2) + "\n", out_path);
      } catch (const amdkit::Error&) {
        std::cout << payload.dump(2) << "\n";
      }
    }
    return info.code;
  }
}
