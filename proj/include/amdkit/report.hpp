#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace amdkit {

enum class Status { Pass, Fail, Warn };

const char* status_name(Status s);

struct Metric {
  double value = 0.0;
  std::optional<double> tolerance;  // absent for informational metrics
};

/// Structured outcome of a check. Deterministic given its inputs and seed;
/// `duration_ms` stays empty unless the caller asks for timing.
struct Report {
  std::string scene;
  std::string check;
  Status status = Status::Pass;
  std::map<std::string, Metric> metrics;
  std::uint64_t seed = 0;
  long samples = 0;
  std::optional<double> duration_ms;
  std::vector<std::string> notes;

  bool passed() const { return status == Status::Pass; }

  void set(const std::string& name, double value) { metrics[name] = Metric{value, std::nullopt}; }
  void set(const std::string& name, double value, double tolerance) {
    metrics[name] = Metric{value, tolerance};
  }
  double metric(const std::string& name) const { return metrics.at(name).value; }

  /// Marks the report failed when `ok` is false; returns `ok`.
  bool require(bool ok) {
    if (!ok) status = Status::Fail;
    return ok;
  }
  /// Downgrades a pass to a warning.
  void warn(const std::string& note) {
    if (status == Status::Pass) status = Status::Warn;
    notes.push_back(note);
  }

  nlohmann::ordered_json to_json() const;
  std::string to_text() const;
};

/// Folds `part` into `into`: metrics are prefixed, notes appended and the
/// worse status kept.
void merge_report(Report& into, const Report& part, const std::string& prefix);

}  // namespace amdkit
