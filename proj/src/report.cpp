#include "amdkit/report.hpp"

#include <cstdio>
#include <sstream>

namespace amdkit {

const char* status_name(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Warn: return "warn";
  }
  return "?";
}

nlohmann::ordered_json Report::to_json() const {
  nlohmann::ordered_json j;
  j["scene"] = scene;
  j["check"] = check;
  j["status"] = status_name(status);
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [name, metric] : metrics) {
    nlohmann::ordered_json entry;
    entry["value"] = metric.value;
    if (metric.tolerance) {
      entry["tolerance"] = *metric.tolerance;
    } else {
      entry["tolerance"] = nullptr;
    }
    m[name] = entry;
  }
  j["metrics"] = m;
  j["seed"] = seed;
  j["samples"] = samples;
  if (duration_ms) {
    j["duration_ms"] = *duration_ms;
  } else {
    j["duration_ms"] = nullptr;
  }
  j["notes"] = notes;
  return j;
}

std::string Report::to_text() const {
  std::ostringstream os;
  os << scene << " / " << check << ": " << status_name(status) << "\n";
  for (const auto& [name, metric] : metrics) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "  %-36s %.6e", name.c_str(), metric.value);
    os << buf;
    if (metric.tolerance) {
      std::snprintf(buf, sizeof buf, "  (tol %.3e)", *metric.tolerance);
      os << buf;
    }
    os << "\n";
  }
  os << "  seed " << seed << ", samples " << samples;
  if (duration_ms) os << ", " << *duration_ms << " ms";
  os << "\n";
  for (const auto& n : notes) os << "  note: " << n << "\n";
  return os.str();
}

void merge_report(Report& into, const Report& part, const std::string& prefix) {
  for (const auto& [name, metric] : part.metrics) into.metrics[prefix + name] = metric;
  for (const auto& n : part.notes) into.notes.push_back(prefix + n);
  if (part.status == Status::Fail) {
    into.status = Status::Fail;
  } else if (part.status == Status::Warn && into.status == Status::Pass) {
    into.status = Status::Warn;
  }
  into.samples += part.samples;
}

}  // namespace amdkit
