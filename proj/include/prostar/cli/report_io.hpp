#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "prostar/report.hpp"

namespace prostar::cli {

using Json = nlohmann::ordered_json;

#ifdef PROSTAR_VERSION
inline constexpr const char* kVersion = PROSTAR_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

inline constexpr const char* kScenarioSchema = "prostar-scenario-v1";
inline constexpr const char* kReportSchema = "prostar-report-v1";

enum class Status { pass, fail, error };

inline const char* status_name(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    default: return "error";
  }
}

struct TaskReport {
  std::string name;
  std::string type;
  Status status = Status::pass;
  std::string error_kind;  // "numerical", "precondition", ...
  std::string message;
  std::vector<std::pair<std::string, long long>> dimensions;
  std::vector<std::pair<std::string, std::vector<long long>>> lists;
  std::vector<std::pair<std::string, double>> metrics;
  VerificationReport verification;
  double seconds = 0.0;

  void settle() {
    if (status == Status::error) return;
    status = verification.passed() ? Status::pass : Status::fail;
  }
};

struct RunConfig {
  std::string scenario;
  double tolerance = kDefaultTolerance;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
};

struct RunReport {
  RunConfig config;
  std::vector<TaskReport> tasks;

  int exit_code() const {
    bool numerical = false, failed = false;
    for (const auto& t : tasks) {
      if (t.status == Status::error && t.error_kind == "numerical") numerical = true;
      else if (t.status != Status::pass) failed = true;
    }
    if (numerical) return 3;
    return failed ? 1 : 0;
  }
};

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Json to_json(const TaskReport& t, bool with_timing = true) {
  Json j;
  j["name"] = t.name;
  j["type"] = t.type;
  j["status"] = status_name(t.status);
  if (t.status == Status::error) {
    j["error"] = {{"kind", t.error_kind}, {"message", t.message}};
  } else if (!t.message.empty()) {
    j["message"] = t.message;
  }
  Json dims = Json::object();
  for (const auto& [k, v] : t.dimensions) dims[k] = v;
  for (const auto& [k, v] : t.lists) dims[k] = v;
  j["dimensions"] = dims;
  Json met = Json::object();
  for (const auto& [k, v] : t.metrics) met[k] = v;
  j["metrics"] = met;
  Json res = Json::array();
  for (const auto& r : t.verification.residuals)
    res.push_back({{"name", r.name}, {"value", r.value}, {"threshold", r.threshold}, {"pass", r.pass}});
  j["residuals"] = res;
  if (t.verification.witness) j["witness"] = *t.verification.witness;
  j["notes"] = t.verification.notes;
  if (with_timing) j["seconds"] = t.seconds;
  return j;
}

inline Json to_json(const RunReport& r, bool with_timing = true) {
  Json j;
  j["schema"] = kReportSchema;
  j["version"] = kVersion;
  j["config"] = {{"scenario", r.config.scenario},
                 {"tolerance", r.config.tolerance},
                 {"seed", r.config.seed},
                 {"jobs", r.config.jobs}};
  Json tasks = Json::array();
  int pass = 0, fail = 0, err = 0;
  for (const auto& t : r.tasks) {
    tasks.push_back(to_json(t, with_timing));
    (t.status == Status::pass ? pass : t.status == Status::fail ? fail : err)++;
  }
  j["tasks"] = tasks;
  j["summary"] = {{"passed", pass}, {"failed", fail}, {"errors", err}, {"exit_code", r.exit_code()}};
  return j;
}

inline std::string to_text(const RunReport& r, bool color) {
  auto paint = [color](Status s) {
    const std::string word = s == Status::pass ? "PASS" : s == Status::fail ? "FAIL" : "ERROR";
    if (!color) return word;
    const char* code = s == Status::pass ? "\033[32m" : s == Status::fail ? "\033[31m" : "\033[33m";
    return std::string(code) + word + "\033[0m";
  };
  std::ostringstream o;
  o << "prostar " << kVersion << "  scenario " << r.config.scenario << "\n";
  o << "tolerance " << fmt17(r.config.tolerance) << "  seed " << r.config.seed << "\n";
  for (const auto& t : r.tasks) {
    o << "\n[" << paint(t.status) << "] " << t.name << " (" << t.type << ")\n";
    if (t.status == Status::error) o << "  " << t.error_kind << " error: " << t.message << "\n";
    else if (!t.message.empty()) o << "  " << t.message << "\n";
    for (const auto& [k, v] : t.dimensions) o << "  " << k << " = " << v << "\n";
    for (const auto& [k, v] : t.lists) {
      o << "  " << k << " = [";
      for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ", " : "") << v[i];
      o << "]\n";
    }
    for (const auto& [k, v] : t.metrics) o << "  " << k << " = " << fmt17(v) << "\n";
    for (const auto& res : t.verification.residuals)
      o << "  " << (res.pass ? "ok  " : "BAD ") << res.name << ": " << fmt17(res.value) << " <= " << fmt17(res.threshold) << "\n";
    if (t.verification.witness) o << "  witness: " << *t.verification.witness << "\n";
    for (const auto& n : t.verification.notes) o << "  note: " << n << "\n";
  }
  int pass = 0;
  for (const auto& t : r.tasks) pass += t.status == Status::pass;
  o << "\n" << pass << "/" << r.tasks.size() << " tasks passed, exit status " << r.exit_code() << "\n";
  return o.str();
}

}  // namespace prostar::cli
