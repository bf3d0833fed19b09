#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prostar {

inline constexpr double kDefaultTolerance = 1e-10;

// One checked identity: the measured residual and the threshold it was held to.
struct Residual {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

// Outcome of a verification routine. Failures are recorded, never thrown.
struct VerificationReport {
  std::string subject;
  std::vector<Residual> residuals;
  std::vector<std::string> notes;
  std::optional<std::string> witness;  // first violation, human readable

  bool passed() const {
    return std::all_of(residuals.begin(), residuals.end(),
                       [](const Residual& r) { return r.pass; });
  }

  // Adds a measurement under `name`. Repeated measurements keep the one with
  // the worst value/threshold ratio; the entry passes only if all of them did.
  void record(const std::string& name, double value, double threshold) {
    const bool ok = value <= threshold;
    for (auto& r : residuals) {
      if (r.name == name) {
        if (value * r.threshold > r.value * threshold) {
          r.value = value;
          r.threshold = threshold;
        }
        r.pass = r.pass && ok;
        return;
      }
    }
    residuals.push_back({name, value, threshold, ok});
  }

  // Records a boolean condition as a residual of 0 (pass) or 1 (fail).
  void require(const std::string& name, bool ok) { record(name, ok ? 0.0 : 1.0, 0.5); }

  void fail_with(std::string w) {
    if (!witness) witness = std::move(w);
  }

  const Residual* find(const std::string& name) const {
    for (const auto& r : residuals)
      if (r.name == name) return &r;
    return nullptr;
  }

  double value_of(const std::string& name) const {
    const Residual* r = find(name);
    return r ? r->value : 0.0;
  }

  double max_residual() const {
    double m = 0.0;
    for (const auto& r : residuals) m = std::max(m, r.value);
    return m;
  }

  // Merges another report under a prefix.
  void absorb(const VerificationReport& other, const std::string& prefix = {}) {
    for (const auto& r : other.residuals) {
      std::string name = prefix.empty() ? r.name : prefix + "." + r.name;
      residuals.push_back({std::move(name), r.value, r.threshold, r.pass});
    }
    for (const auto& n : other.notes) notes.push_back(n);
    if (other.witness) fail_with(prefix.empty() ? *other.witness : prefix + ": " + *other.witness);
  }
};

}  // namespace prostar
