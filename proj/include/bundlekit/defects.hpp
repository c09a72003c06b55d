#pragma once

#include <string>
#include <vector>

namespace bundlekit {

struct Check {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass() const { return value <= tol; }
};

/// Named nonnegative defects, each with the tolerance it is judged against.
struct DefectReport {
  std::vector<Check> checks;

  void add(std::string name, double value, double tol) { checks.push_back({std::move(name), value, tol}); }
  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass()) return false;
    }
    return true;
  }
  /// Value of the named check; throws ReferenceError if absent.
  double value(const std::string& name) const;
  double max_value() const {
    double m = 0.0;
    for (const auto& c : checks) m = c.value > m ? c.value : m;
    return m;
  }
};

}  // namespace bundlekit
