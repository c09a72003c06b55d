#pragma once

// Line-delimited reports: one record per line, space-separated key=value
// fields, numbers printed with %.12g. Values that contain spaces or quotes
// are double-quoted with backslash escapes.

#include "bundlekit/defects.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace bundlekit::report {

std::string fmt(double v);
/// [re|im,re|im;...] in the scenario matrix-literal syntax.
std::string fmt(const Eigen::MatrixXcd& m);
std::string fmt(const Eigen::VectorXd& v);

using Field = std::pair<std::string, std::string>;

class Report {
 public:
  Report(std::string command, std::string scenario, std::vector<Field> meta = {});

  void record(const std::string& type, const std::vector<Field>& fields);
  /// Records a defect against its tolerance; pass means value <= tol.
  void check(const std::string& name, double value, double tol, const std::vector<Field>& extra = {});
  void checks(const DefectReport& r, const std::string& prefix = "");

  int failures() const noexcept { return failures_; }
  int check_count() const noexcept { return checks_; }
  /// Closing summary record. `status` overrides ok/fail (e.g. a witness).
  void finish(const std::string& status = "");
  std::string text() const;

 private:
  std::vector<std::string> lines_;
  int checks_ = 0;
  int failures_ = 0;
};

}  // namespace bundlekit::report
