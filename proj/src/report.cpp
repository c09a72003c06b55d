#include "bundlekit/report.hpp"

#include <cstdio>

namespace bundlekit::report {

namespace {

std::string quoted(const std::string& v) {
  bool plain = !v.empty();
  for (char c : v) {
    if (c == ' ' || c == '"' || c == '\\' || c == '\t' || c == '\n' || c == '=') plain = false;
  }
  if (plain) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string line(const std::string& type, const std::vector<Field>& fields) {
  std::string out = "record=" + type;
  for (const auto& [k, v] : fields) out += " " + k + "=" + quoted(v);
  return out;
}

}  // namespace

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt(const Eigen::MatrixXcd& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += ";";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ",";
      out += fmt(m(i, j).real()) + "|" + fmt(m(i, j).imag());
    }
  }
  return out + "]";
}

std::string fmt(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ";" : "") + fmt(v[i]);
  return out;
}

Report::Report(std::string command, std::string scenario, std::vector<Field> meta) {
  std::vector<Field> f{{"command", std::move(command)}, {"scenario", std::move(scenario)}};
  f.insert(f.end(), meta.begin(), meta.end());
  lines_.push_back(line("header", f));
}

void Report::record(const std::string& type, const std::vector<Field>& fields) { lines_.push_back(line(type, fields)); }

void Report::check(const std::string& name, double value, double tol, const std::vector<Field>& extra) {
  const bool pass = value <= tol;
  ++checks_;
  if (!pass) ++failures_;
  std::vector<Field> f{{"name", name}, {"value", fmt(value)}, {"tol", fmt(tol)}, {"pass", pass ? "true" : "false"}};
  f.insert(f.end(), extra.begin(), extra.end());
  lines_.push_back(line("check", f));
}

void Report::checks(const DefectReport& r, const std::string& prefix) {
  for (const auto& c : r.checks) check(prefix + c.name, c.value, c.tol);
}

void Report::finish(const std::string& status) {
  lines_.push_back(line("summary", {{"checks", std::to_string(checks_)},
                                    {"failed", std::to_string(failures_)},
                                    {"status", !status.empty() ? status : failures_ ? "fail" : "ok"}}));
}

std::string Report::text() const {
  std::string out;
  for (const auto& l : lines_) out += l + "\n";
  return out;
}

}  // namespace bundlekit::report
