#pragma once

// Shared helpers for the unit and acceptance tests.

#include "bundlekit/commands.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

using namespace bundlekit;

inline expr::ExprMatrix imag_scalar(const std::string& e) {
  expr::ExprMatrix m(1, 1);
  m.at(0, 0).im = expr::parse(e, {"x1", "x2"});
  return m;
}

/// A = i alpha dtheta in both annulus charts.
inline bundle::ConnectionPtr annulus_connection(const manifold::AtlasPtr& atlas, double alpha) {
  auto p = bundle::BundleSpec::trivial(atlas, lie::GroupKind::u1());
  const auto z = expr::ExprMatrix::zero(1, 1);
  expr::ExprMatrix a(1, 1);
  a.at(0, 0).im = expr::Expr(alpha);
  return bundle::ConnectionSpec::make(p, {{z, a}, {z, a}});
}

inline std::complex<double> phase(double angle) { return std::polar(1.0, angle); }

/// Random smooth expression in x and y that stays finite near the unit square.
inline expr::Expr random_expr(std::mt19937_64& rng, int depth) {
  using expr::Expr;
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const Expr x = Expr::var("x"), y = Expr::var("y");
  if (depth == 0) {
    switch (pick(rng) % 3) {
      case 0: return x;
      case 1: return y;
      default: return Expr(std::round(coef(rng) * 100) / 100);
    }
  }
  const Expr a = random_expr(rng, depth - 1);
  const Expr b = random_expr(rng, depth - 1);
  switch (pick(rng)) {
    case 0: return a + b;
    case 1: return a - b;
    case 2: return a * b;
    case 3: return a / (Expr(2.0) + expr::cos(b));
    case 4: return expr::sin(a);
    case 5: return expr::cos(a) * b;
    case 6: return expr::exp(expr::sin(a));
    case 7: return expr::sqrt(Expr(1.0) + a * a);
    case 8: return expr::ln(Expr(3.0) + expr::sin(a) + expr::cos(b) / Expr(2.0));
    default: return expr::atan2(a, Expr(2.0) + b * b);
  }
}

struct GrammarCase {
  bool valid = false;
  std::string expected;  // value for valid cases, error kind otherwise
  std::string text;
};

inline std::vector<GrammarCase> grammar_cases(const std::string& path) {
  std::ifstream in(path);
  std::vector<GrammarCase> out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    out.push_back({line.substr(0, t1) == "valid", line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1)});
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Value of `key` in the first record of `type`, or "" if absent.
inline std::string field(const std::string& report, const std::string& type, const std::string& key) {
  std::istringstream in(report);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("record=" + type + " ", 0) != 0 && line != "record=" + type) continue;
    const auto at = line.find(" " + key + "=");
    if (at == std::string::npos) return "";
    const auto start = at + key.size() + 2;
    return line.substr(start, line.find(' ', start) - start);
  }
  return "";
}

}  // namespace testing
