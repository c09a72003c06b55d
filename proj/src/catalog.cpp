#include "bundlekit/error.hpp"
#include "bundlekit/manifold.hpp"

#include <cmath>
#include <numbers>

namespace bundlekit::manifold {

namespace {

constexpr double kPi = std::numbers::pi;
// Angular charts overlap by this much on either side of their seams.
constexpr double kSeam = 0.2;

Expr E(const std::string& text) { return expr::parse(text, {"x1", "x2", "t"}); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

std::vector<Expr> identity_map(int dim) {
  std::vector<Expr> m;
  for (const auto& v : coordinate_names(dim)) m.push_back(Expr::var(v));
  return m;
}

std::vector<Expr> euclidean(int dim) {
  std::vector<Expr> g;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g.emplace_back(i == j ? 1.0 : 0.0);
  }
  return g;
}

CatalogEntry disk(const std::map<std::string, double>& params) {
  const double r = param(params, "r", 1.0);
  if (!(r > 0.0)) fail(ErrorKind::InvalidParams, "Disk needs r > 0");
  auto atlas = std::make_shared<Atlas>("Disk", 2, std::vector<Chart>{{"D", Domain::ball(vec({0, 0}), r)}});
  atlas->simply_connected = true;
  atlas->basepoint = {0, vec({0, 0})};
  return {atlas, Metric::make(*atlas, {euclidean(2)})};
}

CatalogEntry plane(const std::map<std::string, double>& params) {
  const double e = param(params, "extent", 5.0);
  if (!(e > 0.0)) fail(ErrorKind::InvalidParams, "Plane needs extent > 0");
  auto atlas = std::make_shared<Atlas>("Plane", 2, std::vector<Chart>{{"P", Domain::box(vec({-e, -e}), vec({e, e}))}});
  atlas->simply_connected = true;
  atlas->basepoint = {0, vec({0, 0})};
  return {atlas, Metric::make(*atlas, {euclidean(2)})};
}

// Angular coordinate charts a: (-s, pi + s) and b: (pi - s, 2 pi + s). They
// overlap near pi (identity) and near 0 ~ 2 pi (shift by 2 pi).
void add_angle_pieces(Atlas& atlas, int angle_index) {
  const int dim = atlas.dim();
  auto shifted = [&](double by) {
    auto m = identity_map(dim);
    m[static_cast<std::size_t>(angle_index)] = m[static_cast<std::size_t>(angle_index)] + Expr(by);
    return m;
  };
  atlas.add_piece_pair(0, 1, identity_map(dim), identity_map(dim));
  atlas.add_piece_pair(0, 1, shifted(2 * kPi), shifted(-2 * kPi), {}, {}, {1});
}

CatalogEntry annulus(const std::map<std::string, double>& params) {
  const double r_in = param(params, "r_in", 1.0);
  const double r_out = param(params, "r_out", 2.0);
  if (!(r_in > 0.0 && r_out > r_in)) fail(ErrorKind::InvalidParams, "Annulus needs 0 < r_in < r_out");
  auto atlas = std::make_shared<Atlas>(
      "Annulus", 2,
      std::vector<Chart>{{"a", Domain::box(vec({r_in, -kSeam}), vec({r_out, kPi + kSeam}))},
                         {"b", Domain::box(vec({r_in, kPi - kSeam}), vec({r_out, 2 * kPi + kSeam}))}});
  add_angle_pieces(*atlas, 1);
  const double rm = 0.5 * (r_in + r_out);
  const std::string r = num(rm);
  atlas->basepoint = {0, vec({rm, kPi / 2})};
  atlas->loop_generators.push_back(PathSpec::build(
      *atlas, "gen1",
      {{"a", kPi / 2, kPi, {E(r), E("t")}},
       {"b", kPi, 2 * kPi + 0.1, {E(r), E("t")}},
       {"a", 2 * kPi + 0.1, 2.5 * kPi, {E(r), E("t - 2*pi")}}}));
  std::vector<Expr> polar{Expr(1.0), Expr(0.0), Expr(0.0), E("x1^2")};
  return {atlas, Metric::make(*atlas, {polar, polar})};
}

CatalogEntry circle(const std::map<std::string, double>&) {
  auto atlas = std::make_shared<Atlas>(
      "Circle", 1,
      std::vector<Chart>{{"a", Domain::box(vec({-kSeam}), vec({kPi + kSeam}))},
                         {"b", Domain::box(vec({kPi - kSeam}), vec({2 * kPi + kSeam}))}});
  add_angle_pieces(*atlas, 0);
  atlas->basepoint = {0, vec({kPi / 2})};
  atlas->loop_generators.push_back(PathSpec::build(*atlas, "gen1",
                                                   {{"a", kPi / 2, kPi, {E("t")}},
                                                    {"b", kPi, 2 * kPi + 0.1, {E("t")}},
                                                    {"a", 2 * kPi + 0.1, 2.5 * kPi, {E("t - 2*pi")}}}));
  return {atlas, Metric::make(*atlas, {euclidean(1), euclidean(1)})};
}

// Unit-period torus from four boxes I_a x I_b with I_0 = (-0.1, 0.6) and
// I_1 = (0.4, 1.1). Pieces carry the lattice translation relating the charts.
CatalogEntry torus(const std::map<std::string, double>&) {
  const double lo[2] = {-0.1, 0.4};
  const double hi[2] = {0.6, 1.1};
  std::vector<Chart> charts;
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) {
      charts.push_back({std::to_string(a) + std::to_string(b), Domain::box(vec({lo[a], lo[b]}), vec({hi[a], hi[b]}))});
    }
  }
  auto atlas = std::make_shared<Atlas>("Torus", 2, charts);
  auto index_of = [](int a, int b) { return a + 2 * b; };
  auto shifts = [](int from, int to) -> std::vector<int> {
    if (from == to) return {0};
    return {0, to - from};
  };
  for (int c = 0; c < 4; ++c) {
    for (int d = c + 1; d < 4; ++d) {
      const int ca = c % 2, cb = c / 2, da = d % 2, db = d / 2;
      for (int s1 : shifts(ca, da)) {
        for (int s2 : shifts(cb, db)) {
          std::vector<Expr> fwd{E("x1") + Expr(s1), E("x2") + Expr(s2)};
          std::vector<Expr> bwd{E("x1") - Expr(s1), E("x2") - Expr(s2)};
          atlas->add_piece_pair(index_of(ca, cb), index_of(da, db), fwd, bwd, {}, {}, {s1, s2});
        }
      }
    }
  }
  atlas->basepoint = {0, vec({0.25, 0.25})};
  atlas->loop_generators.push_back(PathSpec::build(*atlas, "gen1",
                                                   {{"00", 0.25, 0.5, {E("t"), E("0.25")}},
                                                    {"10", 0.5, 1.05, {E("t"), E("0.25")}},
                                                    {"00", 1.05, 1.25, {E("t - 1"), E("0.25")}}}));
  atlas->loop_generators.push_back(PathSpec::build(*atlas, "gen2",
                                                   {{"00", 0.25, 0.5, {E("0.25"), E("t")}},
                                                    {"01", 0.5, 1.05, {E("0.25"), E("t")}},
                                                    {"00", 1.05, 1.25, {E("0.25"), E("t - 1")}}}));
  return {atlas, Metric::make(*atlas, {euclidean(2), euclidean(2), euclidean(2), euclidean(2)})};
}

// Stereographic charts from the north and south poles, related by the
// inversion z -> 1/z (conjugated), i.e. (x1, -x2)/|x|^2.
CatalogEntry sphere(const std::map<std::string, double>& params) {
  const double R = param(params, "R", 1.5);
  if (!(R > 1.0)) fail(ErrorKind::InvalidParams, "TwoChartSphere needs R > 1 so the charts overlap");
  auto atlas = std::make_shared<Atlas>(
      "TwoChartSphere", 2,
      std::vector<Chart>{{"N", Domain::ball(vec({0, 0}), R)}, {"S", Domain::ball(vec({0, 0}), R)}});
  const std::vector<Expr> inversion{E("x1/(x1^2 + x2^2)"), E("-x2/(x1^2 + x2^2)")};
  const Expr overlap = E("x1^2 + x2^2 - " + num(1.0 / (R * R)));
  atlas->add_piece_pair(0, 1, inversion, inversion, {overlap}, {overlap});
  atlas->simply_connected = true;
  atlas->basepoint = {0, vec({0, 0})};
  const Expr w = E("4/(1 + x1^2 + x2^2)^2");
  std::vector<Expr> round{w, Expr(0.0), Expr(0.0), w};
  return {atlas, Metric::make(*atlas, {round, round})};
}

}  // namespace

CatalogName parse_catalog_name(const std::string& name) {
  if (name == "Disk") return CatalogName::Disk;
  if (name == "Annulus") return CatalogName::Annulus;
  if (name == "Circle") return CatalogName::Circle;
  if (name == "Torus") return CatalogName::Torus;
  if (name == "TwoChartSphere") return CatalogName::TwoChartSphere;
  if (name == "Plane") return CatalogName::Plane;
  fail(ErrorKind::UnknownCatalogEntry, "unknown catalog entry '" + name + "'");
}

std::string to_string(CatalogName name) {
  switch (name) {
    case CatalogName::Disk: return "Disk";
    case CatalogName::Annulus: return "Annulus";
    case CatalogName::Circle: return "Circle";
    case CatalogName::Torus: return "Torus";
    case CatalogName::TwoChartSphere: return "TwoChartSphere";
    case CatalogName::Plane: return "Plane";
  }
  return "?";
}

CatalogEntry catalog_instantiate(CatalogName name, const std::map<std::string, double>& params) {
  switch (name) {
    case CatalogName::Disk: return disk(params);
    case CatalogName::Annulus: return annulus(params);
    case CatalogName::Circle: return circle(params);
    case CatalogName::Torus: return torus(params);
    case CatalogName::TwoChartSphere: return sphere(params);
    case CatalogName::Plane: return plane(params);
  }
  fail(ErrorKind::UnknownCatalogEntry, "unknown catalog entry");
}

}  // namespace bundlekit::manifold
