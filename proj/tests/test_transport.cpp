#include <doctest.h>

#include "bundlekit/error.hpp"
#include "support.hpp"

#include <numbers>

using namespace bundlekit;
using namespace bundlekit::transport;
using bundle::ActionSpec;
using bundle::BundleSpec;
using bundle::ConnectionSpec;
using lie::GroupKind;
using manifold::CatalogName;

namespace {

constexpr double kPi = std::numbers::pi;

Point vec(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

double holonomy_error(double alpha, int steps, int min_steps = 8) {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const auto a = testing::annulus_connection(atlas, alpha);
  Options o;
  o.steps_per_unit = steps;
  o.min_steps = min_steps;
  o.estimate_error = false;
  const auto r = holonomy(*a, atlas->loop_generators[0], o);
  return std::abs(r.end_value(0, 0) - testing::phase(-2 * kPi * alpha));
}

}  // namespace

TEST_CASE("annulus holonomy and fourth-order convergence") {
  for (double alpha : {0.1, 0.25, 1.0 / 3.0}) {
    CAPTURE(alpha);
    CHECK(holonomy_error(alpha, 4096) < 1e-12);
    const double e1 = holonomy_error(alpha, 4, 1), e2 = holonomy_error(alpha, 8, 1);
    CHECK(e1 / e2 > 10.0);
  }
}

TEST_CASE("holonomy requires a closed path") {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const auto a = testing::annulus_connection(atlas, 0.25);
  const auto open = manifold::PathSpec::polyline(*atlas, "open", {{0, vec(1.5, 0.5)}, {0, vec(1.5, 1.0)}});
  try {
    holonomy(*a, open);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotALoop);
  }
}

TEST_CASE("transport along a chord of a pure gauge") {
  // A = u^-1 du with u = exp(i f): transport from x0 to x is exp(-i(f(x) - f(x0))).
  const auto disk = manifold::catalog_instantiate(CatalogName::Disk).atlas;
  const auto p = BundleSpec::trivial(disk, GroupKind::u1());
  auto a = ConnectionSpec::make(p, {{testing::imag_scalar("x2 + 0.5"), testing::imag_scalar("x1")}});
  auto f = [](const Point& x) { return x(0) * x(1) + x(0) / 2; };
  const auto path = manifold::PathSpec::polyline(*disk, "ray", {{0, vec(-0.2, 0.1)}, {0, vec(0.5, 0.3)}});
  const auto r = horizontal_lift(*a, path, lie::Matrix::Identity(1, 1));
  CHECK(std::abs(r.end_value(0, 0) - testing::phase(-(f(vec(0.5, 0.3)) - f(vec(-0.2, 0.1))))) < 1e-12);
  CHECK(r.est_error < 1e-12);
  CHECK(r.steps >= 8);
}

TEST_CASE("trace points follow the path") {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const auto a = testing::annulus_connection(atlas, 0.25);
  std::vector<TracePoint> trace;
  Options o;
  o.steps_per_unit = 16;
  o.estimate_error = false;
  o.trace = &trace;
  holonomy(*a, atlas->loop_generators[0], o);
  REQUIRE(trace.size() > 3);
  CHECK(trace.front().t == doctest::Approx(kPi / 2));
  CHECK(trace.back().t == doctest::Approx(2.5 * kPi));
  for (const auto& tp : trace) CHECK(tp.x(0) == doctest::Approx(1.5));
}

TEST_CASE("associated transport in the adjoint representation") {
  // Constant su(2) connection A = theta e3 dx1: the lift exp(-x theta e3)
  // rotates algebra coordinates about the third axis by -x theta.
  const auto plane = manifold::catalog_instantiate(CatalogName::Plane, {{"extent", 4}}).atlas;
  const auto p = BundleSpec::trivial(plane, GroupKind::su2());
  expr::ExprMatrix e3(2, 2);
  e3.at(0, 0).im = expr::Expr(-0.5 * 0.7);
  e3.at(1, 1).im = expr::Expr(0.5 * 0.7);
  const auto a = ConnectionSpec::make(p, {{e3, expr::ExprMatrix::zero(2, 2)}});
  const auto path = manifold::PathSpec::polyline(*plane, "x", {{0, vec(0, 0)}, {0, vec(2, 0)}});
  const bundle::FiberValue e1 = lie::algebra_basis(GroupKind::su2())[0];
  const auto r = associated_transport(*a, ActionSpec::linear(GroupKind::su2(), ActionSpec::Rep::Adjoint), path, e1);
  const auto c = lie::algebra_coords(GroupKind::su2(), r.end_value);
  const double ang = -2 * 0.7;
  CHECK(std::abs(c(0) - std::cos(ang)) < 1e-10);
  CHECK(std::abs(c(1) - std::sin(ang)) < 1e-10);
  CHECK(std::abs(c(2)) < 1e-12);
}

TEST_CASE("radial extension of a flat connection is parallel") {
  const auto disk = manifold::catalog_instantiate(CatalogName::Disk).atlas;
  const auto p = BundleSpec::trivial(disk, GroupKind::u1());
  auto a = ConnectionSpec::make(p, {{testing::imag_scalar("x2 + 0.5"), testing::imag_scalar("x1")}});
  const auto act = ActionSpec::left(GroupKind::u1());
  const auto grid = radial_extend(*a, act, 0, vec(0, 0), 0.8, lie::Matrix::Identity(1, 1), 11);
  CHECK(parallelism_check(*a, grid) < 1e-8);
  CHECK(grid.spacing() == doctest::Approx(0.16));
  const auto v = radial_value(*a, grid, vec(0.3, 0.2));
  CHECK(std::abs(v(0, 0) - testing::phase(-(0.06 + 0.15))) < 1e-10);
  for (int k = 0; k < static_cast<int>(grid.nodes.size()); ++k) {
    CHECK(grid.index(grid.multi_index(k)) == k);
  }
}

TEST_CASE("radial extension of a curved connection is not parallel") {
  const auto disk = manifold::catalog_instantiate(CatalogName::Disk).atlas;
  const auto p = BundleSpec::trivial(disk, GroupKind::u1());
  auto a = ConnectionSpec::make(p, {{testing::imag_scalar("0"), testing::imag_scalar("x1")}});
  auto b = ConnectionSpec::make(p, {{testing::imag_scalar("0"), testing::imag_scalar("2*x1")}});
  const auto act = ActionSpec::left(GroupKind::u1());
  const auto ga = radial_extend(*a, act, 0, vec(0, 0), 0.6, lie::Matrix::Identity(1, 1), 9);
  const auto gb = radial_extend(*b, act, 0, vec(0, 0), 0.6, lie::Matrix::Identity(1, 1), 9);
  const double da = parallelism_check(*a, ga), db = parallelism_check(*b, gb);
  CHECK(da > 0.05);
  CHECK(db == doctest::Approx(2 * da).epsilon(0.02));
}

TEST_CASE("path independence of a flat transport") {
  const auto disk = manifold::catalog_instantiate(CatalogName::Disk).atlas;
  const auto p = BundleSpec::trivial(disk, GroupKind::u1());
  auto a = ConnectionSpec::make(p, {{testing::imag_scalar("x2 + 0.5"), testing::imag_scalar("x1")}});
  auto curved = ConnectionSpec::make(p, {{testing::imag_scalar("0"), testing::imag_scalar("x1")}});
  using manifold::PathSpec;
  const auto direct = PathSpec::polyline(*disk, "d", {{0, vec(0, 0)}, {0, vec(0.5, 0.5)}});
  const auto bent = PathSpec::polyline(*disk, "b", {{0, vec(0, 0)}, {0, vec(0.5, 0)}, {0, vec(0.5, 0.5)}});
  const auto act = ActionSpec::left(GroupKind::u1());
  const lie::Matrix one = lie::Matrix::Identity(1, 1);
  CHECK(path_independence_probe(*a, act, one, {{direct, bent}}) < 1e-12);
  // Enclosed curvature: the triangle has area 1/8 and F = i dx1 dx2.
  CHECK(path_independence_probe(*curved, act, one, {{direct, bent}}) ==
        doctest::Approx(std::abs(testing::phase(0.125) - 1.0)).epsilon(1e-6));
}
