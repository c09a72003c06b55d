#include <doctest.h>

#include "bundlekit/error.hpp"
#include "support.hpp"

using namespace bundlekit;
using namespace bundlekit::intertwiner;
using bundle::BundleSpec;
using bundle::ConnectionSpec;
using bundle::GaugeTransform;
using lie::GroupKind;
using manifold::CatalogName;

namespace {

Point vec(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

expr::Expr E(const std::string& s) { return expr::parse(s, {"x1", "x2"}); }

struct DiskPair {
  bundle::ConnectionPtr a, a_prime;
  expr::ExprMatrix u;
};

DiskPair disk_pair() {
  const auto disk = manifold::catalog_instantiate(CatalogName::Disk).atlas;
  const auto p = BundleSpec::trivial(disk, GroupKind::u1());
  auto a = ConnectionSpec::make(p, {{testing::imag_scalar("0.3*x2"), testing::imag_scalar("x1*x2 - 0.7*x1")}});
  const auto u = expr::ExprMatrix::phase(E("x1^2 - x2"));
  const auto g = GaugeTransform::make(p, {u});
  return {a, bundle::apply_gauge(*a, *g), u};
}

}  // namespace

TEST_CASE("gauge-related connections intertwine") {
  const auto d = disk_pair();
  const auto good = IntertwinerData::from_exprs(d.a->bundle(), d.a_prime->bundle(), {d.u}, {{0, vec(0.1, -0.2), 0.2}});
  CHECK(good.validate(16).all_pass());
  const auto rep = check_connection_intertwine(good, *d.a, *d.a_prime);
  CHECK(rep.pass());
  CHECK(rep.parallel_defect < 1e-8);
  CHECK(rep.curvature_match_defect < 1e-8);

  const auto bad = IntertwinerData::from_exprs(d.a->bundle(), d.a_prime->bundle(),
                                               {expr::ExprMatrix::phase(E("x1"))}, {{0, vec(0.1, -0.2), 0.2}});
  CHECK_FALSE(check_connection_intertwine(bad, *d.a, *d.a_prime).pass());
  // Swapping the roles replaces u by its inverse.
  const auto inv = IntertwinerData::from_exprs(d.a->bundle(), d.a_prime->bundle(), {d.u.adjoint()},
                                               {{0, vec(0.1, -0.2), 0.2}});
  CHECK(check_connection_intertwine(inv, *d.a_prime, *d.a).pass());
  CHECK_FALSE(check_connection_intertwine(inv, *d.a, *d.a_prime).pass());
}

TEST_CASE("iso and section round trip") {
  const auto d = disk_pair();
  const auto data = IntertwinerData::from_exprs(d.a->bundle(), d.a_prime->bundle(), {d.u}, {{0, vec(0, 0), 0.5}});
  const auto grids = iso_to_section(data, 11);
  REQUIRE(grids.size() == 1);
  const auto back = section_to_iso(d.a->bundle(), d.a_prime->bundle(), grids);
  const auto& g = grids.front();
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    if (!g.inside[k]) continue;
    CHECK((back.value(0, g.nodes[k]) - data.value(0, g.nodes[k])).norm() < 1e-12);
  }
}

TEST_CASE("extension recovers a hidden gauge on the disk") {
  const auto d = disk_pair();
  const auto local = IntertwinerData::from_exprs(d.a->bundle(), d.a_prime->bundle(), {d.u}, {{0, vec(0.1, -0.2), 0.2}});
  germs::ExtendOptions o;
  o.res = 11;
  const auto res = extend_iso(local, *d.a, *d.a_prime, o);
  REQUIRE(std::holds_alternative<ExtendedIso>(res));
  const auto& ext = std::get<ExtendedIso>(res);
  CHECK(ext.local_match < 1e-6);
  for (const auto& x : {vec(0.7, 0.1), vec(-0.5, -0.6), vec(0.0, 0.9)}) {
    const auto want = d.u.eval({{"x1", x(0)}, {"x2", x(1)}});
    CHECK(lie::geodesic_distance(ext.data.value(0, x), want) < 1e-6);
  }
}

TEST_CASE("overlap rule violations") {
  const auto sphere = manifold::catalog_instantiate(CatalogName::TwoChartSphere).atlas;
  const auto p = BundleSpec::make(sphere, GroupKind::u1(), {expr::ExprMatrix::phase(E("atan2(x2, x1)")), std::nullopt});
  const auto q = BundleSpec::trivial(sphere, GroupKind::u1());
  // u_b = g^-1 u_a g' cannot hold with both u constant
  const auto c = expr::ExprMatrix::identity(1);
  const auto data = IntertwinerData::from_exprs(p, q, {c, c}, {{0, vec(0, 0)}, {1, vec(0, 0)}});
  CHECK_FALSE(data.validate(16).all_pass());
  try {
    iso_to_section(data, 9);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OverlapViolation);
  }
}

TEST_CASE("non-unitary samples are rejected") {
  const auto d = disk_pair();
  const auto data = IntertwinerData::from_exprs(d.a->bundle(), d.a_prime->bundle(), {d.u}, {{0, vec(0, 0), 0.3}});
  auto grids = iso_to_section(data, 5);
  for (std::size_t k = 0; k < grids[0].values.size(); ++k) {
    if (grids[0].inside[k]) grids[0].values[k] *= 1.5;
  }
  try {
    section_to_iso(d.a->bundle(), d.a_prime->bundle(), grids);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ValueNotInGroup);
  }
}

TEST_CASE("phi-covering data over the radial projection") {
  const auto ann = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const auto circ = manifold::catalog_instantiate(CatalogName::Circle).atlas;
  const auto proj = manifold::ChartMap::make(ann, circ, {0, 1}, {{E("x2")}, {E("x2")}});
  const auto p = BundleSpec::trivial(ann, GroupKind::u1());
  const auto q = BundleSpec::trivial(circ, GroupKind::u1());
  auto circle_conn = [&](double alpha) {
    return ConnectionSpec::make(q, {{testing::imag_scalar(std::to_string(alpha))}, {testing::imag_scalar(std::to_string(alpha))}});
  };
  const auto a = testing::annulus_connection(ann, 0.25);
  const auto u = expr::ExprMatrix::phase(E("x2"));
  for (double alpha_p : {1.25, 0.5}) {
    CAPTURE(alpha_p);
    const auto b = circle_conn(alpha_p);
    PhiCoveringData data{proj, IntertwinerData::from_exprs(p, q, {u, u}, {{0, vec(1.5, 1.57), 0.2}})};
    CheckOptions co;
    co.res = 7;
    const auto direct = phi_covering_check(data, *a, *b, co);
    const auto red = reduce_to_id_covering(data, *b);
    const auto via = check_connection_intertwine(red.data, *a, *red.pulled_connection, co);
    CHECK(std::abs(direct.parallel_defect - via.parallel_defect) < 1e-9);
    CHECK(direct.pass() == (alpha_p == 1.25));
  }
  {
    PhiCoveringData data{proj, IntertwinerData::from_exprs(p, q, {u, u}, {{0, vec(1.5, 1.57), 0.2}})};
    germs::ExtendOptions o;
    o.res = 9;
    const auto res = extend_iso_phi(data, *a, *circle_conn(1.25), o);
    REQUIRE(std::holds_alternative<ExtendedPhiIso>(res));
    const auto& e = std::get<ExtendedPhiIso>(res);
    CHECK(lie::geodesic_distance(e.id_covering.data.value(1, vec(1.2, 4.0)), testing::phase(4.0) * lie::Matrix::Identity(1, 1)) <
          1e-6);
  }
}
