#include <doctest.h>

#include "support.hpp"

#include <numbers>

using namespace bundlekit;
using namespace bundlekit::germs;
using bundle::ActionSpec;
using bundle::BundleSpec;
using bundle::ConnectionSpec;
using lie::GroupKind;
using manifold::CatalogName;

namespace {

constexpr double kPi = std::numbers::pi;

GermValue identity_germ(const manifold::Atlas& atlas, int n = 1) {
  return {atlas.basepoint, lie::Matrix::Identity(n, n)};
}

}  // namespace

TEST_CASE("sheet counts for rational holonomy") {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const struct {
    double alpha;
    int q;
  } rows[] = {{0.5, 2}, {1.0 / 3.0, 3}, {0.4, 5}, {0.25, 4}, {1.0, 1}};
  for (const auto& r : rows) {
    CAPTURE(r.alpha);
    const auto a = testing::annulus_connection(atlas, r.alpha);
    const auto orbit = enumerate_sheets(*a, ActionSpec::left(GroupKind::u1()), identity_germ(*atlas), 64);
    CHECK(orbit.closed);
    CHECK(static_cast<int>(orbit.sheets.size()) == r.q);
    CHECK(orbit.cycle_lengths(0) == std::vector<int>{r.q});
    for (int i = 0; i < r.q; ++i) {
      CHECK(orbit.generator_action[0].inverse_image[orbit.generator_action[0].image[i]] == i);
    }
  }
}

TEST_CASE("irrational holonomy overflows the orbit") {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const auto a = testing::annulus_connection(atlas, std::numbers::sqrt2 - 1);
  const auto orbit = enumerate_sheets(*a, ActionSpec::left(GroupKind::u1()), identity_germ(*atlas), 20);
  CHECK_FALSE(orbit.closed);
  CHECK(orbit.sheets.size() == 20);
}

TEST_CASE("adjoint action sees only the adjoint holonomy") {
  // U(1) acts trivially on its own algebra, so every germ is fixed.
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const auto a = testing::annulus_connection(atlas, 0.25);
  bundle::FiberValue v(1, 1);
  v << 1.0;
  const auto orbit = enumerate_sheets(*a, ActionSpec::linear(GroupKind::u1(), ActionSpec::Rep::Adjoint),
                                      {atlas->basepoint, v}, 8);
  CHECK(orbit.sheets.size() == 1);
}

TEST_CASE("annulus extension gives a witness") {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  for (double alpha : {0.25, 1.0 / 3.0}) {
    const auto a = testing::annulus_connection(atlas, alpha);
    const auto res = global_extend(*a, ActionSpec::left(GroupKind::u1()), identity_germ(*atlas));
    REQUIRE(std::holds_alternative<MonodromyWitness>(res));
    const auto& w = std::get<MonodromyWitness>(res);
    CHECK(w.generator == "gen1");
    CHECK(w.discrepancy == doctest::Approx(std::abs(testing::phase(-2 * kPi * alpha) - 1.0)).epsilon(1e-9));
  }
}

TEST_CASE("integer alpha extends on the annulus") {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const auto a = testing::annulus_connection(atlas, 1.0);
  ExtendOptions o;
  o.res = 11;
  const auto res = global_extend(*a, ActionSpec::left(GroupKind::u1()), identity_germ(*atlas), o);
  REQUIRE(std::holds_alternative<GlobalSection>(res));
  const auto& s = std::get<GlobalSection>(res);
  CHECK(s.overlap.all_pass());
  CHECK(section_parallelism(*a, s) < 1e-6);
  // s = exp(-i theta) relative to the basepoint angle pi/2
  manifold::Point x(2);
  x << 1.3, 2.0;
  CHECK(std::abs(s.value(*a, 0, x)(0, 0) - testing::phase(-(2.0 - kPi / 2))) < 1e-8);
}

TEST_CASE("disk extension and uniqueness across spanning trees") {
  const auto sphere = manifold::catalog_instantiate(CatalogName::TwoChartSphere).atlas;
  // Trivial bundle, pure gauge A = u^-1 du in both charts with u the same
  // global function pulled through the inversion.
  const auto p = BundleSpec::trivial(sphere, GroupKind::u1());
  const std::string fN = "x1/(1 + x1^2 + x2^2)";
  const std::string fS = fN;  // f∘tau has the same form
  auto form = [](const std::string& f) {
    std::vector<expr::ExprMatrix> out;
    for (const char* v : {"x1", "x2"}) {
      expr::ExprMatrix m(1, 1);
      m.at(0, 0).im = expr::deriv(expr::parse(f, {"x1", "x2"}), v);
      out.push_back(m);
    }
    return out;
  };
  const auto a = ConnectionSpec::make(p, {form(fN), form(fS)});
  REQUIRE(a->validate(32).all_pass());
  ExtendOptions o0, o1;
  o0.res = o1.res = 11;
  o1.tree_variant = 1;
  const auto act = ActionSpec::left(GroupKind::u1());
  const auto r0 = global_extend(*a, act, identity_germ(*sphere), o0);
  const auto r1 = global_extend(*a, act, identity_germ(*sphere), o1);
  REQUIRE(std::holds_alternative<GlobalSection>(r0));
  REQUIRE(std::holds_alternative<GlobalSection>(r1));
  const auto& s0 = std::get<GlobalSection>(r0);
  const auto& s1 = std::get<GlobalSection>(r1);
  CHECK(s0.overlap.all_pass());
  CHECK(uniqueness_probe(*a, s0, s1) < 1e-6);
  manifold::Point x(2);
  x << 0.4, -0.7;
  const double f = 0.4 / (1 + 0.65);
  CHECK(std::abs(s0.value(*a, 0, x)(0, 0) - testing::phase(-f)) < 1e-8);
}

TEST_CASE("curved sphere connection fails to glue") {
  const auto sphere = manifold::catalog_instantiate(CatalogName::TwoChartSphere).atlas;
  const auto p = BundleSpec::make(sphere, GroupKind::u1(), {expr::ExprMatrix::phase(expr::parse("atan2(x2, x1)", {"x1", "x2"})), std::nullopt});
  const auto a1 = testing::imag_scalar("x2/(1 + x1^2 + x2^2)");
  const auto a2 = testing::imag_scalar("-x1/(1 + x1^2 + x2^2)");
  const auto a = ConnectionSpec::make(p, {{a1, a2}, {a1, a2}});
  ExtendOptions o;
  o.res = 9;
  try {
    global_extend(*a, ActionSpec::left(GroupKind::u1()), identity_germ(*sphere), o);
    FAIL("accepted");
  } catch (const GlueFailure& e) {
    CHECK(e.kind() == ErrorKind::GlueFailure);
    CHECK(e.defect > 1e-3);
    CHECK(e.max_curvature > 0.1);
  }
}
