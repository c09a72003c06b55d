#include <doctest.h>

#include "bundlekit/error.hpp"
#include "support.hpp"

#include <numbers>

using namespace bundlekit;
using namespace bundlekit::quotient;

namespace {

constexpr double kPi = std::numbers::pi;

std::string torus_text(const std::string& connection, const std::string& lift1, const std::string& lift2) {
  return "[scenario]\nname = t\nsamples = 12\n"
         "[atlas R2]\ncatalog = Plane\nextent = 4\n"
         "[atlas T]\ncatalog = Torus\n"
         "[bundle P]\natlas = R2\ngroup = U1\n"
         "[connection B]\nbundle = P\n" +
         connection +
         "[quotient]\ncover = B\ntarget = T\n"
         "generator g1 = x1 + 1 ; x2\ngenerator g2 = x1 ; x2 + 1\n"
         "lift g1 = " +
         lift1 + "\nlift g2 = " + lift2 + "\nrelation comm = g1 g2 g1^-1 g2^-1\n";
}

Point vec(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

}  // namespace

TEST_CASE("translation inverses") {
  const auto x1 = expr::Expr::var("x1"), x2 = expr::Expr::var("x2");
  const auto inv = DeckAction::translation_inverse({x1 + expr::Expr(1.0), x2 - expr::Expr(0.5)});
  REQUIRE(inv.size() == 2);
  CHECK(expr::eval(inv[0], {{"x1", 3.0}, {"x2", 0.0}}) == 2.0);
  CHECK(expr::eval(inv[1], {{"x1", 0.0}, {"x2", 3.0}}) == 3.5);
  CHECK(DeckAction::translation_inverse({x1 * expr::Expr(2.0), x2}).empty());
  CHECK(DeckAction::translation_inverse({x1 + x2, x2}).empty());
}

TEST_CASE("constant connection on the torus") {
  const auto sc = scenario::parse(torus_text("P x1 = [0 | 0.3]\nP x2 = [0 | -0.2]\n", "phase(0.7)", "phase(-1.1)"));
  REQUIRE(sc.quotient);
  const auto& q = *sc.quotient;
  CHECK(check_lift_axioms(q.cover_data, q.deck, 16).all_pass());
  CHECK(verify_quotient_roundtrip(q.triple, q.cover_data, q.deck, 12).all_pass());
  const auto& atlas = *q.triple.atlas;
  const double want[2] = {-(0.7 + 0.3), -(-1.1 - 0.2)};
  for (int g = 0; g < 2; ++g) {
    const auto h = transport::holonomy(*q.triple.connection, atlas.loop_generators[static_cast<std::size_t>(g)]);
    CHECK(std::abs(h.end_value(0, 0) - testing::phase(want[g])) < 1e-9);
    const auto tw = twisted_cover_transport(q.cover_data, q.deck, g, atlas.basepoint.x);
    CHECK(std::abs(tw(0, 0) - h.end_value(0, 0)) < 1e-9);
  }
}

TEST_CASE("degree-one line bundle on the torus") {
  // B = 2 pi i x1 dx2 with j_g1 = exp(-2 pi i x2): total curvature 2 pi.
  const auto sc = scenario::parse(torus_text("P x2 = [0 | 2*pi*x1]\n", "phase(-2*pi*x2)", "identity"));
  REQUIRE(sc.quotient);
  const auto& q = *sc.quotient;
  CHECK(q.triple.bundle->validate(16).all_pass());
  CHECK(q.triple.connection->validate(16).all_pass());
  CHECK(verify_quotient_roundtrip(q.triple, q.cover_data, q.deck, 12).all_pass());
  const auto F = bundle::curvature(*q.triple.connection, 3, vec(0.5, 0.7));
  CHECK(std::abs(F.at(0, 1)(0, 0) - std::complex<double>(0, 2 * kPi)) < 1e-9);
}

TEST_CASE("non-equivariant lifts are rejected") {
  const auto sc = scenario::parse(torus_text("P x1 = [0 | 0.3]\n", "identity", "identity"));
  auto deck = sc.quotient->deck;
  deck.generators[0].lift = expr::ExprMatrix::phase(expr::parse("x2", {"x1", "x2"}));
  CHECK(check_lift_axioms(sc.quotient->cover_data, deck, 16).value("invariance_g1") > 0.1);
  try {
    build_quotient(sc.quotient->cover_data, deck, sc.quotient->triple.atlas);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LiftDefectTooLarge);
  }
  // The scenario loader reports the failing axiom by name.
  try {
    scenario::parse(torus_text("P x2 = [0 | x1]\n", "phase(-x2)", "identity"));
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvariantFailure);
    // flux 1 instead of 2 pi breaks the commutator relation
    CHECK(std::string(e.what()).find("relation_comm") != std::string::npos);
  }
}

TEST_CASE("deck patterns") {
  const std::string bad = torus_text("P x1 = [0 | 0.3]\n", "identity", "identity");
  std::string scaled = bad;
  scaled.replace(scaled.find("x1 + 1 ; x2"), 11, "2*x1 ; x2");
  try {
    scenario::parse(scaled);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedDeckPattern);
  }
}

TEST_CASE("local homogeneity of a translation") {
  const auto sc = scenario::load(BUNDLEKIT_SOURCE_DIR "/scenarios/torus_quotient.scn");
  const auto& cand = sc.homogeneity.at("shift");
  CHECK(check_local_homogeneity(sc.quotient->triple, cand, 16).all_pass());
  auto off = cand;
  // fixes x but is not an isometry
  off.iso[0] = off.iso[0] + expr::parse("0.5*(x1 - 0.2)^2", {"x1", "x2"});
  CHECK_FALSE(check_local_homogeneity(sc.quotient->triple, off, 16).all_pass());
}
