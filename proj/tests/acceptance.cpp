// Acceptance checks, one line per criterion. With an argument N only
// criterion N runs; the exit status is nonzero if any criterion fails.

#include "bundlekit/error.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>

using namespace bundlekit;
using bundle::ActionSpec;
using bundle::BundleSpec;
using bundle::ConnectionSpec;
using bundle::GaugeTransform;
using expr::Expr;
using expr::ExprMatrix;
using lie::GroupKind;
using lie::Matrix;
using manifold::CatalogName;
using manifold::Point;

namespace {

constexpr double kPi = std::numbers::pi;
const std::string kScenarios = BUNDLEKIT_SOURCE_DIR "/scenarios/";

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [FAILED]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Point vec(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

Expr E(const std::string& s) { return expr::parse(s, {"x1", "x2"}); }

expr::EvalContext at(const Point& x) { return {{"x1", x(0)}, {"x2", x(1)}}; }

// Random quadratic polynomial in x1, x2 with small coefficients.
std::string random_poly(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> c(-scale, scale);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.6f + %.6f*x1 + %.6f*x2 + %.6f*x1*x2 + %.6f*x1^2 + %.6f*x2^2", c(rng), c(rng), c(rng),
                c(rng), c(rng), c(rng));
  return buf;
}

// exp(f1 e1) exp(f2 e3) in SU(2), closed form.
ExprMatrix su2_gauge(const std::string& f1, const std::string& f2) {
  ExprMatrix r1(2, 2), r3(2, 2);
  // exp(t e1) = cos(t/2) - i sin(t/2) sigma_x
  const Expr c1 = expr::cos(E(f1) / Expr(2.0)), s1 = expr::sin(E(f1) / Expr(2.0));
  r1.at(0, 0).re = c1;
  r1.at(1, 1).re = c1;
  r1.at(0, 1).im = -s1;
  r1.at(1, 0).im = -s1;
  // exp(t e3) = diag(e^{-it/2}, e^{it/2})
  const Expr c3 = expr::cos(E(f2) / Expr(2.0)), s3 = expr::sin(E(f2) / Expr(2.0));
  r3.at(0, 0) = {c3, -s3};
  r3.at(1, 1) = {c3, s3};
  return r1 * r3;
}

std::vector<ExprMatrix> random_su2_form(std::mt19937_64& rng) {
  std::vector<ExprMatrix> form;
  const auto b = lie::algebra_basis(GroupKind::su2());
  for (int i = 0; i < 2; ++i) {
    ExprMatrix m = ExprMatrix::zero(2, 2);
    for (int k = 0; k < 3; ++k) m = m + ExprMatrix::constant(b[static_cast<std::size_t>(k)]).scaled(E(random_poly(rng, 0.5)));
    form.push_back(m);
  }
  return form;
}

double annulus_holonomy_error(double alpha, int steps_per_unit, int min_steps, bool estimate) {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const auto a = testing::annulus_connection(atlas, alpha);
  transport::Options o;
  o.steps_per_unit = steps_per_unit;
  o.min_steps = min_steps;
  o.estimate_error = estimate;
  const auto h = transport::holonomy(*a, atlas->loop_generators[0], o);
  return std::abs(h.end_value(0, 0) - testing::phase(-2 * kPi * alpha));
}

// ---------------------------------------------------------------- criteria

void criterion_1(Outcome& out) {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  double length = 0.0;
  for (const auto& s : atlas->loop_generators[0].segments()) length += s.t1 - s.t0;
  // 4096 steps over the whole loop, and 4096 per unit parameter length
  const int per_unit_total = static_cast<int>(std::floor(4096 / length));
  for (double alpha : {0.1, 0.25, 1.0 / 3.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    const double err_total = annulus_holonomy_error(alpha, per_unit_total, 8, true);
    const double err_unit = annulus_holonomy_error(alpha, 4096, 8, true);
    const double secs = seconds_since(t0) / 2;
    const double coarse = annulus_holonomy_error(alpha, 4, 1, false);
    const double fine = annulus_holonomy_error(alpha, 8, 1, false);
    const std::string a = "alpha=" + num(alpha);
    out.require(err_total <= 1e-8 && err_unit <= 1e-8,
                a + " err=" + num(std::max(err_total, err_unit)));
    out.require(coarse / fine >= 8.0, a + " doubling ratio=" + num(coarse / fine));
    out.require(secs <= 1.0, a + " time=" + num(secs) + "s");
  }
}

void criterion_2(Outcome& out) {
  std::mt19937_64 rng(2024);
  const auto disk = manifold::catalog_instantiate(CatalogName::Disk).atlas;
  const auto p = BundleSpec::trivial(disk, GroupKind::su2());
  const ExprMatrix u = su2_gauge("x1*x2 + x1/2 + 0.8*x2", "x1^2 - x2 + 0.3*x1*x2");
  const auto a = bundle::apply_gauge(*ConnectionSpec::zero(p), *GaugeTransform::make(p, {u}));
  // random unit germ in C^2 at a random point near the centre
  std::normal_distribution<double> n;
  bundle::FiberValue e0(2, 1);
  e0 << std::complex<double>(n(rng), n(rng)), std::complex<double>(n(rng), n(rng));
  e0 /= e0.norm();
  std::uniform_real_distribution<double> c(-0.1, 0.1);
  const Point x0 = vec(c(rng), c(rng));
  const double radius = 0.85;
  const auto act = ActionSpec::linear(GroupKind::su2());
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = transport::radial_extend(*a, act, 0, x0, radius, e0, 21);
  const double par = transport::parallelism_check(*a, grid);
  const double secs = seconds_since(t0);
  const Matrix u0 = u.eval(at(x0));
  double worst = 0.0;
  int nodes = 0;
  for (std::size_t k = 0; k < grid.nodes.size(); ++k) {
    if (!grid.inside[k]) continue;
    const Matrix ux = u.eval(at(grid.nodes[k]));
    worst = std::max(worst, bundle::fiber_distance(grid.values[k], ux.adjoint() * u0 * e0));
    ++nodes;
  }
  out.require(par <= 1e-6, "parallelism=" + num(par));
  out.require(worst <= 1e-6, "closed form=" + num(worst) + " over " + std::to_string(nodes) + " nodes");
  out.require(secs <= 10.0, "time=" + num(secs) + "s");
}

void criterion_3(Outcome& out) {
  const auto atlas = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  const struct {
    double alpha;
    int q;
    const char* label;
  } rows[] = {{0.5, 2, "1/2"}, {1.0 / 3.0, 3, "1/3"}, {0.4, 5, "2/5"}};
  for (const auto& r : rows) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = testing::annulus_connection(atlas, r.alpha);
    const auto orbit = germs::enumerate_sheets(*a, ActionSpec::left(GroupKind::u1()),
                                               {atlas->basepoint, Matrix::Identity(1, 1)}, 64);
    const double secs = seconds_since(t0);
    const auto cycles = orbit.cycle_lengths(0);
    out.require(orbit.closed && static_cast<int>(orbit.sheets.size()) == r.q,
                std::string(r.label) + " sheets=" + std::to_string(orbit.sheets.size()));
    out.require(cycles == std::vector<int>{r.q}, std::string(r.label) + " cycles=" + std::to_string(cycles.size()));
    out.require(secs <= 5.0, std::string(r.label) + " time=" + num(secs) + "s");
  }
}

void criterion_4(Outcome& out) {
  const auto act = ActionSpec::left(GroupKind::u1());
  // disk fixtures with flat connections
  for (const char* f : {"disk_flat"}) {
    const auto sc = scenario::load(kScenarios + f + ".scn");
    const auto& a = *sc.connections.at(sc.pick(sc.connections, "connection"));
    const auto res = germs::global_extend(a, act, {a.atlas()->basepoint, Matrix::Identity(1, 1)});
    const bool ok = std::holds_alternative<germs::GlobalSection>(res);
    out.require(ok, std::string(f) + " global section");
    if (ok) {
      const double glue = std::get<germs::GlobalSection>(res).overlap.value("glue");
      out.require(glue <= 1e-5, std::string(f) + " glue=" + num(glue));
    }
  }
  // SU(2) pure gauge on the disk
  const auto disk = manifold::catalog_instantiate(CatalogName::Disk).atlas;
  const auto p = BundleSpec::trivial(disk, GroupKind::su2());
  const auto a2 = bundle::apply_gauge(*ConnectionSpec::zero(p),
                                      *GaugeTransform::make(p, {su2_gauge("x1*x2 + x1/2", "x1^2 - x2")}));
  {
    const auto res = germs::global_extend(*a2, ActionSpec::left(GroupKind::su2()),
                                          {disk->basepoint, Matrix::Identity(2, 2)});
    const bool ok = std::holds_alternative<germs::GlobalSection>(res);
    out.require(ok, "disk SU2 global section");
    if (ok) {
      const auto& s = std::get<germs::GlobalSection>(res);
      out.require(s.overlap.value("glue") <= 1e-5, "disk SU2 glue=" + num(s.overlap.value("glue")));
      const double par = germs::section_parallelism(*a2, s);
      out.require(par <= 1e-6, "disk SU2 parallelism=" + num(par));
    }
  }
  // annulus witness
  {
    const auto sc = scenario::load(kScenarios + "annulus_u1.scn");
    const auto& a = *sc.connections.at("A");
    const auto res = germs::global_extend(a, act, {a.atlas()->basepoint, Matrix::Identity(1, 1)});
    const bool ok = std::holds_alternative<germs::MonodromyWitness>(res);
    out.require(ok, "annulus witness");
    if (ok) {
      const double d = std::get<germs::MonodromyWitness>(res).discrepancy;
      out.require(std::abs(d - std::sqrt(2.0)) <= 1e-6, "discrepancy=" + num(d) + " |d-sqrt2|=" + num(std::abs(d - std::sqrt(2.0))));
    }
  }
  // two spanning trees on the two-chart sphere (the disk has a single chart)
  {
    const auto sphere = manifold::catalog_instantiate(CatalogName::TwoChartSphere).atlas;
    const auto ps = BundleSpec::trivial(sphere, GroupKind::u1());
    // A = i df for one global f; under the inversion x2 changes sign
    auto form = [](const std::string& f) {
      std::vector<ExprMatrix> out;
      for (const char* v : {"x1", "x2"}) {
        ExprMatrix m(1, 1);
        m.at(0, 0).im = expr::deriv(E(f), v);
        out.push_back(m);
      }
      return out;
    };
    const auto a = ConnectionSpec::make(ps, {form("(x1 + 0.5*x2)/(1 + x1^2 + x2^2)"),
                                             form("(x1 - 0.5*x2)/(1 + x1^2 + x2^2)")});
    out.require(a->validate(32).all_pass(), "sphere pure gauge compatible");
    germs::ExtendOptions o0, o1;
    o1.tree_variant = 1;
    const auto r0 = germs::global_extend(*a, act, {sphere->basepoint, Matrix::Identity(1, 1)}, o0);
    const auto r1 = germs::global_extend(*a, act, {sphere->basepoint, Matrix::Identity(1, 1)}, o1);
    const bool ok = std::holds_alternative<germs::GlobalSection>(r0) && std::holds_alternative<germs::GlobalSection>(r1);
    out.require(ok, "sphere sections");
    if (ok) {
      const auto& s0 = std::get<germs::GlobalSection>(r0);
      const auto& s1 = std::get<germs::GlobalSection>(r1);
      out.require(s0.overlap.value("glue") <= 1e-5, "sphere glue=" + num(s0.overlap.value("glue")));
      const double uq = germs::uniqueness_probe(*a, s0, s1);
      out.require(uq <= 1e-6, "uniqueness=" + num(uq));
    }
  }
}

void criterion_5(Outcome& out) {
  std::mt19937_64 rng(55);
  const auto disk = manifold::catalog_instantiate(CatalogName::Disk).atlas;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    bundle::ConnectionPtr a;
    ExprMatrix u;
    if (k % 2 == 0) {
      const auto p = BundleSpec::trivial(disk, GroupKind::u1());
      a = ConnectionSpec::make(p, {{testing::imag_scalar(random_poly(rng, 1.0)), testing::imag_scalar(random_poly(rng, 1.0))}});
      u = ExprMatrix::phase(E(random_poly(rng, 1.5)));
    } else {
      const auto p = BundleSpec::trivial(disk, GroupKind::su2());
      a = ConnectionSpec::make(p, {random_su2_form(rng)});
      u = su2_gauge(random_poly(rng, 1.5), random_poly(rng, 1.5));
    }
    const auto ap = bundle::apply_gauge(*a, *GaugeTransform::make(a->bundle(), {u}));
    const auto data = intertwiner::IntertwinerData::from_exprs(a->bundle(), ap->bundle(), {u}, {{0, vec(0, 0)}});
    const auto rep = intertwiner::check_connection_intertwine(data, *a, *ap);
    worst = std::max(worst, rep.parallel_defect);
  }
  out.require(worst <= 1e-6, "20 pairs max parallel_defect=" + num(worst));

  // mismatched flat annulus connections
  const auto ann = manifold::catalog_instantiate(CatalogName::Annulus).atlas;
  for (const auto& [alpha, alpha_p] : std::vector<std::pair<double, double>>{{0.25, 0.1}, {0.3, -0.15}, {0.5, 0.2}}) {
    const auto a = testing::annulus_connection(ann, alpha);
    const auto ap = testing::annulus_connection(ann, alpha_p);
    const auto phase = ExprMatrix::phase(E(std::to_string(alpha_p - alpha) + "*x2"));
    const auto data = intertwiner::IntertwinerData::from_exprs(a->bundle(), ap->bundle(), {phase, std::nullopt},
                                                               {{0, vec(1.5, kPi / 2), 0.2}});
    const auto res = intertwiner::extend_iso(data, *a, *ap);
    const std::string label = "(" + num(alpha) + "," + num(alpha_p) + ")";
    const bool ok = std::holds_alternative<germs::MonodromyWitness>(res);
    out.require(ok, label + " witness");
    if (!ok) continue;
    const double d = std::get<germs::MonodromyWitness>(res).discrepancy;
    const double want = std::abs(testing::phase(-2 * kPi * (alpha - alpha_p)) - 1.0);
    out.require(std::abs(d - want) <= 1e-5, label + " |d-closed|=" + num(std::abs(d - want)));
  }
}

void criterion_6(Outcome& out) {
  for (const char* f : {"disk_iso", "disk_iso_su2"}) {
    const auto sc = scenario::load(kScenarios + f + ".scn");
    const auto& d = sc.intertwiners.at(sc.pick(sc.intertwiners, "intertwiner"));
    const auto& a = *sc.connections.at(d.connection);
    const auto& ap = *sc.connections.at(d.connection_prime);
    const auto& ref = *sc.gauges.at(d.reference);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = intertwiner::extend_iso(d.data, a, ap);
    const double secs = seconds_since(t0);
    const bool ok = std::holds_alternative<intertwiner::ExtendedIso>(res);
    out.require(ok, std::string(f) + " extended");
    if (!ok) continue;
    const auto& ext = std::get<intertwiner::ExtendedIso>(res);
    const auto& dom = a.atlas()->chart(0).domain;
    double worst = 0.0;
    int count = 0;
    auto probe = [&](const Point& x) {
      worst = std::max(worst, lie::geodesic_distance(ext.data.value(0, x), ref.value(0, x)));
      ++count;
    };
    for (int i = 0; i < 21; ++i) {
      for (int j = 0; j < 21; ++j) {
        const Point x = vec(-0.98 + 1.96 * i / 20, -0.98 + 1.96 * j / 20);
        if (dom.contains(x, 0.02)) probe(x);
      }
    }
    manifold::Sampler s(2, 11);
    while (count < 441 + 200) {
      if (const auto x = dom.from_unit(s.next(), 0.98)) probe(*x);
    }
    out.require(worst <= 1e-6, std::string(f) + " geodesic=" + num(worst) + " at " + std::to_string(count) + " points");
    out.require(secs <= 30.0, std::string(f) + " time=" + num(secs) + "s");
  }
}

void criterion_7(Outcome& out) {
  auto compare = [&](const std::string& label, const intertwiner::PhiCoveringData& data,
                     const ConnectionSpec& a, const ConnectionSpec& ap) {
    const auto direct = intertwiner::phi_covering_check(data, a, ap);
    const auto red = intertwiner::reduce_to_id_covering(data, ap);
    const auto via = intertwiner::check_connection_intertwine(red.data, a, *red.pulled_connection);
    const double gap = std::abs(direct.parallel_defect - via.parallel_defect);
    out.require(gap <= 1e-9, label + " direct=" + num(direct.parallel_defect) + " gap=" + num(gap));
  };
  for (const char* f : {"annulus_circle_phi", "annulus_circle_phi_mismatch"}) {
    const auto sc = scenario::load(kScenarios + f + ".scn");
    const auto& d = sc.intertwiners.at(sc.pick(sc.intertwiners, "intertwiner"));
    const auto& a = *sc.connections.at(d.connection);
    const auto& ap = *sc.connections.at(d.connection_prime);
    const intertwiner::PhiCoveringData data{sc.maps.at(d.map).map, d.data};
    compare(f, data, a, ap);
    // data that is nowhere near parallel
    const auto& p = d.data.bundle();
    const auto& q = d.data.bundle_prime();
    const auto off = intertwiner::IntertwinerData::from_exprs(
        p, q, {ExprMatrix::phase(E("x1^2 + 0.3*x2")), ExprMatrix::phase(E("x1^2 + 0.3*x2"))}, d.data.regions());
    compare(std::string(f) + "+skewed", {data.phi, off}, a, ap);
  }
}

void criterion_8(Outcome& out) {
  for (const char* f : {"torus_quotient", "torus_rational"}) {
    const auto sc = scenario::load(kScenarios + f + ".scn");
    const auto& q = *sc.quotient;
    const auto rt = quotient::verify_quotient_roundtrip(q.triple, q.cover_data, q.deck, sc.samples, sc.seed);
    out.require(rt.max_value() <= 1e-7, std::string(f) + " roundtrip=" + num(rt.max_value()));
    const auto& atlas = *q.triple.atlas;
    for (std::size_t g = 0; g < atlas.loop_generators.size(); ++g) {
      const auto& loop = atlas.loop_generators[g];
      const auto h = transport::holonomy(*q.triple.connection, loop);
      // declared lift phase c and cover connection a give exp(-i(c + a))
      const Matrix lift = q.deck.generators[g].lift.eval(at(atlas.basepoint.x));
      const auto b = q.cover_data.connection->components(0, atlas.basepoint.x);
      const std::complex<double> want = std::conj(lift(0, 0)) * std::exp(-b[g](0, 0));
      const double err = std::abs(h.end_value(0, 0) - want);
      out.require(err <= 1e-7, std::string(f) + " " + loop.name() + " err=" + num(err));
    }
  }
  // with B = 0 the holonomies are exactly the inverse lift phases; 1/3 and
  // 2/5 turns give 3 and 5 sheets, matching the annulus counts
  for (const auto& [c, q] : std::vector<std::pair<std::string, int>>{{"1/3", 3}, {"2/5", 5}}) {
    const std::string text = "[scenario]\nname = rational\nsamples = 12\n[params]\nc = " + c +
                             "\n[atlas R2]\ncatalog = Plane\nextent = 4\n[atlas T]\ncatalog = Torus\n"
                             "[bundle P]\natlas = R2\ngroup = U1\n[connection B]\nbundle = P\n"
                             "[quotient]\ncover = B\ntarget = T\n"
                             "generator g1 = x1 + 1 ; x2\ngenerator g2 = x1 ; x2 + 1\n"
                             "lift g1 = phase(2*pi*c)\nlift g2 = identity\nrelation comm = g1 g2 g1^-1 g2^-1\n";
    const auto sc = scenario::parse(text);
    const auto& qt = sc.quotient->triple;
    const auto h = transport::holonomy(*qt.connection, qt.atlas->loop_generators[0]);
    const double cv = sc.params.at("c");
    const double err = std::abs(h.end_value(0, 0) - testing::phase(-2 * kPi * cv));
    out.require(err <= 1e-7, "c=" + c + " holonomy err=" + num(err));
    const auto orbit = germs::enumerate_sheets(*qt.connection, ActionSpec::left(GroupKind::u1()),
                                               {qt.atlas->basepoint, Matrix::Identity(1, 1)}, 64);
    out.require(orbit.closed && static_cast<int>(orbit.sheets.size()) == q && orbit.cycle_lengths(0) == std::vector<int>{q} &&
                    orbit.cycle_lengths(1) == std::vector<int>(static_cast<std::size_t>(q), 1),
                "c=" + c + " sheets=" + std::to_string(orbit.sheets.size()));
  }
}

void criterion_9(Outcome& out) {
  for (int k : {1, 2}) {
    std::string text = testing::read_file(kScenarios + "sphere_monopole.scn");
    text.replace(text.find("k = 1"), 5, "k = " + std::to_string(k));
    const auto sc = scenario::parse(text);
    const auto& a = *sc.connections.at("A");
    const auto& atlas = *a.atlas();
    const int n = atlas.chart_index("N"), s = atlas.chart_index("S");
    // the same arcs of the equator written in either chart
    for (const auto& [t0, t1] : std::vector<std::pair<double, double>>{{0.0, 2 * kPi}, {0.3, 2.4}}) {
      const Expr tt = Expr::var("t");
      const auto in_n = manifold::PathSpec::build(atlas, "eqN", {{"N", t0, t1, {expr::cos(tt), expr::sin(tt)}}});
      const auto in_s = manifold::PathSpec::build(atlas, "eqS", {{"S", t0, t1, {expr::cos(tt), -expr::sin(tt)}}});
      const Matrix id = Matrix::Identity(1, 1);
      const Matrix tn = transport::horizontal_lift(a, in_n, id).end_value;
      const Matrix ts = transport::horizontal_lift(a, in_s, id).end_value;
      const int piece = *atlas.find_piece(n, s, in_n.start().x);
      const Matrix g0 = a.bundle()->transition(piece, in_n.start().x);
      const Matrix g1 = a.bundle()->transition(piece, in_n.end().x);
      // frames s_S = s_N g_NS, so T_S = g(end)^-1 T_N g(start)
      const double defect = (ts - g1.adjoint() * tn * g0).norm();
      out.require(defect <= 1e-7, "k=" + std::to_string(k) + " arc " + num(t0) + ".." + num(t1) + " defect=" + num(defect));
    }
    // total curvature: both unit caps by a polar midpoint rule
    const int nr = 400, nt = 64;
    double total = 0.0;
    for (int c : {n, s}) {
      for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) / nr;
        for (int j = 0; j < nt; ++j) {
          const double th = 2 * kPi * (j + 0.5) / nt;
          const auto F = bundle::curvature(a, c, vec(r * std::cos(th), r * std::sin(th)));
          total += F.at(0, 1)(0, 0).imag() * r * (1.0 / nr) * (2 * kPi / nt);
        }
      }
    }
    const double rel = std::abs(std::abs(total) - 2 * kPi * k) / (2 * kPi * k);
    out.require(rel <= 0.01, "k=" + std::to_string(k) + " total curvature=" + num(std::abs(total)) + " rel=" + num(rel));
  }
}

void criterion_10(Outcome& out) {
  const auto cases = testing::grammar_cases(BUNDLEKIT_TEST_DATA "/grammar_cases.txt");
  int valid = 0, invalid = 0, passed = 0;
  const expr::EvalContext ctx{{"x", 0.7}, {"y", -1.3}};
  for (const auto& c : cases) {
    bool ok = false;
    if (c.valid) {
      ++valid;
      try {
        const double v = expr::eval(expr::parse(c.text, {"x", "y"}), ctx);
        const double want = std::stod(c.expected);
        ok = std::abs(v - want) <= 1e-12 * std::max(1.0, std::abs(want));
      } catch (const Error&) {
      }
    } else {
      ++invalid;
      try {
        expr::parse(c.text, {"x", "y"});
      } catch (const Error& e) {
        ok = std::string(to_string(e.kind())) == c.expected;
      }
    }
    if (ok) ++passed;
    else out.detail << "[case '" << c.text << "' FAILED] ";
  }
  out.require(passed == 100 && valid == 50 && invalid == 50,
              "grammar " + std::to_string(passed) + "/" + std::to_string(cases.size()) + " (" + std::to_string(valid) +
                  " valid, " + std::to_string(invalid) + " invalid)");

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> pt(-0.9, 0.9);
  double worst = 0.0;
  int checked = 0;
  while (checked < 50) {
    const Expr e = testing::random_expr(rng, 3);
    const std::string var = checked % 2 ? "y" : "x";
    const Expr d = expr::deriv(e, var);
    const double x = pt(rng), y = pt(rng);
    try {
      const double exact = expr::eval(d, {{"x", x}, {"y", y}});
      // non-degenerate points only
      if (std::abs(exact) < 1e-2) continue;
      // fourth-order central difference
      const double h = 1e-3;
      auto f = [&](double s) {
        return expr::eval(e, {{"x", var == "x" ? x + s : x}, {"y", var == "y" ? y + s : y}});
      };
      const double fd = (8 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12 * h);
      worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
      ++checked;
    } catch (const Error&) {
      continue;
    }
  }
  out.require(worst <= 1e-6, "deriv 50 expressions max rel err=" + num(worst));
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void criterion_11(Outcome& out) {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"holonomy", "annulus_u1"},          {"sheets", "annulus_u1"},
      {"extend-section", "annulus_u1"},    {"sheets", "annulus_u1_third"},
      {"transport", "disk_flat"},          {"extend-section", "disk_flat"},
      {"extend-iso", "disk_iso"},          {"extend-iso", "disk_iso_su2"},
      {"extend-iso", "annulus_mismatch"},  {"extend-iso", "annulus_circle_phi"},
      {"extend-iso", "annulus_circle_phi_mismatch"},
      {"quotient", "torus_quotient"},      {"verify-homogeneity", "torus_quotient"},
      {"quotient", "torus_rational"},      {"sheets", "torus_rational"},
      {"holonomy", "sphere_monopole"},     {"check", "sphere_monopole"},
  };
  const std::string cli = BUNDLEKIT_CLI;
  int identical = 0;
  for (const auto& [cmd, scn] : runs) {
    const std::string base = "acc11_" + cmd + "_" + scn;
    const std::string args = " " + cmd + " " + kScenarios + scn + ".scn --seed 7 --samples 24 --steps 512";
    const int c1 = shell(cli + args + " --plot-data " + base + "_1.tsv > " + base + "_1.txt");
    const int c2 = shell(cli + args + " --plot-data " + base + "_2.tsv > " + base + "_2.txt");
    const auto r1 = testing::read_file(base + "_1.txt"), r2 = testing::read_file(base + "_2.txt");
    const auto p1 = testing::read_file(base + "_1.tsv"), p2 = testing::read_file(base + "_2.tsv");
    const bool same = c1 == c2 && !r1.empty() && r1 == r2 && p1 == p2;
    if (same) ++identical;
    else out.require(false, cmd + " " + scn + " differs (exit " + std::to_string(c1) + "/" + std::to_string(c2) + ")");
    for (const auto& suffix : {"_1.txt", "_2.txt", "_1.tsv", "_2.tsv"}) std::remove((base + suffix).c_str());
  }
  out.require(identical == static_cast<int>(runs.size()),
              std::to_string(identical) + "/" + std::to_string(runs.size()) + " reports and traces byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<void(Outcome&)>> criteria = {
      criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5, criterion_6,
      criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
  };
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only && id != only) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i](out);
    } catch (const std::exception& e) {
      out.require(false, std::string("threw: ") + e.what());
    }
    if (!out.pass) ++failures;
    std::printf("criterion %d: %s (%.2fs) %s\n", id, out.pass ? "PASS" : "FAIL", seconds_since(t0),
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
