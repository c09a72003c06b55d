#include "bundlekit/quotient.hpp"

#include "bundlekit/error.hpp"

#include <cmath>

namespace bundlekit::quotient {

namespace {

using manifold::coordinate_names;

std::map<std::string, Expr> bindings(const std::vector<Expr>& values) {
  std::map<std::string, Expr> b;
  const auto names = coordinate_names(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) b.emplace(names[i], values[i]);
  return b;
}

std::vector<Expr> identity_map(int dim) {
  std::vector<Expr> m;
  for (const auto& v : coordinate_names(dim)) m.push_back(Expr::var(v));
  return m;
}

std::vector<Expr> compose(const std::vector<Expr>& outer, const std::vector<Expr>& inner) {
  std::vector<Expr> out;
  const auto b = bindings(inner);
  for (const auto& e : outer) out.push_back(expr::substitute(e, b));
  return out;
}

Point eval_map(const std::vector<Expr>& map, const Point& x) {
  expr::EvalContext ctx;
  const auto names = coordinate_names(static_cast<int>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) ctx[names[static_cast<std::size_t>(i)]] = x(i);
  Point y(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) y(static_cast<Eigen::Index>(i)) = expr::eval(map[i], ctx);
  return y;
}

Matrix eval_matrix(const ExprMatrix& m, const Point& x) {
  expr::EvalContext ctx;
  const auto names = coordinate_names(static_cast<int>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) ctx[names[static_cast<std::size_t>(i)]] = x(i);
  return m.eval(ctx);
}

void require_single_chart(const Cover& cover) {
  if (cover.atlas()->charts().size() != 1) {
    fail(ErrorKind::UnsupportedDeckPattern, "the cover must be a single-chart atlas");
  }
}

std::vector<Point> cover_samples(const Cover& cover, int count, std::uint64_t seed) {
  const auto& dom = cover.atlas()->chart(0).domain;
  manifold::Sampler s(cover.atlas()->dim(), seed);
  std::vector<Point> out;
  for (int k = 0; k < 100 * count && static_cast<int>(out.size()) < count; ++k) {
    if (auto x = dom.from_unit(s.next(), 0.5)) out.push_back(*x);
  }
  return out;
}

// Constant translation vector of a generator; throws when the map is not one.
Point translation_of(const DeckGenerator& g, int dim) {
  Point zero = Point::Zero(dim);
  const Point t = eval_map(g.map, zero);
  for (int k = 0; k < dim; ++k) {
    Point x = Point::Zero(dim);
    x(k) = 1.0 + 0.37 * k;
    if ((eval_map(g.map, x) - x - t).norm() > 1e-12) {
      fail(ErrorKind::UnsupportedDeckPattern, "deck generator '" + g.name + "' is not a translation");
    }
  }
  return t;
}

}  // namespace

std::vector<Expr> DeckAction::translation_inverse(const std::vector<Expr>& map) {
  const int dim = static_cast<int>(map.size());
  const auto vars = coordinate_names(dim);
  std::vector<Expr> inv;
  for (int i = 0; i < dim; ++i) {
    const Expr shift = map[static_cast<std::size_t>(i)] - Expr::var(vars[static_cast<std::size_t>(i)]);
    expr::EvalContext origin;
    for (const auto& v : vars) {
      if (!expr::deriv(shift, v).is_lit(0.0)) return {};
      origin[v] = 0.0;
    }
    inv.push_back(Expr::var(vars[static_cast<std::size_t>(i)]) - Expr(expr::eval(shift, origin)));
  }
  return inv;
}

DeckElement compose_word(const DeckAction& deck, int dim, const Word& word) {
  const int n = deck.generators.empty() ? 1 : deck.generators.front().lift.rows();
  DeckElement cur{identity_map(dim), ExprMatrix::identity(n)};
  // Right to left: the rightmost letter acts first.
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    const auto& [index, power] = *it;
    if (index < 0 || index >= static_cast<int>(deck.generators.size())) {
      fail(ErrorKind::ReferenceError, "relation word names an unknown generator");
    }
    const auto& g = deck.generators[static_cast<std::size_t>(index)];
    std::vector<Expr> letter_map;
    ExprMatrix letter_lift;
    if (power > 0) {
      letter_map = g.map;
      letter_lift = g.lift;
    } else {
      if (g.inverse.empty()) {
        fail(ErrorKind::UnsupportedDeckPattern, "generator '" + g.name + "' has no declared inverse");
      }
      letter_map = g.inverse;
      // j_{g^-1}(x) = j_g(g^-1 x)^-1
      letter_lift = g.lift.substitute(bindings(g.inverse)).adjoint();
    }
    // j_{l c}(x) = j_l(c x) j_c(x)
    cur.lift = letter_lift.substitute(bindings(cur.map)) * cur.lift;
    cur.map = compose(letter_map, cur.map);
  }
  return cur;
}

DeckElement lattice_element(const DeckAction& deck, int dim, const std::vector<int>& m) {
  Word w;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (int k = 0; k < std::abs(m[i]); ++k) w.push_back({static_cast<int>(i), m[i] > 0 ? 1 : -1});
  }
  return compose_word(deck, dim, w);
}

DefectReport check_lift_axioms(const Cover& cover, const DeckAction& deck, int samples, std::uint64_t seed) {
  require_single_chart(cover);
  const auto& atlas = cover.atlas();
  const int dim = atlas->dim();
  const auto vars = coordinate_names(dim);
  const auto pts = cover_samples(cover, samples, seed);
  const auto& conn = *cover.connection;
  DefectReport r;
  for (const auto& g : deck.generators) {
    if (g.lift.rows() != conn.group().matrix_size()) fail(ErrorKind::ShapeMismatch, "deck lift has the wrong size");
    const auto gm = manifold::ChartMap::make(atlas, atlas, {0}, {g.map});
    r.add("isometry_" + g.name, manifold::pullback_metric_defect(cover.metric, gm, samples, seed), kIsometryTol);
    std::vector<ExprMatrix> parts{g.lift};
    for (const auto& v : vars) parts.push_back(g.lift.deriv(v));
    const expr::MatrixProgram prog(parts, vars);
    double worst = 0.0;
    for (const Point& x : pts) {
      const auto jv = prog(std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
      const Matrix& j = jv[0];
      const Point gx = gm.apply(0, x);
      const Eigen::MatrixXd J = gm.jacobian(0, x);
      const auto b_gx = conn.components(0, gx);
      const auto b_x = conn.components(0, x);
      for (int i = 0; i < dim; ++i) {
        Matrix pulled = Matrix::Zero(j.rows(), j.cols());
        for (int k = 0; k < dim; ++k) pulled += J(k, i) * b_gx[static_cast<std::size_t>(k)];
        const Matrix lhs = j.adjoint() * pulled * j + j.adjoint() * jv[static_cast<std::size_t>(i) + 1];
        worst = std::max(worst, (lhs - b_x[static_cast<std::size_t>(i)]).norm());
      }
    }
    r.add("invariance_" + g.name, worst, kQuotTol);
  }
  for (const auto& [name, word] : deck.relations) {
    const auto el = compose_word(deck, dim, word);
    double worst = 0.0;
    for (const Point& x : pts) {
      const Matrix j = eval_matrix(el.lift, x);
      worst = std::max({worst, (eval_map(el.map, x) - x).norm(),
                        (j - Matrix::Identity(j.rows(), j.cols())).norm()});
    }
    r.add("relation_" + name, worst, kRelationTol);
  }
  for (std::size_t a = 0; a < deck.generators.size(); ++a) {
    for (std::size_t b = a + 1; b < deck.generators.size(); ++b) {
      const auto ab = compose_word(deck, dim, {{static_cast<int>(a), 1}, {static_cast<int>(b), 1}});
      const auto ba = compose_word(deck, dim, {{static_cast<int>(b), 1}, {static_cast<int>(a), 1}});
      bool commute = true;
      double worst = 0.0;
      for (const Point& x : pts) {
        if ((eval_map(ab.map, x) - eval_map(ba.map, x)).norm() > 1e-12) commute = false;
        worst = std::max(worst, (eval_matrix(ab.lift, x) - eval_matrix(ba.lift, x)).norm());
      }
      if (commute) {
        r.add("morphism_" + deck.generators[a].name + "_" + deck.generators[b].name, worst, kMorphismTol);
      }
    }
  }
  return r;
}

QuotientTriple build_quotient(const Cover& cover, const DeckAction& deck, AtlasPtr target, double quot_tol) {
  require_single_chart(cover);
  const int dim = cover.atlas()->dim();
  if (target->dim() != dim) fail(ErrorKind::UnsupportedDeckPattern, "quotient and cover dimensions differ");
  // Catalog layouts with a known fundamental-domain chart structure.
  std::vector<Point> expected;
  if (target->name() == "Torus") {
    expected = {Point::Unit(2, 0), Point::Unit(2, 1)};
  } else if (target->name() == "Annulus") {
    expected = {2 * std::numbers::pi * Point::Unit(2, 1)};
  } else {
    fail(ErrorKind::UnsupportedDeckPattern, "no deck layout for quotient " + target->name());
  }
  if (deck.generators.size() != expected.size()) {
    fail(ErrorKind::UnsupportedDeckPattern, target->name() + " needs " + std::to_string(expected.size()) +
                                                " deck generators");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if ((translation_of(deck.generators[i], dim) - expected[i]).norm() > 1e-12) {
      fail(ErrorKind::UnsupportedDeckPattern, "deck generator '" + deck.generators[i].name +
                                                  "' does not match the " + target->name() + " lattice");
    }
  }

  const auto axioms = check_lift_axioms(cover, deck);
  for (const auto& c : axioms.checks) {
    const double tol = c.name.rfind("invariance_", 0) == 0 ? quot_tol : c.tol;
    if (c.value > tol) {
      fail(ErrorKind::LiftDefectTooLarge, "lift axiom " + c.name + " fails with defect " + std::to_string(c.value));
    }
  }

  const auto& conn = *cover.connection;
  std::vector<std::optional<ExprMatrix>> cocycle;
  for (std::size_t p = 0; p < target->pieces().size(); ++p) {
    const auto& piece = target->piece(static_cast<int>(p));
    std::vector<int> m = piece.lattice;
    if (m.size() > deck.generators.size()) fail(ErrorKind::UnsupportedDeckPattern, "piece lattice is too long");
    m.resize(deck.generators.size(), 0);
    Point shift = Point::Zero(dim);
    for (std::size_t i = 0; i < m.size(); ++i) shift += m[i] * expected[i];
    const auto pts = target->sample_overlap(static_cast<int>(p), 4, 3);
    for (const Point& x : pts) {
      if ((target->apply(static_cast<int>(p), x) - x - shift).norm() > 1e-9) {
        fail(ErrorKind::UnsupportedDeckPattern, "transition piece is not the declared deck translation");
      }
    }
    cocycle.push_back(lattice_element(deck, dim, m).lift.adjoint());
  }
  auto bundle = bundle::BundleSpec::make(target, conn.group(), std::move(cocycle));
  std::vector<std::vector<ExprMatrix>> forms(target->charts().size(), conn.form(0));
  auto connection = bundle::ConnectionSpec::make(bundle, std::move(forms));
  for (const auto& rep : {bundle->validate(32), connection->validate(32)}) {
    for (const auto& c : rep.checks) {
      if (!c.pass()) {
        fail(ErrorKind::InvariantFailure, "quotient " + c.name + " defect " + std::to_string(c.value));
      }
    }
  }
  Metric metric = Metric::make(*target, std::vector<std::vector<Expr>>(target->charts().size(), cover.metric.entries[0]));
  return {target, std::move(metric), bundle, connection};
}

DefectReport verify_quotient_roundtrip(const QuotientTriple& qt, const Cover& cover, const DeckAction& deck,
                                       int samples, std::uint64_t seed) {
  require_single_chart(cover);
  const auto& quot = *qt.atlas;
  const int dim = quot.dim();
  const std::size_t k = deck.generators.size();
  std::vector<Point> t;
  for (const auto& g : deck.generators) t.push_back(translation_of(g, dim));

  // Translates (alpha, m) of the quotient charts, m in {-1, 0, 1}^k.
  std::vector<std::vector<int>> shifts{{}};
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::vector<int>> next;
    for (const auto& s : shifts) {
      for (int v : {-1, 0, 1}) {
        auto n = s;
        n.push_back(v);
        next.push_back(std::move(n));
      }
    }
    shifts = std::move(next);
  }
  std::vector<manifold::Chart> charts;
  std::vector<int> owner;
  std::vector<std::vector<int>> chart_shift;
  std::vector<Point> offset;
  for (std::size_t c = 0; c < quot.charts().size(); ++c) {
    const auto& dom = quot.chart(static_cast<int>(c)).domain;
    if (dom.kind != manifold::Domain::Kind::Box) fail(ErrorKind::UnsupportedDeckPattern, "quotient charts must be boxes");
    for (const auto& m : shifts) {
      Point off = Point::Zero(dim);
      std::string id = quot.chart(static_cast<int>(c)).id + "@";
      for (std::size_t i = 0; i < k; ++i) {
        off += m[i] * t[i];
        id += (i ? "," : "") + std::to_string(m[i]);
      }
      charts.push_back({id, manifold::Domain::box(dom.lo + off, dom.hi + off)});
      owner.push_back(static_cast<int>(c));
      chart_shift.push_back(m);
      offset.push_back(off);
    }
  }
  auto patches = std::make_shared<manifold::Atlas>(quot.name() + "-cover", dim, charts);
  for (std::size_t a = 0; a < charts.size(); ++a) {
    for (std::size_t b = a + 1; b < charts.size(); ++b) {
      const auto& da = charts[a].domain;
      const auto& db = charts[b].domain;
      bool meet = true;
      for (int d = 0; d < dim; ++d) meet = meet && std::max(da.lo(d), db.lo(d)) < std::min(da.hi(d), db.hi(d)) - 1e-9;
      if (meet) patches->add_piece_pair(static_cast<int>(a), static_cast<int>(b), identity_map(dim), identity_map(dim));
    }
  }
  const auto vars = coordinate_names(dim);
  std::vector<std::vector<Expr>> comps;
  for (const auto& off : offset) {
    std::vector<Expr> c;
    for (int d = 0; d < dim; ++d) c.push_back(Expr::var(vars[static_cast<std::size_t>(d)]) - Expr(off(d)));
    comps.push_back(std::move(c));
  }
  const auto pi = manifold::ChartMap::make(patches, qt.atlas, owner, comps);
  const auto pulled = bundle::pullback_bundle(*qt.bundle, pi);
  const auto pulled_conn = bundle::pullback_connection(*qt.connection, pi, pulled);

  // (Q, B) on the patches and the frame change k = j_m(x - m).
  const auto& conn = *cover.connection;
  const auto trivial = bundle::BundleSpec::trivial(patches, conn.group());
  const auto b_patch = bundle::ConnectionSpec::make(trivial, std::vector<std::vector<ExprMatrix>>(charts.size(), conn.form(0)));
  std::vector<ExprMatrix> ks;
  for (std::size_t c = 0; c < charts.size(); ++c) {
    ks.push_back(lattice_element(deck, dim, chart_shift[c]).lift.substitute(bindings(comps[c])));
  }
  const auto kmap = bundle::GaugeTransform::make(trivial, ks);
  const auto gauged = bundle::apply_gauge(*b_patch, *kmap);

  double cocycle = 0.0;
  for (std::size_t p = 0; p < patches->pieces().size(); ++p) {
    const int pidx = static_cast<int>(p);
    const auto& piece = patches->piece(pidx);
    for (const Point& x : patches->sample_overlap(pidx, samples, seed, 1e-6)) {
      const Matrix g = pulled->transition(pidx, x);
      const Matrix expected = kmap->value(piece.from, x).adjoint() * kmap->value(piece.to, x);
      cocycle = std::max(cocycle, (g - expected).norm());
    }
  }
  double connection = 0.0;
  for (std::size_t c = 0; c < charts.size(); ++c) {
    manifold::Sampler s(dim, seed + c);
    for (int n = 0; n < samples; ++n) {
      const auto x = charts[c].domain.from_unit(s.next(), 0.98);
      if (!x) continue;
      const auto lhs = gauged->components(static_cast<int>(c), *x);
      const auto rhs = pulled_conn->components(static_cast<int>(c), *x);
      for (std::size_t i = 0; i < lhs.size(); ++i) connection = std::max(connection, (lhs[i] - rhs[i]).norm());
    }
  }
  DefectReport r;
  r.add("roundtrip_cocycle", cocycle, kRoundtripTol);
  r.add("roundtrip_connection", connection, kRoundtripTol);
  return r;
}

Matrix twisted_cover_transport(const Cover& cover, const DeckAction& deck, int generator, const Point& x0,
                               const transport::Options& opts) {
  require_single_chart(cover);
  const auto& g = deck.generators.at(static_cast<std::size_t>(generator));
  const Point gx = eval_map(g.map, x0);
  const auto path = manifold::PathSpec::polyline(*cover.atlas(), g.name, {{0, x0}, {0, gx}});
  const int n = cover.connection->group().matrix_size();
  transport::Options o = opts;
  o.estimate_error = false;
  const Matrix lift = transport::horizontal_lift(*cover.connection, path, Matrix::Identity(n, n), o).end_value;
  return eval_matrix(g.lift, x0).adjoint() * lift;
}

DefectReport check_local_homogeneity(const QuotientTriple& qt, const HomogeneityCandidate& cand, int samples,
                                     const intertwiner::CheckOptions& opts) {
  const int dim = qt.atlas->dim();
  if (static_cast<int>(cand.iso.size()) != dim) fail(ErrorKind::ShapeMismatch, "candidate isometry has wrong arity");
  if (!qt.atlas->chart(cand.x.chart).domain.contains(cand.x.x) ||
      qt.atlas->chart(cand.x.chart).domain.boundary_distance(cand.x.x) < cand.radius) {
    fail(ErrorKind::ChartAssignmentError, "candidate ball leaves its chart");
  }
  auto ball = std::make_shared<manifold::Atlas>(
      "Ball", dim, std::vector<manifold::Chart>{{"U", manifold::Domain::ball(cand.x.x, cand.radius)}});
  ball->simply_connected = true;
  ball->basepoint = {0, cand.x.x};
  const auto inclusion = manifold::ChartMap::make(ball, qt.atlas, {cand.x.chart}, {identity_map(dim)});
  const auto iso = manifold::ChartMap::make(ball, qt.atlas, {cand.x_prime.chart}, {cand.iso});
  iso.check_assignment(samples, 5);
  if ((iso.apply(0, cand.x.x) - cand.x_prime.x).norm() > 1e-9) {
    fail(ErrorKind::InvariantFailure, "candidate isometry does not send x to x'");
  }
  const Metric ball_metric = Metric::make(*ball, {qt.metric.entries[static_cast<std::size_t>(cand.x.chart)]});
  const double isometry = manifold::pullback_metric_defect(ball_metric, qt.metric, iso, samples);

  const auto a_u = bundle::pullback_connection(*qt.connection, inclusion);
  const auto a_u_prime = bundle::pullback_connection(*qt.connection, iso);
  const auto data = intertwiner::IntertwinerData::from_exprs(a_u->bundle(), a_u_prime->bundle(), {cand.phi},
                                                             {{0, cand.x.x, cand.radius}});
  const auto rep = intertwiner::check_connection_intertwine(data, *a_u, *a_u_prime, opts);
  DefectReport r;
  r.add("isometry", isometry, kIsometryTol);
  r.add("connection", rep.parallel_defect, opts.tol);
  r.add("curvature_match", rep.curvature_match_defect, opts.tol);
  return r;
}

}  // namespace bundlekit::quotient
