#include "bundlekit/germs.hpp"

#include "bundlekit/error.hpp"

#include <algorithm>
#include <deque>

namespace bundlekit::germs {

namespace {

using manifold::Point;
using transport::Options;

void require_basepoint(const manifold::Atlas& atlas, const GermValue& seed) {
  if (seed.base.chart != atlas.basepoint.chart || (seed.base.x - atlas.basepoint.x).norm() > manifold::kTransitionTol) {
    fail(ErrorKind::InvariantFailure, "germ must sit at the atlas basepoint");
  }
}

Options quiet(const Options& o) {
  Options q = o;
  q.estimate_error = false;
  q.trace = nullptr;
  return q;
}

int find_sheet(const std::vector<FiberValue>& sheets, const FiberValue& v, double tol) {
  for (std::size_t i = 0; i < sheets.size(); ++i) {
    if (bundle::fiber_distance(sheets[i], v) < tol) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

std::vector<int> MonodromyOrbit::cycle_lengths(std::size_t generator) const {
  const auto& img = generator_action.at(generator).image;
  std::vector<int> out;
  std::vector<bool> seen(img.size(), false);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (seen[i]) continue;
    int len = 0;
    int j = static_cast<int>(i);
    while (j >= 0 && !seen[static_cast<std::size_t>(j)]) {
      seen[static_cast<std::size_t>(j)] = true;
      ++len;
      j = img[static_cast<std::size_t>(j)];
    }
    out.push_back(len);
  }
  return out;
}

MonodromyOrbit enumerate_sheets(const ConnectionSpec& conn, const ActionSpec& action, const GermValue& seed,
                                int max_sheets, const Options& opts, double germ_tol) {
  const auto& atlas = *conn.atlas();
  require_basepoint(atlas, seed);
  if (max_sheets < 1) fail(ErrorKind::InvalidParams, "max_sheets must be at least 1");
  const Options o = quiet(opts);
  const int n = conn.group().matrix_size();
  const Matrix id = Matrix::Identity(n, n);

  // One transport per generator and direction; the loop acts on fiber values
  // at the basepoint through its holonomy.
  std::vector<Matrix> forward, backward;
  MonodromyOrbit orbit;
  orbit.seed = seed;
  for (const auto& gen : atlas.loop_generators) {
    forward.push_back(transport::holonomy(conn, gen, o).end_value);
    backward.push_back(transport::holonomy(conn, gen.reversed(atlas), o).end_value);
    orbit.generator_action.push_back({gen.name(), {}, {}});
  }
  (void)bundle::associated_fiber_action(action, id, seed.value);

  orbit.sheets.push_back(seed.value);
  orbit.closed = true;
  std::deque<int> work{0};
  while (!work.empty()) {
    const int i = work.front();
    work.pop_front();
    for (std::size_t g = 0; g < forward.size(); ++g) {
      for (int dir = 0; dir < 2; ++dir) {
        const FiberValue moved = bundle::associated_fiber_action(action, dir == 0 ? forward[g] : backward[g],
                                                                 orbit.sheets[static_cast<std::size_t>(i)]);
        int j = find_sheet(orbit.sheets, moved, germ_tol);
        if (j < 0) {
          if (static_cast<int>(orbit.sheets.size()) >= max_sheets) {
            orbit.closed = false;
          } else {
            orbit.sheets.push_back(moved);
            j = static_cast<int>(orbit.sheets.size()) - 1;
            work.push_back(j);
          }
        }
        auto& act = orbit.generator_action[g];
        auto& table = dir == 0 ? act.image : act.inverse_image;
        if (table.size() <= static_cast<std::size_t>(i)) table.resize(static_cast<std::size_t>(i) + 1, -1);
        table[static_cast<std::size_t>(i)] = j;
      }
    }
    if (!orbit.closed) break;
  }
  for (auto& act : orbit.generator_action) {
    act.image.resize(orbit.sheets.size(), -1);
    act.inverse_image.resize(orbit.sheets.size(), -1);
  }
  return orbit;
}

// ---------------------------------------------------------------- extension

GlueFailure::GlueFailure(double d, double curvature)
    : Error(ErrorKind::GlueFailure, "chart sections disagree on an overlap by " + std::to_string(d) +
                                        " (max sampled curvature norm " + std::to_string(curvature) + ")"),
      defect(d),
      max_curvature(curvature) {}

FiberValue GlobalSection::value(const ConnectionSpec& conn, int chart, const Point& x, const Options& opts) const {
  return transport::radial_value(conn, charts.at(static_cast<std::size_t>(chart)), x, opts);
}

ExtendResult global_extend(const ConnectionSpec& conn, const ActionSpec& action, const GermValue& seed,
                           const ExtendOptions& opts) {
  const auto& atlas = *conn.atlas();
  const Options o = quiet(opts.transport);
  const int charts = static_cast<int>(atlas.charts().size());

  if (!atlas.simply_connected && !atlas.loop_generators.empty()) {
    require_basepoint(atlas, seed);
    for (const auto& gen : atlas.loop_generators) {
      const Matrix hol = transport::holonomy(conn, gen, o).end_value;
      const FiberValue moved = bundle::associated_fiber_action(action, hol, seed.value);
      const double d = bundle::fiber_distance(moved, seed.value);
      if (d > opts.tol.germ) return MonodromyWitness{gen.name(), d, moved};
    }
  }

  // Anchors: the seed point in its own chart, declared anchors or domain
  // middles elsewhere.
  std::vector<Point> anchor(static_cast<std::size_t>(charts));
  for (int c = 0; c < charts; ++c) {
    anchor[static_cast<std::size_t>(c)] = static_cast<std::size_t>(c) < atlas.anchors.size()
                                              ? atlas.anchors[static_cast<std::size_t>(c)]
                                              : atlas.chart(c).domain.middle();
  }
  anchor[static_cast<std::size_t>(seed.base.chart)] = seed.base.x;

  // Spanning tree of the chart graph by breadth-first search.
  GlobalSection section;
  section.action = action;
  std::vector<FiberValue> anchor_value(static_cast<std::size_t>(charts));
  std::vector<bool> reached(static_cast<std::size_t>(charts), false);
  anchor_value[static_cast<std::size_t>(seed.base.chart)] = seed.value;
  reached[static_cast<std::size_t>(seed.base.chart)] = true;
  std::deque<int> work{seed.base.chart};
  while (!work.empty()) {
    const int a = work.front();
    work.pop_front();
    std::vector<int> order(static_cast<std::size_t>(charts));
    for (int c = 0; c < charts; ++c) order[static_cast<std::size_t>(c)] = c;
    if (opts.tree_variant % 2 == 1) std::reverse(order.begin(), order.end());
    for (int b : order) {
      if (reached[static_cast<std::size_t>(b)]) continue;
      auto pieces = atlas.pieces_between(a, b);
      if (opts.tree_variant % 2 == 1) std::reverse(pieces.begin(), pieces.end());
      for (int p : pieces) {
        const auto pts = atlas.sample_overlap(p, 4, opts.seed, 1e-3);
        if (pts.empty()) continue;
        const Point& x = pts[static_cast<std::size_t>(opts.tree_variant) % pts.size()];
        const auto path = manifold::PathSpec::polyline(
            atlas, "tree", {{a, anchor[static_cast<std::size_t>(a)]}, {a, x}, {b, atlas.apply(p, x)},
                            {b, anchor[static_cast<std::size_t>(b)]}});
        anchor_value[static_cast<std::size_t>(b)] =
            transport::associated_transport(conn, action, path, anchor_value[static_cast<std::size_t>(a)], o)
                .end_value;
        reached[static_cast<std::size_t>(b)] = true;
        section.tree.push_back({a, b, p});
        work.push_back(b);
        break;
      }
    }
  }
  for (int c = 0; c < charts; ++c) {
    if (!reached[static_cast<std::size_t>(c)]) {
      fail(ErrorKind::InvariantFailure, "chart " + atlas.chart(c).id + " is not connected to the seed chart");
    }
  }

  for (int c = 0; c < charts; ++c) {
    const auto& dom = atlas.chart(c).domain;
    const Point& x0 = anchor[static_cast<std::size_t>(c)];
    const double r = 0.98 * dom.boundary_distance(x0);
    section.charts.push_back(transport::radial_extend(conn, action, c, x0, r,
                                                      anchor_value[static_cast<std::size_t>(c)], opts.res, o));
  }

  // f_b = lambda(g_ab^-1, f_a) on every overlap piece.
  double glue = 0.0;
  for (std::size_t p = 0; p < atlas.pieces().size(); ++p) {
    const int pi = static_cast<int>(p);
    const auto& piece = atlas.piece(pi);
    for (const Point& x : atlas.sample_overlap(pi, opts.overlap_samples, opts.seed + 7, 1e-6)) {
      const FiberValue fa = section.value(conn, piece.from, x, o);
      const FiberValue fb = section.value(conn, piece.to, atlas.apply(pi, x), o);
      const Matrix g = conn.bundle()->transition(pi, x);
      glue = std::max(glue, bundle::fiber_distance(bundle::associated_fiber_action(action, g.adjoint(), fa), fb));
    }
  }
  section.overlap.add("glue", glue, opts.tol.glue);
  if (glue > opts.tol.glue) throw GlueFailure(glue, bundle::max_curvature_norm(conn, 32, opts.seed));
  return section;
}

double uniqueness_probe(const ConnectionSpec& conn, const GlobalSection& s1, const GlobalSection& s2,
                        const Options& opts) {
  if (s1.charts.size() != s2.charts.size()) fail(ErrorKind::AtlasMismatch, "sections live on different atlases");
  const Options o = quiet(opts);
  double worst = 0.0;
  for (std::size_t c = 0; c < s1.charts.size(); ++c) {
    const auto& g1 = s1.charts[c];
    const auto& g2 = s2.charts[c];
    const bool same_grid = g1.res == g2.res && g1.radius == g2.radius && g1.center == g2.center;
    for (std::size_t i = 0; i < g1.nodes.size(); ++i) {
      if (!g1.inside[i]) continue;
      const FiberValue other = same_grid && g2.inside[i] ? g2.values[i]
                                                         : s2.value(conn, static_cast<int>(c), g1.nodes[i], o);
      worst = std::max(worst, bundle::fiber_distance(g1.values[i], other));
    }
  }
  return worst;
}

double section_parallelism(const ConnectionSpec& conn, const GlobalSection& s, const Options& opts) {
  double worst = 0.0;
  for (const auto& g : s.charts) worst = std::max(worst, transport::parallelism_check(conn, g, opts));
  return worst;
}

}  // namespace bundlekit::germs
