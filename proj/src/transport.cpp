#include "bundlekit/transport.hpp"

#include "bundlekit/error.hpp"

#include <cmath>

namespace bundlekit::transport {

namespace {

int segment_steps(const manifold::PathSegment& seg, const Options& opts) {
  const double len = seg.t1 - seg.t0;
  return std::max(opts.min_steps, static_cast<int>(std::ceil(opts.steps_per_unit * len - 1e-9)));
}

struct LiftRun {
  Matrix g;
  int steps = 0;
};

LiftRun integrate(const ConnectionSpec& conn, const PathSpec& path, const Matrix& g0, const Options& opts) {
  const auto& group = conn.group();
  LiftRun run{g0, 0};
  Matrix& g = run.g;
  if (opts.trace) opts.trace->push_back({path.t_begin(), path.start().chart, path.start().x, g});
  const auto& segs = path.segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const auto& seg = segs[s];
    if (s > 0) {
      const auto& j = path.junctions()[s - 1];
      if (j.piece >= 0) g = conn.bundle()->transition(j.piece, j.x_from).adjoint() * g;
    }
    const bool moving = !seg.straight || (seg.b - seg.a).norm() > 0.0;
    if (!moving) continue;
    const int n = segment_steps(seg, opts);
    const double h = (seg.t1 - seg.t0) / n;
    auto field = [&](double t) { return conn.contract(seg.chart, seg.pos(t), seg.vel(t)); };
    Matrix a0 = field(seg.t0);
    for (int k = 0; k < n; ++k) {
      const double t = seg.t0 + (seg.t1 - seg.t0) * k / n;
      const double t_next = seg.t0 + (seg.t1 - seg.t0) * (k + 1) / n;
      const Matrix am = field(0.5 * (t + t_next));
      const Matrix a1 = field(t_next);
      const Matrix k1 = -a0 * g;
      const Matrix k2 = -am * (g + 0.5 * h * k1);
      const Matrix k3 = -am * (g + 0.5 * h * k2);
      const Matrix k4 = -a1 * (g + h * k3);
      const Matrix raw = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      g = lie::project_to_group(group, raw);
      const double defect = (raw - g).norm();
      if (!(defect <= kCollapseDefect)) {
        fail(ErrorKind::StepCollapse, "transport along '" + path.name() + "' left the group by " +
                                          std::to_string(defect) + " at t=" + std::to_string(t_next) +
                                          "; increase --steps");
      }
      a0 = a1;
      ++run.steps;
      if (opts.trace) opts.trace->push_back({t_next, seg.chart, seg.pos(t_next), g});
    }
  }
  return run;
}

void check_shape(const ConnectionSpec& conn, const Matrix& g0) {
  const int n = conn.group().matrix_size();
  if (g0.rows() != n || g0.cols() != n) fail(ErrorKind::ShapeMismatch, "initial frame has the wrong size");
  if (lie::group_defect(conn.group(), g0) > lie::kGroupTol) {
    fail(ErrorKind::MembershipViolation, "initial frame is not in " + conn.group().label());
  }
}

void check_action(const ConnectionSpec& conn, const ActionSpec& action) {
  if (action.group != conn.group()) {
    fail(ErrorKind::ShapeMismatch, "action group " + action.group.label() + " differs from bundle group " +
                                       conn.group().label());
  }
}

PathSpec chord(const ConnectionSpec& conn, int chart, const Point& a, const Point& b) {
  return PathSpec::polyline(*conn.atlas(), "chord", {{chart, a}, {chart, b}});
}

Options ray_options(const Options& opts) {
  Options o = opts;
  o.estimate_error = false;
  o.trace = nullptr;
  return o;
}

}  // namespace

TransportResult horizontal_lift(const ConnectionSpec& conn, const PathSpec& path, const Matrix& g0,
                                const Options& opts) {
  check_shape(conn, g0);
  const LiftRun full = integrate(conn, path, g0, opts);
  TransportResult r;
  r.end_value = full.g;
  r.end_chart = path.end().chart;
  r.steps = full.steps;
  r.path = path.name();
  if (opts.estimate_error) {
    Options fine = opts;
    fine.steps_per_unit *= 2;
    fine.min_steps *= 2;
    fine.trace = nullptr;
    r.est_error = (integrate(conn, path, g0, fine).g - full.g).norm();
  }
  return r;
}

TransportResult associated_transport(const ConnectionSpec& conn, const ActionSpec& action, const PathSpec& path,
                                     const FiberValue& f0, const Options& opts) {
  check_action(conn, action);
  const int n = conn.group().matrix_size();
  const Matrix id = Matrix::Identity(n, n);
  const LiftRun full = integrate(conn, path, id, opts);
  TransportResult r;
  r.end_value = bundle::associated_fiber_action(action, full.g, f0);
  r.end_chart = path.end().chart;
  r.steps = full.steps;
  r.path = path.name();
  if (opts.estimate_error) {
    Options fine = opts;
    fine.steps_per_unit *= 2;
    fine.min_steps *= 2;
    fine.trace = nullptr;
    const Matrix g = integrate(conn, path, id, fine).g;
    r.est_error = bundle::fiber_distance(bundle::associated_fiber_action(action, g, f0), r.end_value);
  }
  return r;
}

TransportResult holonomy(const ConnectionSpec& conn, const PathSpec& loop, const Options& opts) {
  const auto s = loop.start();
  const auto e = loop.end();
  if (s.chart != e.chart || (s.x - e.x).norm() > manifold::kTransitionTol) {
    fail(ErrorKind::NotALoop, "path '" + loop.name() + "' does not return to its start in chart " +
                                  conn.atlas()->chart(s.chart).id);
  }
  const int n = conn.group().matrix_size();
  return horizontal_lift(conn, loop, Matrix::Identity(n, n), opts);
}

// ---------------------------------------------------------------- sections

int LocalSectionGrid::index(const std::vector<int>& multi) const {
  int flat = 0;
  int stride = 1;
  for (int m : multi) {
    if (m < 0 || m >= res) return -1;
    flat += m * stride;
    stride *= res;
  }
  return flat;
}

std::vector<int> LocalSectionGrid::multi_index(int flat) const {
  std::vector<int> m(static_cast<std::size_t>(dim()));
  for (auto& v : m) {
    v = flat % res;
    flat /= res;
  }
  return m;
}

LocalSectionGrid grid_geometry(const manifold::Domain& domain, int chart, const Point& center, double radius, int res,
                               const ActionSpec& action) {
  if (res < 2 || !(radius > 0.0)) fail(ErrorKind::InvalidParams, "section grid needs res >= 2 and radius > 0");
  LocalSectionGrid grid;
  grid.chart = chart;
  grid.center = center;
  grid.radius = radius;
  grid.res = res;
  grid.action = action;
  const int dim = static_cast<int>(center.size());
  int total = 1;
  for (int d = 0; d < dim; ++d) total *= res;
  grid.nodes.resize(static_cast<std::size_t>(total));
  grid.inside.assign(static_cast<std::size_t>(total), false);
  grid.values.resize(static_cast<std::size_t>(total));
  const double h = grid.spacing();
  for (int i = 0; i < total; ++i) {
    const auto m = grid.multi_index(i);
    Point x(dim);
    for (int d = 0; d < dim; ++d) {
      const int k = m[static_cast<std::size_t>(d)];
      // The middle node sits exactly on the centre.
      x(d) = 2 * k == res - 1 ? center(d) : center(d) - radius + h * k;
    }
    grid.nodes[static_cast<std::size_t>(i)] = x;
    grid.inside[static_cast<std::size_t>(i)] = (x - center).norm() <= radius * (1 + 1e-12) && domain.contains(x);
  }
  return grid;
}

LocalSectionGrid radial_extend(const ConnectionSpec& conn, const ActionSpec& action, int chart, const Point& center,
                               double radius, const FiberValue& e0, int res, const Options& opts) {
  check_action(conn, action);
  const auto& domain = conn.atlas()->chart(chart).domain;
  if (!domain.contains(center)) {
    fail(ErrorKind::InvariantFailure, "extension centre lies outside chart " + conn.atlas()->chart(chart).id);
  }
  // Validates e0 against the action.
  (void)bundle::associated_fiber_action(action, Matrix::Identity(action.group.matrix_size(), action.group.matrix_size()), e0);

  LocalSectionGrid grid = grid_geometry(domain, chart, center, radius, res, action);
  grid.e0 = e0;
  const Options ray = ray_options(opts);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    if (!grid.inside[i]) continue;
    const Point& x = grid.nodes[i];
    if ((x - center).norm() == 0.0) {
      grid.values[i] = e0;
    } else {
      grid.values[i] = associated_transport(conn, action, chord(conn, chart, center, x), e0, ray).end_value;
    }
  }
  return grid;
}

FiberValue radial_value(const ConnectionSpec& conn, const LocalSectionGrid& grid, const Point& x,
                        const Options& opts) {
  if ((x - grid.center).norm() == 0.0) return grid.e0;
  return associated_transport(conn, grid.action, chord(conn, grid.chart, grid.center, x), grid.e0, ray_options(opts))
      .end_value;
}

double parallelism_check(const ConnectionSpec& conn, const LocalSectionGrid& grid, const Options& opts) {
  if (grid.res < 3) fail(ErrorKind::InvalidParams, "parallelism check needs at least 3 nodes per axis");
  const double h = grid.spacing();
  const Options step = ray_options(opts);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    if (!grid.inside[i]) continue;
    const auto m = grid.multi_index(static_cast<int>(i));
    for (int d = 0; d < grid.dim(); ++d) {
      for (int sign : {-1, 1}) {
        auto nm = m;
        nm[static_cast<std::size_t>(d)] += sign;
        const int j = grid.index(nm);
        if (j < 0 || !grid.inside[static_cast<std::size_t>(j)]) continue;
        const auto moved = associated_transport(conn, grid.action,
                                                chord(conn, grid.chart, grid.nodes[i],
                                                      grid.nodes[static_cast<std::size_t>(j)]),
                                                grid.values[i], step);
        worst = std::max(worst, bundle::fiber_distance(moved.end_value, grid.values[static_cast<std::size_t>(j)]) / h);
      }
    }
  }
  return worst;
}

double path_independence_probe(const ConnectionSpec& conn, const ActionSpec& action, const FiberValue& f0,
                               const std::vector<std::pair<PathSpec, PathSpec>>& pairs, const Options& opts) {
  const Options o = ray_options(opts);
  double worst = 0.0;
  for (const auto& [p, q] : pairs) {
    const auto ep = p.end();
    const auto eq = q.end();
    if (p.start().chart != q.start().chart || (p.start().x - q.start().x).norm() > manifold::kTransitionTol ||
        ep.chart != eq.chart || (ep.x - eq.x).norm() > manifold::kTransitionTol) {
      fail(ErrorKind::InvariantFailure, "paths '" + p.name() + "' and '" + q.name() + "' do not share endpoints");
    }
    const auto a = associated_transport(conn, action, p, f0, o);
    const auto b = associated_transport(conn, action, q, f0, o);
    worst = std::max(worst, bundle::fiber_distance(a.end_value, b.end_value));
  }
  return worst;
}

}  // namespace bundlekit::transport
