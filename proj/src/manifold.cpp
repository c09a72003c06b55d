#include "bundlekit/manifold.hpp"

#include "bundlekit/error.hpp"

#include <algorithm>
#include <cmath>

namespace bundlekit::manifold {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0;
  double r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
  }
  return r;
}

Point run_point(const expr::Program& p, const Point& x) {
  const auto out = p(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

std::vector<Expr> jacobian_entries(const std::vector<Expr>& map, const std::vector<std::string>& vars) {
  std::vector<Expr> out;
  out.reserve(map.size() * vars.size());
  for (const auto& m : map) {
    for (const auto& v : vars) out.push_back(expr::deriv(m, v));
  }
  return out;
}

Eigen::MatrixXd run_matrix(const expr::Program& p, const Point& x, int rows, int cols) {
  const auto out = p(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = out[static_cast<std::size_t>(i * cols + j)];
  }
  return m;
}

}  // namespace

std::vector<std::string> coordinate_names(int dim) {
  std::vector<std::string> names;
  for (int i = 1; i <= dim; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

Sampler::Sampler(int dim, std::uint64_t seed) : dim_(dim), shift_(dim) {
  if (dim < 1 || dim > static_cast<int>(std::size(kPrimes))) fail(ErrorKind::InvalidParams, "sampler dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < dim; ++i) shift_(i) = u(rng);
}

Eigen::VectorXd Sampler::next() {
  Eigen::VectorXd p(dim_);
  for (int i = 0; i < dim_; ++i) {
    const double v = radical_inverse(index_, kPrimes[i]) + shift_(i);
    p(i) = v - std::floor(v);
  }
  ++index_;
  return p;
}

Domain Domain::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  Domain d;
  d.kind = Kind::Box;
  if (lo.size() != hi.size() || lo.size() == 0) fail(ErrorKind::InvalidParams, "box bounds differ in size");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(lo(i) < hi(i))) fail(ErrorKind::InvalidParams, "empty box domain");
  }
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  return d;
}

Domain Domain::ball(Eigen::VectorXd center, double radius) {
  if (!(radius > 0.0)) fail(ErrorKind::InvalidParams, "ball radius must be positive");
  Domain d;
  d.kind = Kind::Ball;
  d.center = std::move(center);
  d.radius = radius;
  return d;
}

bool Domain::contains(const Point& x, double margin) const {
  if (x.size() != dim()) return false;
  if (kind == Kind::Ball) return (x - center).norm() < radius - margin;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) > lo(i) + margin && x(i) < hi(i) - margin)) return false;
  }
  return true;
}

double Domain::boundary_distance(const Point& x) const {
  if (kind == Kind::Ball) return radius - (x - center).norm();
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) m = std::min({m, x(i) - lo(i), hi(i) - x(i)});
  return m;
}

Point Domain::middle() const { return kind == Kind::Ball ? center : Point(0.5 * (lo + hi)); }

std::optional<Point> Domain::from_unit(const Eigen::VectorXd& u, double shrink) const {
  if (kind == Kind::Box) {
    const Eigen::VectorXd c = 0.5 * (lo + hi);
    return Point(c + (u.array() - 0.5).matrix().cwiseProduct(hi - lo) * shrink);
  }
  const Eigen::VectorXd p = (2.0 * u.array() - 1.0).matrix();
  if (p.norm() >= 1.0) return std::nullopt;
  return Point(center + radius * shrink * p);
}

// ---------------------------------------------------------------- atlas

Atlas::Atlas(std::string name, int dim, std::vector<Chart> charts)
    : name_(std::move(name)), dim_(dim), charts_(std::move(charts)) {
  if (charts_.empty()) fail(ErrorKind::InvalidParams, "atlas needs at least one chart");
  for (const auto& c : charts_) {
    if (c.domain.dim() != dim_) fail(ErrorKind::InvalidParams, "chart '" + c.id + "' has wrong dimension");
  }
  for (const auto& c : charts_) anchors.push_back(c.domain.middle());
  basepoint = {0, charts_.front().domain.middle()};
}

int Atlas::chart_index(const std::string& id) const {
  for (std::size_t i = 0; i < charts_.size(); ++i) {
    if (charts_[i].id == id) return static_cast<int>(i);
  }
  fail(ErrorKind::ReferenceError, "unknown chart '" + id + "' in atlas " + name_);
}

int Atlas::add_piece(int from, int to, std::vector<Expr> map, std::vector<Expr> predicates,
                     std::vector<int> lattice) {
  if (static_cast<int>(map.size()) != dim_) fail(ErrorKind::ShapeMismatch, "transition map has wrong arity");
  const auto vars = coordinate_names(dim_);
  TransitionPiece p;
  p.from = from;
  p.to = to;
  p.map_program = expr::Program(map, vars);
  p.predicate_program = expr::Program(predicates, vars);
  p.jacobian_program = expr::Program(jacobian_entries(map, vars), vars);
  p.map = std::move(map);
  p.predicates = std::move(predicates);
  p.lattice = std::move(lattice);
  pieces_.push_back(std::move(p));
  reverse_.push_back(-1);
  return static_cast<int>(pieces_.size()) - 1;
}

void Atlas::add_piece_pair(int a, int b, std::vector<Expr> forward, std::vector<Expr> backward,
                           std::vector<Expr> fwd_predicates, std::vector<Expr> bwd_predicates,
                           std::vector<int> lattice) {
  std::vector<int> back_lattice;
  for (int v : lattice) back_lattice.push_back(-v);
  const int f = add_piece(a, b, std::move(forward), std::move(fwd_predicates), std::move(lattice));
  const int r = add_piece(b, a, std::move(backward), std::move(bwd_predicates), std::move(back_lattice));
  reverse_[static_cast<std::size_t>(f)] = r;
  reverse_[static_cast<std::size_t>(r)] = f;
}

std::vector<int> Atlas::pieces_between(int from, int to) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].from == from && pieces_[i].to == to) out.push_back(static_cast<int>(i));
  }
  return out;
}

bool Atlas::piece_applies(int i, const Point& x, double margin) const {
  const auto& p = piece(i);
  if (!chart(p.from).domain.contains(x, margin)) return false;
  const std::span<const double> in(x.data(), static_cast<std::size_t>(x.size()));
  if (p.predicate_program.num_outputs() > 0) {
    std::vector<double> vals(p.predicate_program.num_outputs());
    try {
      p.predicate_program.run(in, vals);
    } catch (const Error&) {
      return false;
    }
    for (double v : vals) {
      if (!(v > margin)) return false;
    }
  }
  Point y;
  try {
    y = run_point(p.map_program, x);
  } catch (const Error&) {
    return false;
  }
  return chart(p.to).domain.contains(y, margin);
}

Point Atlas::apply(int i, const Point& x) const { return run_point(piece(i).map_program, x); }

Eigen::MatrixXd Atlas::jacobian(int i, const Point& x) const {
  return run_matrix(piece(i).jacobian_program, x, dim_, dim_);
}

std::optional<int> Atlas::find_piece(int from, int to, const Point& x, double margin) const {
  for (int i : pieces_between(from, to)) {
    if (piece_applies(i, x, margin)) return i;
  }
  return std::nullopt;
}

std::vector<Point> Atlas::sample_overlap(int i, int count, std::uint64_t seed, double margin) const {
  const auto& p = piece(i);
  const Domain& dom = chart(p.from).domain;
  Sampler sampler(dim_, seed + static_cast<std::uint64_t>(i) * 7919u);
  std::vector<Point> out;
  const long attempts = 400L * std::max(count, 1);
  for (long k = 0; k < attempts && static_cast<int>(out.size()) < count; ++k) {
    const auto x = dom.from_unit(sampler.next());
    if (x && piece_applies(i, *x, margin)) out.push_back(*x);
  }
  return out;
}

// ---------------------------------------------------------------- paths

Point PathSegment::pos(double t) const {
  if (straight) return a + ((t - t0) / (t1 - t0)) * (b - a);
  const auto out = position(std::span<const double>(&t, 1));
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Point PathSegment::vel(double t) const {
  if (straight) return (b - a) / (t1 - t0);
  const auto out = velocity(std::span<const double>(&t, 1));
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

namespace {

PathSegment expr_segment(int chart, double t0, double t1, std::vector<Expr> coords) {
  PathSegment s;
  s.chart = chart;
  s.t0 = t0;
  s.t1 = t1;
  std::vector<Expr> vel;
  for (const auto& c : coords) vel.push_back(expr::deriv(c, "t"));
  s.position = expr::Program(coords, {"t"});
  s.velocity = expr::Program(vel, {"t"});
  s.coords = std::move(coords);
  return s;
}

PathSegment straight_segment(int chart, double t0, double t1, Point a, Point b) {
  PathSegment s;
  s.chart = chart;
  s.t0 = t0;
  s.t1 = t1;
  s.straight = true;
  s.a = std::move(a);
  s.b = std::move(b);
  return s;
}

Junction make_junction(const Atlas& atlas, const std::string& path, double t, int from, const Point& xe, int to,
                       const Point& xs) {
  Junction j;
  j.t = t;
  j.from_chart = from;
  j.to_chart = to;
  j.x_from = xe;
  j.x_to = xs;
  if (from == to) {
    if ((xe - xs).norm() > kTransitionTol) {
      fail(ErrorKind::InvariantFailure, "path '" + path + "' is discontinuous at t=" + std::to_string(t));
    }
    return j;
  }
  double best = std::numeric_limits<double>::infinity();
  for (int i : atlas.pieces_between(from, to)) {
    if (!atlas.piece_applies(i, xe)) continue;
    const double d = (atlas.apply(i, xe) - xs).norm();
    if (d < best) {
      best = d;
      j.piece = i;
    }
  }
  if (j.piece < 0 || best > kTransitionTol) {
    fail(ErrorKind::InvariantFailure, "path '" + path + "' switches from chart " + atlas.chart(from).id + " to " +
                                          atlas.chart(to).id + " at t=" + std::to_string(t) +
                                          " without a matching transition (mismatch " + std::to_string(best) + ")");
  }
  return j;
}

}  // namespace

PathSpec PathSpec::build(const Atlas& atlas, std::string name, const std::vector<SegmentDecl>& decls,
                         int samples_per_segment) {
  if (decls.empty()) fail(ErrorKind::InvariantFailure, "path '" + name + "' has no segments");
  PathSpec p;
  p.name_ = std::move(name);
  for (const auto& d : decls) {
    if (!(d.t1 > d.t0)) fail(ErrorKind::InvariantFailure, "path '" + p.name_ + "' has an empty parameter interval");
    if (static_cast<int>(d.coords.size()) != atlas.dim()) {
      fail(ErrorKind::ShapeMismatch, "path '" + p.name_ + "' segment has wrong number of coordinates");
    }
    for (const auto& c : d.coords) {
      for (const auto& v : expr::free_variables(c)) {
        if (v != "t") fail(ErrorKind::ReferenceError, "path '" + p.name_ + "' uses '" + v + "'; only t is allowed");
      }
    }
    const int chart = atlas.chart_index(d.chart);
    PathSegment seg = expr_segment(chart, d.t0, d.t1, d.coords);
    for (int k = 0; k <= samples_per_segment; ++k) {
      const double t = d.t0 + (d.t1 - d.t0) * k / samples_per_segment;
      if (!atlas.chart(chart).domain.contains(seg.pos(t))) {
        fail(ErrorKind::InvariantFailure,
             "path '" + p.name_ + "' leaves chart " + d.chart + " at t=" + std::to_string(t));
      }
    }
    p.segments_.push_back(std::move(seg));
  }
  for (std::size_t k = 0; k + 1 < p.segments_.size(); ++k) {
    const auto& s = p.segments_[k];
    const auto& n = p.segments_[k + 1];
    if (std::abs(s.t1 - n.t0) > 1e-12) {
      fail(ErrorKind::InvariantFailure, "path '" + p.name_ + "' has a gap in its parameter");
    }
    p.junctions_.push_back(make_junction(atlas, p.name_, s.t1, s.chart, s.pos(s.t1), n.chart, n.pos(n.t0)));
  }
  return p;
}

PathSpec PathSpec::polyline(const Atlas& atlas, std::string name, const std::vector<ChartPoint>& nodes) {
  if (nodes.size() < 2) fail(ErrorKind::InvariantFailure, "polyline needs two nodes");
  PathSpec p;
  p.name_ = std::move(name);
  double t = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const auto& a = nodes[k];
    const auto& b = nodes[k + 1];
    // A change of chart between consecutive nodes is a pure coordinate switch.
    if (a.chart != b.chart) continue;
    const double len = (b.x - a.x).norm();
    if (len == 0.0) continue;
    if (!p.segments_.empty()) {
      const auto& last = p.segments_.back();
      p.junctions_.push_back(make_junction(atlas, p.name_, t, last.chart, last.b, a.chart, a.x));
    } else if (k > 0) {
      fail(ErrorKind::InvariantFailure, "polyline '" + p.name_ + "' starts with a chart switch");
    }
    p.segments_.push_back(straight_segment(a.chart, t, t + len, a.x, b.x));
    t += len;
  }
  if (p.segments_.empty()) {
    // Degenerate path: a zero-length step in the first chart.
    p.segments_.push_back(straight_segment(nodes.front().chart, 0.0, 1.0, nodes.front().x, nodes.front().x));
  }
  for (const auto& s : p.segments_) {
    for (int k = 0; k <= 16; ++k) {
      if (!atlas.chart(s.chart).domain.contains(s.pos(s.t0 + (s.t1 - s.t0) * k / 16.0))) {
        fail(ErrorKind::InvariantFailure, "polyline '" + p.name_ + "' leaves chart " + atlas.chart(s.chart).id);
      }
    }
  }
  return p;
}

ChartPoint PathSpec::start() const {
  const auto& s = segments_.front();
  return {s.chart, s.pos(s.t0)};
}

ChartPoint PathSpec::end() const {
  const auto& s = segments_.back();
  return {s.chart, s.pos(s.t1)};
}

PathSpec PathSpec::reversed(const Atlas& atlas) const {
  PathSpec r;
  r.name_ = name_ + "^-1";
  const double total = t_begin() + t_end();
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    const double t0 = total - it->t1;
    const double t1 = total - it->t0;
    if (it->straight) {
      r.segments_.push_back(straight_segment(it->chart, t0, t1, it->b, it->a));
    } else {
      std::vector<Expr> coords;
      const std::map<std::string, Expr> flip{{"t", Expr(total) - Expr::var("t")}};
      for (const auto& c : it->coords) coords.push_back(expr::substitute(c, flip));
      r.segments_.push_back(expr_segment(it->chart, t0, t1, std::move(coords)));
    }
  }
  for (auto it = junctions_.rbegin(); it != junctions_.rend(); ++it) {
    Junction j;
    j.t = total - it->t;
    j.from_chart = it->to_chart;
    j.to_chart = it->from_chart;
    j.piece = it->piece >= 0 ? atlas.reverse_piece(it->piece) : -1;
    if (it->piece >= 0 && j.piece < 0) fail(ErrorKind::InvariantFailure, "transition without inverse piece");
    j.x_from = it->x_to;
    j.x_to = it->x_from;
    r.junctions_.push_back(std::move(j));
  }
  return r;
}

PathSpec PathSpec::concat(const Atlas& atlas, const PathSpec& first, const PathSpec& second) {
  const auto e = first.end();
  const auto s = second.start();
  if (e.chart != s.chart || (e.x - s.x).norm() > kTransitionTol) {
    fail(ErrorKind::InvariantFailure, "cannot concatenate '" + first.name_ + "' and '" + second.name_ + "'");
  }
  PathSpec p = first;
  p.name_ = first.name_ + "*" + second.name_;
  const double shift = first.t_end() - second.t_begin();
  const std::map<std::string, Expr> shifted{{"t", Expr::var("t") - Expr(shift)}};
  for (const auto& seg : second.segments_) {
    if (seg.straight) {
      p.segments_.push_back(straight_segment(seg.chart, seg.t0 + shift, seg.t1 + shift, seg.a, seg.b));
    } else {
      std::vector<Expr> coords;
      for (const auto& c : seg.coords) coords.push_back(expr::substitute(c, shifted));
      p.segments_.push_back(expr_segment(seg.chart, seg.t0 + shift, seg.t1 + shift, std::move(coords)));
    }
  }
  p.junctions_.push_back(make_junction(atlas, p.name_, first.t_end(), e.chart, e.x, s.chart, s.x));
  for (auto j : second.junctions_) {
    j.t += shift;
    p.junctions_.push_back(std::move(j));
  }
  return p;
}

double PathSpec::junction_defect(const Atlas& atlas) const {
  double worst = 0.0;
  for (std::size_t k = 0; k < junctions_.size(); ++k) {
    const auto& j = junctions_[k];
    const auto& s = segments_[k];
    const auto& n = segments_[k + 1];
    const Point xe = s.pos(s.t1);
    const Point xs = n.pos(n.t0);
    const Point mapped = j.piece >= 0 ? atlas.apply(j.piece, xe) : xe;
    worst = std::max(worst, (mapped - xs).norm());
  }
  return worst;
}

// ---------------------------------------------------------------- metric

Metric Metric::make(const Atlas& atlas, std::vector<std::vector<Expr>> per_chart) {
  const int n = atlas.dim();
  if (per_chart.size() != atlas.charts().size()) fail(ErrorKind::ShapeMismatch, "metric needs one entry per chart");
  Metric m;
  const auto vars = coordinate_names(n);
  for (const auto& e : per_chart) {
    if (static_cast<int>(e.size()) != n * n) fail(ErrorKind::ShapeMismatch, "metric entry count must be n*n");
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (!expr::structurally_equal(e[static_cast<std::size_t>(i * n + j)], e[static_cast<std::size_t>(j * n + i)])) {
          fail(ErrorKind::InvariantFailure, "metric is not symmetric");
        }
      }
    }
    m.programs.emplace_back(e, vars);
  }
  m.entries = std::move(per_chart);
  return m;
}

Eigen::MatrixXd Metric::at(int chart, const Point& x) const {
  const int n = static_cast<int>(x.size());
  return run_matrix(programs.at(static_cast<std::size_t>(chart)), x, n, n);
}

// ---------------------------------------------------------------- maps

ChartMap ChartMap::make(AtlasPtr source, AtlasPtr target, std::vector<int> target_chart,
                        std::vector<std::vector<Expr>> components) {
  if (target_chart.size() != source->charts().size() || components.size() != source->charts().size()) {
    fail(ErrorKind::ShapeMismatch, "map needs one assignment per source chart");
  }
  ChartMap m;
  const auto vars = coordinate_names(source->dim());
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (static_cast<int>(components[c].size()) != target->dim()) {
      fail(ErrorKind::ShapeMismatch, "map component count must equal the target dimension");
    }
    if (target_chart[c] < 0 || target_chart[c] >= static_cast<int>(target->charts().size())) {
      fail(ErrorKind::ChartAssignmentError, "map assigns a nonexistent target chart");
    }
    m.programs.emplace_back(components[c], vars);
    m.jacobians.emplace_back(jacobian_entries(components[c], vars), vars);
  }
  m.source = std::move(source);
  m.target = std::move(target);
  m.target_chart = std::move(target_chart);
  m.components = std::move(components);
  return m;
}

ChartMap ChartMap::identity(AtlasPtr atlas) {
  std::vector<int> charts;
  std::vector<std::vector<Expr>> comps;
  for (std::size_t c = 0; c < atlas->charts().size(); ++c) {
    charts.push_back(static_cast<int>(c));
    std::vector<Expr> xs;
    for (const auto& v : coordinate_names(atlas->dim())) xs.push_back(Expr::var(v));
    comps.push_back(std::move(xs));
  }
  return make(atlas, atlas, std::move(charts), std::move(comps));
}

Point ChartMap::apply(int chart, const Point& x) const {
  return run_point(programs.at(static_cast<std::size_t>(chart)), x);
}

Eigen::MatrixXd ChartMap::jacobian(int chart, const Point& x) const {
  return run_matrix(jacobians.at(static_cast<std::size_t>(chart)), x, target->dim(), source->dim());
}

ChartMap ChartMap::after(const ChartMap& first) const {
  if (first.target.get() != source.get() && first.target->name() != source->name()) {
    fail(ErrorKind::AtlasMismatch, "maps do not compose");
  }
  std::vector<int> charts;
  std::vector<std::vector<Expr>> comps;
  const auto mid_vars = coordinate_names(source->dim());
  for (std::size_t a = 0; a < first.components.size(); ++a) {
    const int b = first.target_chart[a];
    std::map<std::string, Expr> bind;
    for (std::size_t j = 0; j < mid_vars.size(); ++j) bind.emplace(mid_vars[j], first.components[a][j]);
    std::vector<Expr> c;
    for (const auto& e : components[static_cast<std::size_t>(b)]) c.push_back(expr::substitute(e, bind));
    charts.push_back(target_chart[static_cast<std::size_t>(b)]);
    comps.push_back(std::move(c));
  }
  return make(first.source, target, std::move(charts), std::move(comps));
}

void ChartMap::check_assignment(int samples, std::uint64_t seed) const {
  Sampler sampler(source->dim(), seed);
  for (std::size_t c = 0; c < source->charts().size(); ++c) {
    const Domain& dom = source->chart(static_cast<int>(c)).domain;
    const Domain& tgt = target->chart(target_chart[c]).domain;
    int taken = 0;
    for (int k = 0; k < 50 * samples && taken < samples; ++k) {
      const auto x = dom.from_unit(sampler.next(), 0.98);
      if (!x) continue;
      ++taken;
      const Point y = apply(static_cast<int>(c), *x);
      if (!tgt.contains(y)) {
        fail(ErrorKind::ChartAssignmentError, "image of a point of chart " + source->chart(static_cast<int>(c)).id +
                                                  " leaves target chart " + target->chart(target_chart[c]).id);
      }
    }
  }
}

// ---------------------------------------------------------------- checks

DefectReport validate_atlas(const Atlas& atlas, int samples, std::uint64_t seed) {
  DefectReport r;
  double inverse = 0.0;
  double triple = 0.0;
  const double margin = 1e-6;
  for (std::size_t i = 0; i < atlas.pieces().size(); ++i) {
    const int pi = static_cast<int>(i);
    const auto& p = atlas.piece(pi);
    const int rev = atlas.reverse_piece(pi);
    for (const Point& x : atlas.sample_overlap(pi, samples, seed, margin)) {
      const Point y = atlas.apply(pi, x);
      if (rev >= 0) {
        inverse = std::max(inverse, (atlas.apply(rev, y) - x).norm());
      } else if (const auto back = atlas.find_piece(p.to, p.from, y)) {
        inverse = std::max(inverse, (atlas.apply(*back, y) - x).norm());
      } else {
        inverse = std::numeric_limits<double>::infinity();
      }
      for (std::size_t k = 0; k < atlas.pieces().size(); ++k) {
        const auto& q = atlas.piece(static_cast<int>(k));
        if (q.from != p.to || q.to == p.from || q.to == p.to) continue;
        if (!atlas.piece_applies(static_cast<int>(k), y, margin)) continue;
        const Point z = atlas.apply(static_cast<int>(k), y);
        double best = std::numeric_limits<double>::infinity();
        for (int l : atlas.pieces_between(p.from, q.to)) {
          if (atlas.piece_applies(l, x)) best = std::min(best, (atlas.apply(l, x) - z).norm());
        }
        triple = std::max(triple, best);
      }
    }
  }
  r.add("transition_inverse", inverse, kTransitionTol);
  r.add("transition_triple", triple, kTripleTol);
  double junction = 0.0;
  double closure = 0.0;
  for (const auto& g : atlas.loop_generators) {
    junction = std::max(junction, g.junction_defect(atlas));
    const auto s = g.start();
    const auto e = g.end();
    const double d = s.chart == e.chart && s.chart == atlas.basepoint.chart
                         ? std::max((s.x - atlas.basepoint.x).norm(), (e.x - atlas.basepoint.x).norm())
                         : std::numeric_limits<double>::infinity();
    closure = std::max(closure, d);
  }
  r.add("path_junction", junction, kTransitionTol);
  r.add("loop_closure", closure, 1e-12);
  return r;
}

double pullback_metric_defect(const Metric& g_source, const Metric& g_target, const ChartMap& phi, int samples,
                              std::uint64_t seed) {
  Sampler sampler(phi.source->dim(), seed);
  double worst = 0.0;
  for (std::size_t c = 0; c < phi.source->charts().size(); ++c) {
    const int chart = static_cast<int>(c);
    const Domain& dom = phi.source->chart(chart).domain;
    int taken = 0;
    for (int k = 0; k < 50 * samples && taken < samples; ++k) {
      const auto x = dom.from_unit(sampler.next(), 0.98);
      if (!x) continue;
      ++taken;
      const Point y = phi.apply(chart, *x);
      const Eigen::MatrixXd j = phi.jacobian(chart, *x);
      const Eigen::MatrixXd pulled = j.transpose() * g_target.at(phi.target_chart[c], y) * j;
      worst = std::max(worst, (pulled - g_source.at(chart, *x)).norm());
    }
  }
  return worst;
}

double pullback_metric_defect(const Metric& g, const ChartMap& phi, int samples, std::uint64_t seed) {
  return pullback_metric_defect(g, g, phi, samples, seed);
}

}  // namespace bundlekit::manifold
