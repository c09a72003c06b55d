#include "bundlekit/intertwiner.hpp"

#include "bundlekit/error.hpp"

#include <cmath>

namespace bundlekit::intertwiner {

namespace {

using bundle::ActionSpec;
using transport::LocalSectionGrid;

transport::Options quiet(const transport::Options& o) {
  transport::Options q = o;
  q.estimate_error = false;
  q.trace = nullptr;
  return q;
}

void require_same_bundle(const BundlePtr& declared, const ConnectionSpec& conn, const char* which) {
  if (declared.get() != conn.bundle().get() &&
      (declared->atlas().get() != conn.atlas().get() || declared->group() != conn.group())) {
    fail(ErrorKind::AtlasMismatch, std::string("connection ") + which + " does not live on the intertwiner's bundle");
  }
}

double curvature_mismatch(const Matrix& u, const bundle::CurvatureValue& f, const bundle::CurvatureValue& fp) {
  const int n = static_cast<int>(f.x.size());
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) worst = std::max(worst, (u.adjoint() * f.at(i, j) * u - fp.at(i, j)).norm());
  }
  return worst;
}

// Multilinear interpolation inside the grid cell holding x; exact at nodes.
std::optional<Matrix> grid_lookup(const LocalSectionGrid& g, const Point& x) {
  const int dim = g.dim();
  const double h = g.spacing();
  std::vector<int> base(static_cast<std::size_t>(dim));
  std::vector<double> frac(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) {
    const double s = (x(d) - (g.center(d) - g.radius)) / h;
    if (s < -1e-9 || s > g.res - 1 + 1e-9) return std::nullopt;
    int k = static_cast<int>(std::floor(s + 1e-9));
    k = std::clamp(k, 0, g.res - 2);
    base[static_cast<std::size_t>(d)] = k;
    frac[static_cast<std::size_t>(d)] = std::clamp(s - k, 0.0, 1.0);
  }
  Matrix acc;
  double weight = 0.0;
  for (int corner = 0; corner < (1 << dim); ++corner) {
    auto m = base;
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      const bool up = (corner >> d) & 1;
      m[static_cast<std::size_t>(d)] += up;
      w *= up ? frac[static_cast<std::size_t>(d)] : 1.0 - frac[static_cast<std::size_t>(d)];
    }
    if (w < 1e-12) continue;
    const int i = g.index(m);
    if (i < 0 || !g.inside[static_cast<std::size_t>(i)]) return std::nullopt;
    const Matrix& v = g.values[static_cast<std::size_t>(i)];
    acc = acc.size() == 0 ? Matrix(w * v) : Matrix(acc + w * v);
    weight += w;
  }
  if (weight == 0.0) return std::nullopt;
  return Matrix(acc / weight);
}

}  // namespace

bool Region::contains(const manifold::Atlas& atlas, int c, const Point& x) const {
  if (c != chart || !atlas.chart(c).domain.contains(x)) return false;
  return std::isinf(radius) || (x - center).norm() < radius;
}

std::pair<Point, double> region_ball(const manifold::Atlas& atlas, const Region& r) {
  const auto& dom = atlas.chart(r.chart).domain;
  if (std::isinf(r.radius)) {
    Point c = r.center.size() > 0 ? r.center
              : static_cast<std::size_t>(r.chart) < atlas.anchors.size()
                  ? atlas.anchors[static_cast<std::size_t>(r.chart)]
                  : dom.middle();
    if (r.center.size() == 0 && atlas.basepoint.chart == r.chart) c = atlas.basepoint.x;
    return {c, 0.98 * dom.boundary_distance(c)};
  }
  if (!dom.contains(r.center) || dom.boundary_distance(r.center) < r.radius * (1 - 1e-12)) {
    fail(ErrorKind::InvariantFailure, "intertwiner ball leaves chart " + atlas.chart(r.chart).id);
  }
  return {r.center, r.radius};
}

// ---------------------------------------------------------------- data

IntertwinerData IntertwinerData::from_exprs(BundlePtr p, BundlePtr p_prime, std::vector<std::optional<ExprMatrix>> u,
                                            std::vector<Region> regions) {
  const auto& atlas = *p->atlas();
  if (u.size() != atlas.charts().size()) fail(ErrorKind::ShapeMismatch, "intertwiner needs one entry per chart");
  if (p->group() != p_prime->group()) fail(ErrorKind::AtlasMismatch, "intertwined bundles have different groups");
  const int n = p->group().matrix_size();
  auto programs = std::make_shared<std::vector<std::optional<expr::MatrixProgram>>>();
  for (const auto& m : u) {
    if (!m) {
      programs->emplace_back();
      continue;
    }
    if (m->rows() != n || m->cols() != n) fail(ErrorKind::ShapeMismatch, "intertwiner value has the wrong size");
    programs->emplace_back(expr::MatrixProgram({*m}, manifold::coordinate_names(atlas.dim())));
  }
  IntertwinerData d;
  d.p_ = std::move(p);
  d.p_prime_ = std::move(p_prime);
  d.exprs_ = std::move(u);
  d.regions_ = std::move(regions);
  d.eval_ = [programs](int chart, const Point& x) -> Matrix {
    const auto& prog = programs->at(static_cast<std::size_t>(chart));
    if (!prog) fail(ErrorKind::ReferenceError, "intertwiner is undefined on this chart");
    return (*prog)(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))).front();
  };
  if (d.regions_.empty()) {
    for (std::size_t c = 0; c < d.exprs_.size(); ++c) {
      if (d.exprs_[c]) d.regions_.push_back({static_cast<int>(c), {}});
    }
  }
  return d;
}

IntertwinerData IntertwinerData::from_evaluator(BundlePtr p, BundlePtr p_prime, Evaluator u,
                                                std::vector<Region> regions) {
  if (p->group() != p_prime->group()) fail(ErrorKind::AtlasMismatch, "intertwined bundles have different groups");
  IntertwinerData d;
  d.exprs_.resize(p->atlas()->charts().size());
  d.p_ = std::move(p);
  d.p_prime_ = std::move(p_prime);
  d.eval_ = std::move(u);
  d.regions_ = std::move(regions);
  return d;
}

IntertwinerData IntertwinerData::identity(BundlePtr p, std::vector<Region> regions) {
  const int n = p->group().matrix_size();
  std::vector<std::optional<ExprMatrix>> u(p->atlas()->charts().size(), ExprMatrix::identity(n));
  return from_exprs(p, p, std::move(u), std::move(regions));
}

IntertwinerData IntertwinerData::rebind(BundlePtr p, BundlePtr p_prime) const {
  IntertwinerData d = *this;
  d.p_ = std::move(p);
  d.p_prime_ = std::move(p_prime);
  return d;
}

bool IntertwinerData::defined_on(int chart) const {
  for (const auto& r : regions_) {
    if (r.chart == chart) return true;
  }
  return false;
}

Matrix IntertwinerData::value(int chart, const Point& x) const { return eval_(chart, x); }

DefectReport IntertwinerData::validate(int samples, std::uint64_t seed) const {
  const auto& atlas = *p_->atlas();
  if (p_prime_->atlas().get() != p_->atlas().get()) {
    fail(ErrorKind::AtlasMismatch, "id-covering intertwiner needs both bundles on one atlas");
  }
  auto in_domain = [&](int c, const Point& x) {
    for (const auto& r : regions_) {
      if (r.contains(atlas, c, x)) return true;
    }
    return false;
  };
  double membership = 0.0;
  for (const auto& r : regions_) {
    const auto [c, radius] = region_ball(atlas, r);
    manifold::Sampler s(atlas.dim(), seed + static_cast<std::uint64_t>(r.chart));
    const auto ball = manifold::Domain::ball(c, radius);
    for (int k = 0; k < samples; ++k) {
      if (auto x = ball.from_unit(s.next())) {
        membership = std::max(membership, lie::group_defect(p_->group(), value(r.chart, *x)));
      }
    }
  }
  double overlap = 0.0;
  for (std::size_t i = 0; i < atlas.pieces().size(); ++i) {
    const int pi = static_cast<int>(i);
    const auto& piece = atlas.piece(pi);
    if (!defined_on(piece.from) || !defined_on(piece.to)) continue;
    for (const Point& x : atlas.sample_overlap(pi, samples, seed, 1e-6)) {
      const Point y = atlas.apply(pi, x);
      if (!in_domain(piece.from, x) || !in_domain(piece.to, y)) continue;
      const Matrix expected = p_->transition(pi, x).adjoint() * value(piece.from, x) * p_prime_->transition(pi, x);
      overlap = std::max(overlap, (value(piece.to, y) - expected).norm());
    }
  }
  DefectReport r;
  r.add("intertwiner_membership", membership, lie::kGroupTol);
  r.add("intertwiner_overlap", overlap, kOverlapTol);
  return r;
}

// ---------------------------------------------------------------- sections

std::vector<LocalSectionGrid> iso_to_section(const IntertwinerData& phi, int res) {
  const auto report = phi.validate(32);
  if (report.value("intertwiner_overlap") > kOverlapTol) {
    fail(ErrorKind::OverlapViolation, "intertwiner violates u_b = g_ab^-1 u_a g'_ab by " +
                                          std::to_string(report.value("intertwiner_overlap")));
  }
  const auto& atlas = *phi.bundle()->atlas();
  const auto action = ActionSpec::tau(phi.bundle()->group());
  std::vector<LocalSectionGrid> grids;
  for (const auto& r : phi.regions()) {
    const auto [c, radius] = region_ball(atlas, r);
    auto g = transport::grid_geometry(atlas.chart(r.chart).domain, r.chart, c, radius, res, action);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (g.inside[i]) g.values[i] = phi.value(r.chart, g.nodes[i]);
    }
    g.e0 = phi.value(r.chart, c);
    grids.push_back(std::move(g));
  }
  return grids;
}

IntertwinerData section_to_iso(BundlePtr p, BundlePtr p_prime, const std::vector<LocalSectionGrid>& grids) {
  std::vector<Region> regions;
  for (const auto& g : grids) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (g.inside[i] && lie::group_defect(p->group(), g.values[i]) > lie::kGroupTol) {
        fail(ErrorKind::ValueNotInGroup, "section value is not in " + p->group().label());
      }
    }
    regions.push_back({g.chart, g.center, g.radius});
  }
  const auto group = p->group();
  auto eval = [grids, group](int chart, const Point& x) -> Matrix {
    for (const auto& g : grids) {
      if (g.chart != chart) continue;
      if (auto v = grid_lookup(g, x)) return lie::project_to_group(group, *v);
    }
    fail(ErrorKind::ReferenceError, "point outside every grid of the section");
  };
  return IntertwinerData::from_evaluator(std::move(p), std::move(p_prime), eval, std::move(regions));
}

// ---------------------------------------------------------------- criterion

IntertwineReport check_connection_intertwine(const IntertwinerData& phi, const ConnectionSpec& a,
                                             const ConnectionSpec& a_prime, const CheckOptions& opts) {
  require_same_bundle(phi.bundle(), a, "A");
  require_same_bundle(phi.bundle_prime(), a_prime, "A'");
  const auto product = bundle::product_bundle(a_prime, a);
  const auto grids = iso_to_section(phi, opts.res);
  const transport::Options o = quiet(opts.transport);
  IntertwineReport r;
  r.tol = opts.tol;
  r.regions = static_cast<int>(grids.size());
  for (const auto& g : grids) {
    r.parallel_defect = std::max(r.parallel_defect, transport::parallelism_check(*product.connection, g, o));
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (!g.inside[i]) continue;
      ++r.nodes;
      const auto f = bundle::curvature(a, g.chart, g.nodes[i]);
      const auto fp = bundle::curvature(a_prime, g.chart, g.nodes[i]);
      r.curvature_match_defect = std::max(r.curvature_match_defect, curvature_mismatch(g.values[i], f, fp));
    }
  }
  return r;
}

ExtendIsoResult extend_iso(const IntertwinerData& phi_local, const ConnectionSpec& a, const ConnectionSpec& a_prime,
                           const germs::ExtendOptions& opts, double intertwine_tol) {
  if (phi_local.regions().empty()) fail(ErrorKind::InvariantFailure, "local intertwiner has no domain");
  const auto local = check_connection_intertwine(phi_local, a, a_prime, {opts.transport, opts.res, intertwine_tol});
  if (!local.pass()) {
    fail(ErrorKind::InvariantFailure, "local intertwiner is not parallel (defect " +
                                          std::to_string(local.parallel_defect) + ")");
  }
  const auto& atlas = *a.atlas();
  const auto product = bundle::product_bundle(a_prime, a);
  const auto action = ActionSpec::tau(a.group());
  const transport::Options o = quiet(opts.transport);
  const Region& r0 = phi_local.regions().front();
  const auto [center, radius] = region_ball(atlas, r0);
  germs::GermValue seed{{r0.chart, center}, phi_local.value(r0.chart, center)};
  // Loop generators start at the basepoint, so the germ moves there when the
  // atlas needs a monodromy check; otherwise it moves to the chart anchor so
  // that the radial grid covers as much of the chart as possible.
  manifold::ChartPoint target = atlas.basepoint;
  if (atlas.simply_connected || atlas.loop_generators.empty()) {
    const auto c = static_cast<std::size_t>(r0.chart);
    target = {r0.chart, c < atlas.anchors.size() ? atlas.anchors[c] : atlas.chart(r0.chart).domain.middle()};
  } else if (atlas.basepoint.chart != r0.chart) {
    fail(ErrorKind::InvariantFailure, "local intertwiner must live in the basepoint chart");
  }
  if ((seed.base.x - target.x).norm() > manifold::kTransitionTol) {
    const auto path = manifold::PathSpec::polyline(atlas, "to-anchor", {{r0.chart, center}, target});
    seed = {target, transport::associated_transport(*product.connection, action, path, seed.value, o).end_value};
  }
  auto result = germs::global_extend(*product.connection, action, seed, opts);
  if (auto* w = std::get_if<germs::MonodromyWitness>(&result)) return *w;

  auto section = std::get<germs::GlobalSection>(std::move(result));
  auto conn = product.connection;
  auto shared = std::make_shared<germs::GlobalSection>(section);
  auto eval = [conn, shared, o](int chart, const Point& x) -> Matrix { return shared->value(*conn, chart, x, o); };
  std::vector<Region> regions;
  for (const auto& g : section.charts) regions.push_back({g.chart, g.center});
  ExtendedIso out{IntertwinerData::from_evaluator(a.bundle(), a_prime.bundle(), eval, std::move(regions)),
                  std::move(section), 0.0};
  for (const auto& g : iso_to_section(phi_local, opts.res)) {
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (!g.inside[i]) continue;
      out.local_match = std::max(out.local_match, bundle::fiber_distance(out.data.value(g.chart, g.nodes[i]), g.values[i]));
    }
  }
  return out;
}

// ---------------------------------------------------------------- phi-covering

ReducedProblem reduce_to_id_covering(const PhiCoveringData& data, const ConnectionSpec& a_prime) {
  require_same_bundle(data.iso.bundle_prime(), a_prime, "A'");
  auto pulled = bundle::pullback_bundle(*a_prime.bundle(), data.phi);
  auto conn = bundle::pullback_connection(a_prime, data.phi, pulled);
  return {pulled, conn, data.iso.rebind(data.iso.bundle(), pulled)};
}

IntertwineReport phi_covering_check(const PhiCoveringData& data, const ConnectionSpec& a,
                                    const ConnectionSpec& a_prime, const CheckOptions& opts) {
  require_same_bundle(data.iso.bundle(), a, "A");
  require_same_bundle(data.iso.bundle_prime(), a_prime, "A'");
  const auto& src = *data.phi.source;
  const auto& tgt = *data.phi.target;
  const transport::Options o = quiet(opts.transport);
  const int n = a.group().matrix_size();
  const Matrix id = Matrix::Identity(n, n);
  IntertwineReport r;
  r.tol = opts.tol;
  for (const auto& region : data.iso.regions()) {
    ++r.regions;
    const int c = region.chart;
    const int b = data.phi.target_chart[static_cast<std::size_t>(c)];
    const auto [center, radius] = region_ball(src, region);
    auto grid = transport::grid_geometry(src.chart(c).domain, c, center, radius, opts.res,
                                         ActionSpec::tau(a.group()));
    const double h = grid.spacing();
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      if (grid.inside[i]) grid.values[i] = data.iso.value(c, grid.nodes[i]);
    }
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      if (!grid.inside[i]) continue;
      ++r.nodes;
      const Point& x = grid.nodes[i];
      const Matrix& u = grid.values[i];
      const auto m = grid.multi_index(static_cast<int>(i));
      for (int d = 0; d < grid.dim(); ++d) {
        for (int sign : {-1, 1}) {
          auto nm = m;
          nm[static_cast<std::size_t>(d)] += sign;
          const int j = grid.index(nm);
          if (j < 0 || !grid.inside[static_cast<std::size_t>(j)]) continue;
          const Point& y = grid.nodes[static_cast<std::size_t>(j)];
          const auto chord = manifold::PathSpec::polyline(src, "chord", {{c, x}, {c, y}});
          const double len = (y - x).norm();
          // The image of the chord x + (t/len)(y - x), t in [0, len].
          std::map<std::string, expr::Expr> along;
          const auto names = manifold::coordinate_names(src.dim());
          for (int k = 0; k < src.dim(); ++k) {
            along.emplace(names[static_cast<std::size_t>(k)],
                          expr::Expr(x(k)) + expr::Expr((y(k) - x(k)) / len) * expr::Expr::var("t"));
          }
          std::vector<expr::Expr> coords;
          for (const auto& e : data.phi.components[static_cast<std::size_t>(c)]) {
            coords.push_back(expr::substitute(e, along));
          }
          const auto image = manifold::PathSpec::build(tgt, "image", {{tgt.chart(b).id, 0.0, len, coords}}, 8);
          const Matrix k2 = transport::horizontal_lift(a, chord, id, o).end_value;
          const Matrix k1 = transport::horizontal_lift(a_prime, image, id, o).end_value;
          const Matrix moved = k2 * u * k1.adjoint();
          r.parallel_defect = std::max(r.parallel_defect, (moved - grid.values[static_cast<std::size_t>(j)]).norm() / h);
        }
      }
      // Curvature of A' at phi(x), pulled back through the Jacobian.
      const auto f = bundle::curvature(a, c, x);
      const Point px = data.phi.apply(c, x);
      const auto fp = bundle::curvature(a_prime, b, px);
      const Eigen::MatrixXd J = data.phi.jacobian(c, x);
      bundle::CurvatureValue pulled;
      pulled.chart = c;
      pulled.x = x;
      const int sd = src.dim();
      const int td = tgt.dim();
      pulled.F.assign(static_cast<std::size_t>(sd * sd), Matrix::Zero(n, n));
      for (int p = 0; p < sd; ++p) {
        for (int q = 0; q < sd; ++q) {
          Matrix acc = Matrix::Zero(n, n);
          for (int k = 0; k < td; ++k) {
            for (int l = 0; l < td; ++l) acc += J(k, p) * J(l, q) * fp.at(k, l);
          }
          pulled.F[static_cast<std::size_t>(p * sd + q)] = acc;
        }
      }
      r.curvature_match_defect = std::max(r.curvature_match_defect, curvature_mismatch(u, f, pulled));
    }
  }
  return r;
}

ExtendPhiResult extend_iso_phi(const PhiCoveringData& data, const ConnectionSpec& a, const ConnectionSpec& a_prime,
                               const germs::ExtendOptions& opts, double intertwine_tol) {
  const auto reduced = reduce_to_id_covering(data, a_prime);
  auto result = extend_iso(reduced.data, a, *reduced.pulled_connection, opts, intertwine_tol);
  if (auto* w = std::get_if<germs::MonodromyWitness>(&result)) return *w;
  auto ext = std::get<ExtendedIso>(std::move(result));
  PhiCoveringData out{data.phi, ext.data.rebind(data.iso.bundle(), data.iso.bundle_prime())};
  return ExtendedPhiIso{std::move(out), std::move(ext)};
}

}  // namespace bundlekit::intertwiner
