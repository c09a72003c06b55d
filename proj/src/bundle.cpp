#include "bundlekit/bundle.hpp"

#include "bundlekit/error.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace bundlekit::bundle {

namespace {

using manifold::coordinate_names;
using manifold::Sampler;

std::span<const double> as_span(const Point& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

void require_shape(const ExprMatrix& m, const GroupKind& g, const std::string& what) {
  if (m.rows() != g.matrix_size() || m.cols() != g.matrix_size()) {
    fail(ErrorKind::ShapeMismatch, what + " must be " + std::to_string(g.matrix_size()) + "x" +
                                       std::to_string(g.matrix_size()) + " for " + g.label());
  }
}

std::vector<Point> chart_samples(const manifold::Atlas& atlas, int chart, int count, std::uint64_t seed) {
  Sampler sampler(atlas.dim(), seed + 104729u * static_cast<std::uint64_t>(chart));
  std::vector<Point> out;
  const auto& dom = atlas.chart(chart).domain;
  for (int k = 0; k < 100 * count && static_cast<int>(out.size()) < count; ++k) {
    if (auto x = dom.from_unit(sampler.next(), 0.98)) out.push_back(*x);
  }
  return out;
}

std::map<std::string, expr::Expr> coordinate_bindings(const std::vector<expr::Expr>& values) {
  std::map<std::string, expr::Expr> b;
  const auto names = coordinate_names(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) b.emplace(names[i], values[i]);
  return b;
}

}  // namespace

// ---------------------------------------------------------------- bundle

BundlePtr BundleSpec::make(AtlasPtr atlas, GroupKind group, std::vector<std::optional<ExprMatrix>> cocycle) {
  const std::size_t pieces = atlas->pieces().size();
  if (cocycle.size() != pieces) fail(ErrorKind::ShapeMismatch, "cocycle needs one entry per transition piece");
  auto b = std::make_shared<BundleSpec>();
  b->atlas_ = atlas;
  b->group_ = group;
  const int n = group.matrix_size();
  for (std::size_t i = 0; i < pieces; ++i) {
    if (cocycle[i]) {
      require_shape(*cocycle[i], group, "cocycle entry");
      b->cocycle_.push_back(*cocycle[i]);
      continue;
    }
    const int rev = atlas->reverse_piece(static_cast<int>(i));
    if (rev >= 0 && cocycle[static_cast<std::size_t>(rev)]) {
      const auto& reverse_map = atlas->piece(static_cast<int>(i)).map;
      const auto& g = *cocycle[static_cast<std::size_t>(rev)];
      require_shape(g, group, "cocycle entry");
      b->cocycle_.push_back(g.substitute(coordinate_bindings(reverse_map)).adjoint());
    } else {
      b->cocycle_.push_back(ExprMatrix::identity(n));
    }
  }
  const auto vars = coordinate_names(atlas->dim());
  for (const auto& g : b->cocycle_) {
    b->programs_.emplace_back(std::vector<ExprMatrix>{g}, vars);
    std::vector<ExprMatrix> d;
    for (const auto& v : vars) d.push_back(g.deriv(v));
    b->dprograms_.emplace_back(d, vars);
  }
  return b;
}

BundlePtr BundleSpec::trivial(AtlasPtr atlas, GroupKind group) {
  const std::size_t pieces = atlas->pieces().size();
  return make(std::move(atlas), std::move(group), std::vector<std::optional<ExprMatrix>>(pieces));
}

Matrix BundleSpec::transition(int piece, const Point& x) const {
  return programs_.at(static_cast<std::size_t>(piece))(as_span(x)).front();
}

std::vector<Matrix> BundleSpec::transition_derivatives(int piece, const Point& x) const {
  return dprograms_.at(static_cast<std::size_t>(piece))(as_span(x));
}

DefectReport BundleSpec::validate(int samples, std::uint64_t seed) const {
  const auto& at = *atlas_;
  const double margin = 1e-6;
  double membership = 0.0;
  double inverse = 0.0;
  double triple = 0.0;
  const Matrix id = Matrix::Identity(group_.matrix_size(), group_.matrix_size());
  for (std::size_t i = 0; i < at.pieces().size(); ++i) {
    const int pi = static_cast<int>(i);
    const auto& p = at.piece(pi);
    const int rev = at.reverse_piece(pi);
    for (const Point& x : at.sample_overlap(pi, samples, seed, margin)) {
      const Matrix g = transition(pi, x);
      membership = std::max(membership, lie::group_defect(group_, g));
      const Point y = at.apply(pi, x);
      const int back = rev >= 0 ? rev : at.find_piece(p.to, p.from, y).value_or(-1);
      if (back >= 0) inverse = std::max(inverse, (g * transition(back, y) - id).norm());
      for (std::size_t k = 0; k < at.pieces().size(); ++k) {
        const auto& q = at.piece(static_cast<int>(k));
        if (q.from != p.to || q.to == p.from || q.to == p.to) continue;
        if (!at.piece_applies(static_cast<int>(k), y, margin)) continue;
        const Point z = at.apply(static_cast<int>(k), y);
        for (int l : at.pieces_between(p.from, q.to)) {
          if (!at.piece_applies(l, x) || (at.apply(l, x) - z).norm() > manifold::kTripleTol) continue;
          triple = std::max(triple, (g * transition(static_cast<int>(k), y) - transition(l, x)).norm());
        }
      }
    }
  }
  DefectReport r;
  r.add("cocycle_membership", membership, lie::kGroupTol);
  r.add("cocycle_inverse", inverse, kInverseTol);
  r.add("cocycle_triple", triple, kCocycleTol);
  return r;
}

// ---------------------------------------------------------------- connection

ConnectionPtr ConnectionSpec::make(BundlePtr bundle, std::vector<std::vector<ExprMatrix>> forms) {
  const auto& atlas = *bundle->atlas();
  if (forms.size() != atlas.charts().size()) fail(ErrorKind::ShapeMismatch, "connection needs one form per chart");
  const auto vars = coordinate_names(atlas.dim());
  auto c = std::make_shared<ConnectionSpec>();
  for (auto& f : forms) {
    if (static_cast<int>(f.size()) != atlas.dim()) {
      fail(ErrorKind::ShapeMismatch, "connection form needs one component per coordinate");
    }
    for (const auto& m : f) require_shape(m, bundle->group(), "connection component");
    c->programs_.emplace_back(f, vars);
  }
  c->bundle_ = std::move(bundle);
  c->forms_ = std::move(forms);
  return c;
}

ConnectionPtr ConnectionSpec::zero(BundlePtr bundle) {
  const int n = bundle->group().matrix_size();
  const auto& atlas = *bundle->atlas();
  std::vector<std::vector<ExprMatrix>> forms(atlas.charts().size(),
                                             std::vector<ExprMatrix>(static_cast<std::size_t>(atlas.dim()),
                                                                     ExprMatrix::zero(n, n)));
  return make(std::move(bundle), std::move(forms));
}

std::vector<Matrix> ConnectionSpec::components(int chart, const Point& x) const {
  return programs_.at(static_cast<std::size_t>(chart))(as_span(x));
}

Matrix ConnectionSpec::contract(int chart, const Point& x, const Point& v) const {
  thread_local std::vector<Matrix> parts;
  programs_.at(static_cast<std::size_t>(chart)).run(as_span(x), parts);
  Matrix out = v(0) * parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += v(static_cast<Eigen::Index>(i)) * parts[i];
  return out;
}

std::vector<Matrix> ConnectionSpec::derivatives(int chart, const Point& x) const {
  std::call_once(derivs_->once, [this] {
    const auto vars = coordinate_names(atlas()->dim());
    for (const auto& f : forms_) {
      std::vector<ExprMatrix> d;
      for (const auto& a : f) {
        for (const auto& v : vars) d.push_back(a.deriv(v));
      }
      derivs_->programs.emplace_back(d, vars);
    }
  });
  return derivs_->programs.at(static_cast<std::size_t>(chart))(as_span(x));
}

DefectReport ConnectionSpec::validate(int samples, std::uint64_t seed) const {
  const auto& at = *atlas();
  const int n = at.dim();
  double membership = 0.0;
  for (std::size_t c = 0; c < at.charts().size(); ++c) {
    for (const Point& x : chart_samples(at, static_cast<int>(c), samples, seed)) {
      for (const auto& a : components(static_cast<int>(c), x)) {
        membership = std::max(membership, lie::algebra_defect(group(), a));
      }
    }
  }
  double compat = 0.0;
  for (std::size_t i = 0; i < at.pieces().size(); ++i) {
    const int pi = static_cast<int>(i);
    const auto& p = at.piece(pi);
    for (const Point& x : at.sample_overlap(pi, samples, seed, 1e-6)) {
      const Point y = at.apply(pi, x);
      const Eigen::MatrixXd J = at.jacobian(pi, x);
      const Matrix g = bundle_->transition(pi, x);
      const Matrix gi = g.adjoint();
      const auto dg = bundle_->transition_derivatives(pi, x);
      const auto aa = components(p.from, x);
      const auto ab = components(p.to, y);
      for (int k = 0; k < n; ++k) {
        Matrix lhs = Matrix::Zero(g.rows(), g.cols());
        for (int j = 0; j < n; ++j) lhs += J(j, k) * ab[static_cast<std::size_t>(j)];
        const Matrix rhs = gi * aa[static_cast<std::size_t>(k)] * g + gi * dg[static_cast<std::size_t>(k)];
        compat = std::max(compat, (lhs - rhs).norm());
      }
    }
  }
  DefectReport r;
  r.add("connection_membership", membership, lie::kGroupTol * 10);
  r.add("connection_compatibility", compat, kConnTol);
  return r;
}

CurvatureValue curvature(const ConnectionSpec& conn, int chart, const Point& x) {
  const int n = static_cast<int>(x.size());
  const auto a = conn.components(chart, x);
  const auto d = conn.derivatives(chart, x);
  CurvatureValue out;
  out.chart = chart;
  out.x = x;
  out.F.assign(static_cast<std::size_t>(n * n), Matrix::Zero(a[0].rows(), a[0].cols()));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // d[i*n + j] = d_j A_i
      const Matrix f = d[static_cast<std::size_t>(j * n + i)] - d[static_cast<std::size_t>(i * n + j)] +
                       a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(j)] -
                       a[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(i)];
      out.F[static_cast<std::size_t>(i * n + j)] = f;
      out.F[static_cast<std::size_t>(j * n + i)] = -f;
    }
  }
  return out;
}

double curvature_covariance_defect(const ConnectionSpec& conn, int samples, std::uint64_t seed) {
  const auto& at = *conn.atlas();
  const int n = at.dim();
  double worst = 0.0;
  for (std::size_t i = 0; i < at.pieces().size(); ++i) {
    const int pi = static_cast<int>(i);
    const auto& p = at.piece(pi);
    for (const Point& x : at.sample_overlap(pi, samples, seed, 1e-6)) {
      const Point y = at.apply(pi, x);
      const Eigen::MatrixXd J = at.jacobian(pi, x);
      const Matrix g = conn.bundle()->transition(pi, x);
      const auto fa = curvature(conn, p.from, x);
      const auto fb = curvature(conn, p.to, y);
      // F_b pulled back to a coordinates: (J^T F_b J)_kl.
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          Matrix pulled = Matrix::Zero(g.rows(), g.cols());
          for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) pulled += J(a, k) * J(b, l) * fb.at(a, b);
          }
          worst = std::max(worst, (pulled - g.adjoint() * fa.at(k, l) * g).norm());
        }
      }
    }
  }
  return worst;
}

double max_curvature_norm(const ConnectionSpec& conn, int samples, std::uint64_t seed) {
  const auto& at = *conn.atlas();
  double worst = 0.0;
  for (std::size_t c = 0; c < at.charts().size(); ++c) {
    for (const Point& x : chart_samples(at, static_cast<int>(c), samples, seed)) {
      const auto f = curvature(conn, static_cast<int>(c), x);
      double total = 0.0;
      for (const auto& m : f.F) total += m.squaredNorm();
      worst = std::max(worst, std::sqrt(0.5 * total));
    }
  }
  return worst;
}

// ---------------------------------------------------------------- gauge

GaugePtr GaugeTransform::make(BundlePtr bundle, std::vector<ExprMatrix> per_chart) {
  if (per_chart.size() != bundle->atlas()->charts().size()) {
    fail(ErrorKind::ShapeMismatch, "gauge transform needs one map per chart");
  }
  auto u = std::make_shared<GaugeTransform>();
  const auto vars = coordinate_names(bundle->atlas()->dim());
  for (const auto& m : per_chart) {
    require_shape(m, bundle->group(), "gauge value");
    u->programs_.emplace_back(std::vector<ExprMatrix>{m}, vars);
  }
  u->bundle_ = std::move(bundle);
  u->maps_ = std::move(per_chart);
  return u;
}

GaugePtr GaugeTransform::identity(BundlePtr bundle) {
  const int n = bundle->group().matrix_size();
  std::vector<ExprMatrix> maps(bundle->atlas()->charts().size(), ExprMatrix::identity(n));
  return make(std::move(bundle), std::move(maps));
}

Matrix GaugeTransform::value(int chart, const Point& x) const {
  return programs_.at(static_cast<std::size_t>(chart))(as_span(x)).front();
}

GaugePtr GaugeTransform::inverse() const {
  std::vector<ExprMatrix> inv;
  for (const auto& m : maps_) inv.push_back(m.adjoint());
  return make(bundle_, std::move(inv));
}

GaugePtr GaugeTransform::then(const GaugeTransform& v) const {
  std::vector<ExprMatrix> prod;
  for (std::size_t c = 0; c < maps_.size(); ++c) prod.push_back(maps_[c] * v.maps_[c]);
  return make(bundle_, std::move(prod));
}

DefectReport GaugeTransform::validate(int samples, std::uint64_t seed) const {
  const auto& at = *bundle_->atlas();
  double membership = 0.0;
  for (std::size_t c = 0; c < at.charts().size(); ++c) {
    for (const Point& x : chart_samples(at, static_cast<int>(c), samples, seed)) {
      membership = std::max(membership, lie::group_defect(bundle_->group(), value(static_cast<int>(c), x)));
    }
  }
  double equivariance = 0.0;
  for (std::size_t i = 0; i < at.pieces().size(); ++i) {
    const int pi = static_cast<int>(i);
    const auto& p = at.piece(pi);
    for (const Point& x : at.sample_overlap(pi, samples, seed, 1e-6)) {
      const Matrix g = bundle_->transition(pi, x);
      const Matrix expected = g.adjoint() * value(p.from, x) * g;
      equivariance = std::max(equivariance, (value(p.to, at.apply(pi, x)) - expected).norm());
    }
  }
  DefectReport r;
  r.add("gauge_membership", membership, lie::kGroupTol);
  r.add("gauge_equivariance", equivariance, kGaugeTol);
  return r;
}

ConnectionPtr apply_gauge(const ConnectionSpec& conn, const GaugeTransform& u) {
  const auto vars = coordinate_names(conn.atlas()->dim());
  std::vector<std::vector<ExprMatrix>> forms;
  for (std::size_t c = 0; c < conn.forms().size(); ++c) {
    const ExprMatrix& um = u.map(static_cast<int>(c));
    const ExprMatrix ui = um.adjoint();
    std::vector<ExprMatrix> f;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      f.push_back(ui * conn.forms()[c][i] * um + ui * um.deriv(vars[i]));
    }
    forms.push_back(std::move(f));
  }
  return ConnectionSpec::make(conn.bundle(), std::move(forms));
}

// ---------------------------------------------------------------- pullbacks

BundlePtr pullback_bundle(const BundleSpec& target, const manifold::ChartMap& phi, int samples) {
  const auto& src = *phi.source;
  const auto& tgt = *phi.target;
  if (target.atlas().get() != phi.target.get() && target.atlas()->name() != tgt.name()) {
    fail(ErrorKind::AtlasMismatch, "bundle does not live on the target of the map");
  }
  const int n = target.group().matrix_size();
  std::vector<std::optional<ExprMatrix>> cocycle(src.pieces().size());
  for (std::size_t i = 0; i < src.pieces().size(); ++i) {
    const int pi = static_cast<int>(i);
    const auto& p = src.piece(pi);
    const int ta = phi.target_chart[static_cast<std::size_t>(p.from)];
    const int tb = phi.target_chart[static_cast<std::size_t>(p.to)];
    if (ta == tb) {
      cocycle[i] = ExprMatrix::identity(n);
      continue;
    }
    // The target piece relating the two image points must be the same one at
    // every sampled overlap point.
    int chosen = -1;
    const auto pts = src.sample_overlap(pi, samples, 17, 1e-6);
    if (pts.empty()) {
      const auto candidates = tgt.pieces_between(ta, tb);
      if (candidates.size() != 1) {
        fail(ErrorKind::ChartAssignmentError, "cannot match an empty overlap to a target transition");
      }
      chosen = candidates.front();
    }
    for (const Point& x : pts) {
      const Point ya = phi.apply(p.from, x);
      const Point yb = phi.apply(p.to, src.apply(pi, x));
      int found = -1;
      for (int q : tgt.pieces_between(ta, tb)) {
        if (tgt.piece_applies(q, ya) && (tgt.apply(q, ya) - yb).norm() <= 1e-8) {
          found = q;
          break;
        }
      }
      if (found < 0 || (chosen >= 0 && found != chosen)) {
        fail(ErrorKind::ChartAssignmentError, "map image of overlap " + src.chart(p.from).id + "->" +
                                                  src.chart(p.to).id + " matches no single target transition");
      }
      chosen = found;
    }
    cocycle[i] = target.cocycle(chosen).substitute(coordinate_bindings(phi.components[static_cast<std::size_t>(p.from)]));
  }
  return BundleSpec::make(phi.source, target.group(), std::move(cocycle));
}

ConnectionPtr pullback_connection(const ConnectionSpec& target, const manifold::ChartMap& phi, BundlePtr pulled) {
  const auto src_vars = coordinate_names(phi.source->dim());
  std::vector<std::vector<ExprMatrix>> forms;
  for (std::size_t c = 0; c < phi.source->charts().size(); ++c) {
    const auto& comps = phi.components[c];
    const auto bind = coordinate_bindings(comps);
    std::vector<ExprMatrix> composed;
    for (const auto& a : target.form(phi.target_chart[c])) composed.push_back(a.substitute(bind));
    std::vector<ExprMatrix> f;
    for (const auto& xi : src_vars) {
      ExprMatrix sum = ExprMatrix::zero(target.group().matrix_size(), target.group().matrix_size());
      for (std::size_t j = 0; j < comps.size(); ++j) sum = sum + composed[j].scaled(expr::deriv(comps[j], xi));
      f.push_back(std::move(sum));
    }
    forms.push_back(std::move(f));
  }
  return ConnectionSpec::make(std::move(pulled), std::move(forms));
}

ConnectionPtr pullback_connection(const ConnectionSpec& target, const manifold::ChartMap& phi) {
  return pullback_connection(target, phi, pullback_bundle(*target.bundle(), phi));
}

ProductBundle product_bundle(const ConnectionSpec& a, const ConnectionSpec& b) {
  const auto& pa = *a.bundle();
  const auto& pb = *b.bundle();
  if (pa.atlas().get() != pb.atlas().get()) {
    fail(ErrorKind::AtlasMismatch, "product bundle needs both factors on the same atlas");
  }
  if (pa.group() != pb.group()) fail(ErrorKind::AtlasMismatch, "product bundle factors have different groups");
  std::vector<std::optional<ExprMatrix>> cocycle;
  for (std::size_t i = 0; i < pa.atlas()->pieces().size(); ++i) {
    cocycle.push_back(expr::block_diagonal(pa.cocycle(static_cast<int>(i)), pb.cocycle(static_cast<int>(i))));
  }
  auto bundle = BundleSpec::make(pa.atlas(), GroupKind::product(pa.group(), pb.group()), std::move(cocycle));
  std::vector<std::vector<ExprMatrix>> forms;
  for (std::size_t c = 0; c < a.forms().size(); ++c) {
    std::vector<ExprMatrix> f;
    for (std::size_t i = 0; i < a.forms()[c].size(); ++i) {
      f.push_back(expr::block_diagonal(a.forms()[c][i], b.forms()[c][i]));
    }
    forms.push_back(std::move(f));
  }
  auto conn = ConnectionSpec::make(bundle, std::move(forms));
  return {bundle, conn};
}

// ---------------------------------------------------------------- fibers

GroupKind ActionSpec::fiber_group() const {
  if (kind == Kind::GroupTau) return group.factors().front();
  return group;
}

std::pair<int, int> ActionSpec::fiber_shape() const {
  switch (kind) {
    case Kind::LinearRho:
      return rep == Rep::Defining ? std::pair{group.matrix_size(), 1}
                                  : std::pair{group.matrix_size(), group.matrix_size()};
    case Kind::GroupTau: {
      const int n = fiber_group().matrix_size();
      return {n, n};
    }
    case Kind::GroupLeft: return {group.matrix_size(), group.matrix_size()};
  }
  return {0, 0};
}

std::string ActionSpec::label() const {
  switch (kind) {
    case Kind::LinearRho: return std::string("LinearRho(") + (rep == Rep::Defining ? "defining" : "adjoint") + ")";
    case Kind::GroupTau: return "GroupTau";
    case Kind::GroupLeft: return "GroupLeft";
  }
  return "?";
}

FiberValue associated_fiber_action(const ActionSpec& action, const Matrix& k, const FiberValue& f) {
  const int n = action.group.matrix_size();
  if (k.rows() != n || k.cols() != n) fail(ErrorKind::ShapeMismatch, "group element does not match the action");
  const auto [rows, cols] = action.fiber_shape();
  if (f.rows() != rows || f.cols() != cols) {
    fail(ErrorKind::ShapeMismatch, "fiber value shape " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                                       " does not match " + action.label());
  }
  switch (action.kind) {
    case ActionSpec::Kind::LinearRho:
      if (action.rep == ActionSpec::Rep::Defining) return k * f;
      return k * f * k.adjoint();
    case ActionSpec::Kind::GroupLeft: return k * f;
    case ActionSpec::Kind::GroupTau: {
      const Matrix k1 = lie::factor_block(action.group, k, 0);
      const Matrix k2 = lie::factor_block(action.group, k, 1);
      return k2 * f * k1.adjoint();
    }
  }
  return f;
}

double fiber_distance(const FiberValue& a, const FiberValue& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorKind::ShapeMismatch, "fiber values differ in shape");
  return (a - b).norm();
}

Matrix random_group_element(const GroupKind& group, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  switch (group.name()) {
    case lie::GroupName::U1: {
      std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
      Matrix m(1, 1);
      m(0, 0) = std::polar(1.0, angle(rng));
      return m;
    }
    case lie::GroupName::SU2: {
      Eigen::Vector4d q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
      q.normalize();
      Matrix m(2, 2);
      m << lie::Complex(q(0), q(3)), lie::Complex(q(2), q(1)), lie::Complex(-q(2), q(1)), lie::Complex(q(0), -q(3));
      return m;
    }
    case lie::GroupName::SO3: {
      Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
      q.normalize();
      return q.toRotationMatrix().cast<lie::Complex>();
    }
    case lie::GroupName::GenericMatrix: break;
  }
  if (group.is_product()) {
    Matrix m = random_group_element(group.factors()[0], rng);
    for (std::size_t i = 1; i < group.factors().size(); ++i) {
      m = lie::block_diagonal(m, random_group_element(group.factors()[i], rng));
    }
    return m;
  }
  const int n = group.matrix_size();
  Matrix z(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) z(i, j) = lie::Complex(gauss(rng), gauss(rng));
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < n; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
  return q;
}

double action_axiom_defect(const ActionSpec& action, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto [rows, cols] = action.fiber_shape();
  double worst = 0.0;
  const Matrix id = Matrix::Identity(action.group.matrix_size(), action.group.matrix_size());
  for (int s = 0; s < samples; ++s) {
    const Matrix g = random_group_element(action.group, rng);
    const Matrix h = random_group_element(action.group, rng);
    FiberValue f;
    if (action.kind == ActionSpec::Kind::LinearRho) {
      std::normal_distribution<double> gauss(0.0, 1.0);
      f = FiberValue(rows, cols);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) f(i, j) = lie::Complex(gauss(rng), gauss(rng));
      }
    } else {
      f = random_group_element(action.fiber_group(), rng);
    }
    const FiberValue lhs = associated_fiber_action(action, g * h, f);
    const FiberValue rhs = associated_fiber_action(action, g, associated_fiber_action(action, h, f));
    worst = std::max(worst, fiber_distance(lhs, rhs));
    worst = std::max(worst, fiber_distance(associated_fiber_action(action, id, f), f));
  }
  return worst;
}

}  // namespace bundlekit::bundle
