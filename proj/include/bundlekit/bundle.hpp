#pragma once

// Principal bundles as Cech cocycles over an atlas, connections as local
// algebra-valued 1-forms, gauge transformations and fiber actions.
//
// Frames: chart sections satisfy s_b = s_a g_ab on overlaps, g_ab written in
// the coordinates of chart a. Compatibility of local forms is
//   tau^* A_b = Ad(g_ab^-1) A_a + g_ab^-1 d g_ab,
// with tau the coordinate change a -> b, so components pick up its Jacobian.

#include "bundlekit/defects.hpp"
#include "bundlekit/expr_matrix.hpp"
#include "bundlekit/lie.hpp"
#include "bundlekit/manifold.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace bundlekit::bundle {

using expr::ExprMatrix;
using lie::GroupKind;
using lie::Matrix;
using manifold::AtlasPtr;
using manifold::Point;

inline constexpr double kCocycleTol = 1e-8;
inline constexpr double kInverseTol = 1e-9;
inline constexpr double kConnTol = 1e-7;
inline constexpr double kGaugeTol = 1e-8;

class BundleSpec {
 public:
  /// `cocycle[i]` is g for atlas piece i (nullopt: derived from the reverse
  /// piece as g_ba = g_ab^-1 o tau_ba, or identity if both are absent).
  static std::shared_ptr<const BundleSpec> make(AtlasPtr atlas, GroupKind group,
                                                std::vector<std::optional<ExprMatrix>> cocycle);
  static std::shared_ptr<const BundleSpec> trivial(AtlasPtr atlas, GroupKind group);

  const AtlasPtr& atlas() const noexcept { return atlas_; }
  const GroupKind& group() const noexcept { return group_; }
  const ExprMatrix& cocycle(int piece) const { return cocycle_.at(static_cast<std::size_t>(piece)); }
  Matrix transition(int piece, const Point& x) const;
  /// d_i g at x, one matrix per coordinate of the piece's source chart.
  std::vector<Matrix> transition_derivatives(int piece, const Point& x) const;

  /// Membership, inverse (g_ba = g_ab^-1) and triple-overlap cocycle defects.
  DefectReport validate(int samples, std::uint64_t seed = 1) const;

 private:
  AtlasPtr atlas_;
  GroupKind group_ = GroupKind::u1();
  std::vector<ExprMatrix> cocycle_;
  std::vector<expr::MatrixProgram> programs_;
  std::vector<expr::MatrixProgram> dprograms_;
};

using BundlePtr = std::shared_ptr<const BundleSpec>;

struct CurvatureValue {
  int chart = 0;
  Point x;
  std::vector<Matrix> F;  // n*n, F[i*n + j] = F_ij
  const Matrix& at(int i, int j) const { return F[static_cast<std::size_t>(i * static_cast<int>(x.size()) + j)]; }
};

class ConnectionSpec {
 public:
  /// forms[chart][i] is the coefficient of dx^i.
  static std::shared_ptr<const ConnectionSpec> make(BundlePtr bundle, std::vector<std::vector<ExprMatrix>> forms);
  static std::shared_ptr<const ConnectionSpec> zero(BundlePtr bundle);

  const BundlePtr& bundle() const noexcept { return bundle_; }
  const AtlasPtr& atlas() const noexcept { return bundle_->atlas(); }
  const GroupKind& group() const noexcept { return bundle_->group(); }
  const std::vector<ExprMatrix>& form(int chart) const { return forms_.at(static_cast<std::size_t>(chart)); }
  const std::vector<std::vector<ExprMatrix>>& forms() const noexcept { return forms_; }

  std::vector<Matrix> components(int chart, const Point& x) const;
  /// A(v) = sum_i A_i(x) v^i.
  Matrix contract(int chart, const Point& x, const Point& v) const;
  /// d_j A_i at x, indexed [i*n + j].
  std::vector<Matrix> derivatives(int chart, const Point& x) const;

  /// Algebra membership and overlap compatibility defects.
  DefectReport validate(int samples, std::uint64_t seed = 1) const;

 private:
  BundlePtr bundle_;
  std::vector<std::vector<ExprMatrix>> forms_;
  std::vector<expr::MatrixProgram> programs_;
  struct DerivCache {
    std::once_flag once;
    std::vector<expr::MatrixProgram> programs;
  };
  std::shared_ptr<DerivCache> derivs_ = std::make_shared<DerivCache>();
};

using ConnectionPtr = std::shared_ptr<const ConnectionSpec>;

/// F_ij = d_i A_j - d_j A_i + [A_i, A_j].
CurvatureValue curvature(const ConnectionSpec& conn, int chart, const Point& x);
/// Max over overlap samples of |F_b - Ad(g_ab^-1) F_a| (in b coordinates).
double curvature_covariance_defect(const ConnectionSpec& conn, int samples, std::uint64_t seed = 1);
/// Largest |F| over sampled points of every chart.
double max_curvature_norm(const ConnectionSpec& conn, int samples, std::uint64_t seed = 1);

class GaugeTransform {
 public:
  static std::shared_ptr<const GaugeTransform> make(BundlePtr bundle, std::vector<ExprMatrix> per_chart);
  static std::shared_ptr<const GaugeTransform> identity(BundlePtr bundle);

  const BundlePtr& bundle() const noexcept { return bundle_; }
  const ExprMatrix& map(int chart) const { return maps_.at(static_cast<std::size_t>(chart)); }
  const std::vector<ExprMatrix>& maps() const noexcept { return maps_; }
  Matrix value(int chart, const Point& x) const;

  /// Pointwise inverse u^-1, and pointwise product (u v)(x) = u(x) v(x).
  std::shared_ptr<const GaugeTransform> inverse() const;
  std::shared_ptr<const GaugeTransform> then(const GaugeTransform& v) const;

  /// Membership and equivariance u_b = g_ab^-1 u_a g_ab on overlaps.
  DefectReport validate(int samples, std::uint64_t seed = 1) const;

 private:
  BundlePtr bundle_;
  std::vector<ExprMatrix> maps_;
  std::vector<expr::MatrixProgram> programs_;
};

using GaugePtr = std::shared_ptr<const GaugeTransform>;

/// A'_a = Ad(u_a^-1) A_a + u_a^-1 d u_a.
ConnectionPtr apply_gauge(const ConnectionSpec& conn, const GaugeTransform& u);

/// Pulls a bundle on the target of phi back to its source. Throws
/// ChartAssignmentError when no target transition matches a source overlap.
BundlePtr pullback_bundle(const BundleSpec& target, const manifold::ChartMap& phi, int samples = 32);
/// (phi^* A')_i = sum_j (A'_j o phi) d phi_j / d x_i, on the given pullback bundle.
ConnectionPtr pullback_connection(const ConnectionSpec& target, const manifold::ChartMap& phi, BundlePtr pulled);
ConnectionPtr pullback_connection(const ConnectionSpec& target, const manifold::ChartMap& phi);

struct ProductBundle {
  BundlePtr bundle;
  ConnectionPtr connection;
};

/// Block-diagonal cocycle diag(g, g') and form diag(A, A') on K x K'.
ProductBundle product_bundle(const ConnectionSpec& a, const ConnectionSpec& b);

// ---------------------------------------------------------------- fibers

using FiberValue = Eigen::MatrixXcd;

struct ActionSpec {
  enum class Kind { LinearRho, GroupTau, GroupLeft };
  enum class Rep { Defining, Adjoint };
  Kind kind = Kind::GroupLeft;
  Rep rep = Rep::Defining;
  /// The acting group; for GroupTau this is the product K x K.
  GroupKind group = GroupKind::u1();

  static ActionSpec linear(GroupKind g, Rep rep = Rep::Defining) { return {Kind::LinearRho, rep, std::move(g)}; }
  static ActionSpec left(GroupKind g) { return {Kind::GroupLeft, Rep::Defining, std::move(g)}; }
  /// tau((k1, k2), f) = k2 f k1^-1 on K, acted on by K x K.
  static ActionSpec tau(const GroupKind& k) { return {Kind::GroupTau, Rep::Defining, GroupKind::product(k, k)}; }

  /// Group of the fiber for GroupLeft and GroupTau.
  GroupKind fiber_group() const;
  std::pair<int, int> fiber_shape() const;
  std::string label() const;
};

/// LinearRho: rho(k) f; GroupTau: k2 f k1^-1; GroupLeft: k f. Throws ShapeMismatch.
FiberValue associated_fiber_action(const ActionSpec& action, const Matrix& k, const FiberValue& f);
/// Frobenius distance, used for every fiber type.
double fiber_distance(const FiberValue& a, const FiberValue& b);
/// Checks the action axioms on `samples` random group pairs.
double action_axiom_defect(const ActionSpec& action, int samples, std::uint64_t seed = 1);

/// Uniformly distributed random group element (Haar for U1/SU2/SO3).
Matrix random_group_element(const GroupKind& group, std::mt19937_64& rng);

}  // namespace bundlekit::bundle
