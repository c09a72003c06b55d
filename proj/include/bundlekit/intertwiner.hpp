#pragma once

// Bundle isomorphisms as sections of I(P, P') = (P' x_M P) x_tau K.
//
// Data u_a : U_a -> K describes Psi : P' -> P with Psi(s'_a) = s_a u_a, so
// on overlaps u_b = g_ab^-1 u_a g'_ab. The section is parallel for the
// product connection A' x A (k1 from A', k2 from A, tau((k1,k2),k) =
// k2 k k1^-1) exactly when A' = Ad(u^-1) A + u^-1 du.

#include "bundlekit/germs.hpp"

#include <functional>
#include <limits>

namespace bundlekit::intertwiner {

using bundle::BundlePtr;
using bundle::ConnectionSpec;
using bundle::ExprMatrix;
using lie::Matrix;
using manifold::Point;

inline constexpr double kIntertwineTol = 1e-5;
inline constexpr double kOverlapTol = 1e-8;
inline constexpr double kLocalMatchTol = 1e-6;

/// A chart ball; an infinite radius stands for the whole chart.
struct Region {
  int chart = 0;
  Point center;
  double radius = std::numeric_limits<double>::infinity();
  bool contains(const manifold::Atlas& atlas, int c, const Point& x) const;
};

class IntertwinerData {
 public:
  using Evaluator = std::function<Matrix(int chart, const Point& x)>;

  /// Closed-form data: one matrix per chart (nullopt where undefined).
  static IntertwinerData from_exprs(BundlePtr p, BundlePtr p_prime, std::vector<std::optional<ExprMatrix>> u,
                                    std::vector<Region> regions);
  static IntertwinerData from_evaluator(BundlePtr p, BundlePtr p_prime, Evaluator u, std::vector<Region> regions);
  static IntertwinerData identity(BundlePtr p, std::vector<Region> regions);

  const BundlePtr& bundle() const noexcept { return p_; }
  const BundlePtr& bundle_prime() const noexcept { return p_prime_; }
  const std::vector<Region>& regions() const noexcept { return regions_; }
  bool defined_on(int chart) const;
  Matrix value(int chart, const Point& x) const;
  const std::optional<ExprMatrix>& expr(int chart) const { return exprs_.at(static_cast<std::size_t>(chart)); }
  /// Same u over other bundles (used when P' is replaced by a pullback).
  IntertwinerData rebind(BundlePtr p, BundlePtr p_prime) const;

  /// Membership and the overlap rule at sampled overlap points of the domain.
  DefectReport validate(int samples, std::uint64_t seed = 1) const;

 private:
  BundlePtr p_, p_prime_;
  std::vector<std::optional<ExprMatrix>> exprs_;
  Evaluator eval_;
  std::vector<Region> regions_;
};

/// Grid geometry for a region: centre and ball radius inside its chart.
std::pair<Point, double> region_ball(const manifold::Atlas& atlas, const Region& r);

/// Samples u on each region's grid as a GroupTau section. Throws
/// OverlapViolation if the data fails its overlap rule.
std::vector<transport::LocalSectionGrid> iso_to_section(const IntertwinerData& phi, int res = 21);
/// Inverse of iso_to_section; values come from the grid nodes (multilinear
/// in between). Throws ValueNotInGroup.
IntertwinerData section_to_iso(BundlePtr p, BundlePtr p_prime, const std::vector<transport::LocalSectionGrid>& grids);

struct IntertwineReport {
  double parallel_defect = 0.0;
  double curvature_match_defect = 0.0;
  int nodes = 0;
  int regions = 0;
  double tol = kIntertwineTol;
  bool pass() const { return parallel_defect <= tol; }
};

struct CheckOptions {
  transport::Options transport;
  int res = 21;
  double tol = kIntertwineTol;
};

/// A on P, A' on P'.
IntertwineReport check_connection_intertwine(const IntertwinerData& phi, const ConnectionSpec& a,
                                             const ConnectionSpec& a_prime, const CheckOptions& opts = {});

struct ExtendedIso {
  IntertwinerData data;
  germs::GlobalSection section;
  /// Max distance from the local data on its own grid.
  double local_match = 0.0;
};

using ExtendIsoResult = std::variant<ExtendedIso, germs::MonodromyWitness>;

/// Extends the germ of phi_local at the centre of its first region.
ExtendIsoResult extend_iso(const IntertwinerData& phi_local, const ConnectionSpec& a, const ConnectionSpec& a_prime,
                           const germs::ExtendOptions& opts = {}, double intertwine_tol = kIntertwineTol);

// ---------------------------------------------------------------- phi-covering

/// Psi : P' -> P covering phi : M -> M': Psi(s'_b o phi) = s_a u_a on chart a
/// of M, b its assigned chart of M'.
struct PhiCoveringData {
  manifold::ChartMap phi;
  /// bundle() is P on M, bundle_prime() is P' on M'.
  IntertwinerData iso;
};

struct ReducedProblem {
  BundlePtr pulled_bundle;
  bundle::ConnectionPtr pulled_connection;
  IntertwinerData data;
};

ReducedProblem reduce_to_id_covering(const PhiCoveringData& data, const ConnectionSpec& a_prime);

/// Parallelism of the phi-covering data measured without any pullback:
/// transports under A along chords in M and under A' along their images.
IntertwineReport phi_covering_check(const PhiCoveringData& data, const ConnectionSpec& a,
                                    const ConnectionSpec& a_prime, const CheckOptions& opts = {});

struct ExtendedPhiIso {
  PhiCoveringData data;
  ExtendedIso id_covering;
};

using ExtendPhiResult = std::variant<ExtendedPhiIso, germs::MonodromyWitness>;

ExtendPhiResult extend_iso_phi(const PhiCoveringData& data, const ConnectionSpec& a, const ConnectionSpec& a_prime,
                               const germs::ExtendOptions& opts = {}, double intertwine_tol = kIntertwineTol);

}  // namespace bundlekit::intertwiner
