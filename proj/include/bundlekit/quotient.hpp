#pragma once

// Quotients of (metric, bundle, connection) on a cover by a deck group whose
// generators are lifted to bundle automorphisms.
//
// A lift j_g acts by J_g(s(x) k) = s(g x) j_g(x) k on the trivialized cover,
// so J_g^* B = B reads Ad(j_g^-1)(g^* B) + j_g^-1 d j_g = B, and lifts of
// products compose as j_{gh}(x) = j_g(h x) j_h(x). On a quotient overlap
// whose coordinates differ by the deck element m the cocycle is j_m(x)^-1.

#include "bundlekit/intertwiner.hpp"

namespace bundlekit::quotient {

using bundle::BundlePtr;
using bundle::ConnectionPtr;
using bundle::ExprMatrix;
using expr::Expr;
using lie::Matrix;
using manifold::AtlasPtr;
using manifold::Metric;
using manifold::Point;

inline constexpr double kQuotTol = 1e-6;
inline constexpr double kIsometryTol = 1e-7;
inline constexpr double kRelationTol = 1e-7;
inline constexpr double kMorphismTol = 1e-8;
inline constexpr double kRoundtripTol = 1e-7;

/// Data on the cover, which must be a single-chart atlas.
struct Cover {
  Metric metric;
  ConnectionPtr connection;
  const AtlasPtr& atlas() const { return connection->atlas(); }
};

struct DeckGenerator {
  std::string name;
  std::vector<Expr> map;      // cover coordinates of g x
  std::vector<Expr> inverse;  // of g^-1 x
  ExprMatrix lift;            // j_g
};

/// (generator index, +1 or -1), read left to right as a product.
using Word = std::vector<std::pair<int, int>>;

struct DeckAction {
  std::vector<DeckGenerator> generators;
  std::vector<std::pair<std::string, Word>> relations;

  /// For a translation map x + t, the inverse x - t; empty otherwise.
  static std::vector<Expr> translation_inverse(const std::vector<Expr>& map);
};

/// Base map and lift of a word.
struct DeckElement {
  std::vector<Expr> map;
  ExprMatrix lift;
};
DeckElement compose_word(const DeckAction& deck, int dim, const Word& word);
/// gen_1^{m_1} gen_2^{m_2} ...
DeckElement lattice_element(const DeckAction& deck, int dim, const std::vector<int>& m);

DefectReport check_lift_axioms(const Cover& cover, const DeckAction& deck, int samples = 32, std::uint64_t seed = 1);

struct QuotientTriple {
  AtlasPtr atlas;
  Metric metric;
  BundlePtr bundle;
  ConnectionPtr connection;
};

/// Target must be Torus (two unit translations) or Annulus (translation by
/// 2 pi in x2). Throws LiftDefectTooLarge or UnsupportedDeckPattern.
QuotientTriple build_quotient(const Cover& cover, const DeckAction& deck, AtlasPtr target, double quot_tol = kQuotTol);

/// Pulls the quotient back to translates of its charts on the cover and
/// compares against (Q, B) through the gauge j_m(x - m).
DefectReport verify_quotient_roundtrip(const QuotientTriple& qt, const Cover& cover, const DeckAction& deck,
                                       int samples = 16, std::uint64_t seed = 1);

/// j_g(x0)^-1 times the transport of B along the cover segment x0 -> g x0.
Matrix twisted_cover_transport(const Cover& cover, const DeckAction& deck, int generator, const Point& x0,
                               const transport::Options& opts = {});

struct HomogeneityCandidate {
  manifold::ChartPoint x;
  manifold::ChartPoint x_prime;
  std::vector<Expr> iso;  // chart of x' coordinates in terms of chart of x coordinates
  double radius = 0.1;
  ExprMatrix phi;         // u on the ball around x
};

DefectReport check_local_homogeneity(const QuotientTriple& qt, const HomogeneityCandidate& cand, int samples = 32,
                                     const intertwiner::CheckOptions& opts = {});

}  // namespace bundlekit::quotient
