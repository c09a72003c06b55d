#pragma once

// Parallel germs at the basepoint: their orbit under loop transport (the
// sheets of the germ covering over the basepoint) and global extension of a
// germ to a parallel section.

#include "bundlekit/error.hpp"
#include "bundlekit/transport.hpp"

#include <array>
#include <variant>

namespace bundlekit::germs {

using bundle::ActionSpec;
using bundle::ConnectionSpec;
using bundle::FiberValue;
using lie::Matrix;
using transport::LocalSectionGrid;

inline constexpr double kGermTol = 1e-6;
inline constexpr double kGlueTol = 1e-5;

struct GermValue {
  manifold::ChartPoint base;
  FiberValue value;
};

struct GeneratorAction {
  std::string generator;
  /// image[i] = sheet reached from sheet i along the generator (-1 if the
  /// orbit overflowed first); inverse_image along the reversed generator.
  std::vector<int> image;
  std::vector<int> inverse_image;
};

struct MonodromyOrbit {
  GermValue seed;
  std::vector<FiberValue> sheets;
  std::vector<GeneratorAction> generator_action;
  bool closed = false;

  /// Cycle lengths of a generator's permutation, in discovery order.
  std::vector<int> cycle_lengths(std::size_t generator) const;
};

struct Tolerances {
  double germ = kGermTol;
  double glue = kGlueTol;
};

/// Breadth-first closure of the seed under each loop generator and its
/// inverse. Stops with closed = false once more than max_sheets appear.
MonodromyOrbit enumerate_sheets(const ConnectionSpec& conn, const ActionSpec& action, const GermValue& seed,
                                int max_sheets, const transport::Options& opts = {}, double germ_tol = kGermTol);

struct GlobalSection {
  ActionSpec action;
  std::vector<LocalSectionGrid> charts;
  /// Spanning-tree edges as (parent chart, child chart, piece).
  std::vector<std::array<int, 3>> tree;
  DefectReport overlap;

  /// Section value anywhere in a chart: radial transport from its anchor.
  FiberValue value(const ConnectionSpec& conn, int chart, const manifold::Point& x,
                   const transport::Options& opts = {}) const;
};

struct MonodromyWitness {
  std::string generator;
  double discrepancy = 0.0;
  FiberValue moved;
};

using ExtendResult = std::variant<GlobalSection, MonodromyWitness>;

struct ExtendOptions {
  transport::Options transport;
  int res = 21;
  int overlap_samples = 32;
  std::uint64_t seed = 1;
  /// 0 or 1: which spanning tree (neighbour order and junction sample) to use.
  int tree_variant = 0;
  Tolerances tol;
};

/// Thrown when extended chart sections disagree on an overlap.
class GlueFailure : public Error {
 public:
  GlueFailure(double defect, double curvature);
  double defect;
  double max_curvature;
};

/// Transports the seed over a spanning tree of the chart graph and extends
/// radially in each chart. On an atlas that is not simply connected the loop
/// generators are checked first and any that moves the seed gives a witness.
ExtendResult global_extend(const ConnectionSpec& conn, const ActionSpec& action, const GermValue& seed,
                           const ExtendOptions& opts = {});

/// Max fiber distance between two sections over the grid nodes of the first.
double uniqueness_probe(const ConnectionSpec& conn, const GlobalSection& s1, const GlobalSection& s2,
                        const transport::Options& opts = {});

/// Largest parallelism defect over the chart grids.
double section_parallelism(const ConnectionSpec& conn, const GlobalSection& s, const transport::Options& opts = {});

}  // namespace bundlekit::germs
