#pragma once

// Horizontal lifts by fixed-step RK4 in chart trivializations, holonomy,
// radial extension of a fiber value over a chart ball and the parallelism
// defect of a sampled section.

#include "bundlekit/bundle.hpp"

#include <string>
#include <vector>

namespace bundlekit::transport {

using bundle::ActionSpec;
using bundle::ConnectionSpec;
using bundle::FiberValue;
using lie::Matrix;
using manifold::PathSpec;
using manifold::Point;

inline constexpr int kDefaultStepsPerUnit = 1024;
inline constexpr double kCollapseDefect = 1e-3;

struct TracePoint {
  double t = 0.0;
  int chart = 0;
  Point x;
  Matrix g;
};

struct Options {
  int steps_per_unit = kDefaultStepsPerUnit;
  int min_steps = 8;
  /// Re-run with doubled step count and report the difference.
  bool estimate_error = true;
  /// Frames after every step (and at t0), when non-null.
  std::vector<TracePoint>* trace = nullptr;
};

struct TransportResult {
  FiberValue end_value;
  int end_chart = 0;
  int steps = 0;
  double est_error = 0.0;
  std::string path;
};

/// Solves g' = -A(gamma') g from g0, switching frames by g_ba at junctions.
/// Throws StepCollapse when a step leaves the group by more than 1e-3.
TransportResult horizontal_lift(const ConnectionSpec& conn, const PathSpec& path, const Matrix& g0,
                                const Options& opts = {});
/// lambda(g(t), f0) with g the lift from the identity.
TransportResult associated_transport(const ConnectionSpec& conn, const ActionSpec& action, const PathSpec& path,
                                     const FiberValue& f0, const Options& opts = {});
/// Lift of a closed path from the identity. Throws NotALoop.
TransportResult holonomy(const ConnectionSpec& conn, const PathSpec& loop, const Options& opts = {});

// ---------------------------------------------------------------- sections

/// Fiber values on a res^n grid over the cube around `center` of half-width
/// `radius`; only nodes inside the ball (and the chart) are filled.
struct LocalSectionGrid {
  int chart = 0;
  Point center;
  double radius = 0.0;
  int res = 0;
  ActionSpec action;
  FiberValue e0;
  std::vector<Point> nodes;
  std::vector<bool> inside;
  std::vector<FiberValue> values;

  int dim() const { return static_cast<int>(center.size()); }
  double spacing() const { return res > 1 ? 2.0 * radius / (res - 1) : 0.0; }
  /// Flat index of a node multi-index; -1 when off the grid.
  int index(const std::vector<int>& multi) const;
  std::vector<int> multi_index(int flat) const;
};

/// Node layout of a grid; values are left empty.
LocalSectionGrid grid_geometry(const manifold::Domain& domain, int chart, const Point& center, double radius, int res,
                               const ActionSpec& action);

/// s0(u) = transport of e0 along the chord from the center to u.
LocalSectionGrid radial_extend(const ConnectionSpec& conn, const ActionSpec& action, int chart, const Point& center,
                               double radius, const FiberValue& e0, int res, const Options& opts = {});
/// Value of the radially extended section at an arbitrary point of the ball.
FiberValue radial_value(const ConnectionSpec& conn, const LocalSectionGrid& grid, const Point& x,
                        const Options& opts = {});

/// Max over interior nodes and axis directions of
/// |transport(s(x), x -> x + h v) - s(x + h v)| / h, with h the grid spacing.
double parallelism_check(const ConnectionSpec& conn, const LocalSectionGrid& grid, const Options& opts = {});

/// Max fiber distance between transports of f0 along each path pair.
double path_independence_probe(const ConnectionSpec& conn, const ActionSpec& action, const FiberValue& f0,
                               const std::vector<std::pair<PathSpec, PathSpec>>& pairs, const Options& opts = {});

}  // namespace bundlekit::transport
