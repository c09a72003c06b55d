#pragma once

// Chart atlases, transition maps, paths and metrics.
//
// Every chart uses coordinate names x1..xn. A transition from chart a to
// chart b is a list of pieces, because two charts may overlap in several
// components (the two ends of an angular chart, the wrap-around of a torus
// chart). Pieces a->b and b->a are index-aligned inverses.

#include "bundlekit/defects.hpp"
#include "bundlekit/expr.hpp"
#include "bundlekit/program.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bundlekit::manifold {

using Point = Eigen::VectorXd;
using expr::Expr;

inline constexpr double kTransitionTol = 1e-9;
inline constexpr double kTripleTol = 1e-8;

std::vector<std::string> coordinate_names(int dim);

/// Halton points with a seeded Cranley-Patterson rotation.
class Sampler {
 public:
  Sampler(int dim, std::uint64_t seed);
  Eigen::VectorXd next();  // in [0,1)^dim

 private:
  int dim_;
  std::uint64_t index_ = 1;
  Eigen::VectorXd shift_;
};

struct Domain {
  enum class Kind { Box, Ball };
  Kind kind = Kind::Box;
  Eigen::VectorXd lo, hi;  // box
  Eigen::VectorXd center;  // ball
  double radius = 0.0;

  static Domain box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static Domain ball(Eigen::VectorXd center, double radius);

  int dim() const { return static_cast<int>(kind == Kind::Box ? lo.size() : center.size()); }
  /// Open-set membership with an inward safety margin.
  bool contains(const Point& x, double margin = 0.0) const;
  Point middle() const;
  /// Distance from an interior point to the boundary.
  double boundary_distance(const Point& x) const;
  /// Maps a unit-cube sample into the domain, shrunk by `shrink` (0..1).
  std::optional<Point> from_unit(const Eigen::VectorXd& u, double shrink = 1.0) const;
};

struct Chart {
  std::string id;
  Domain domain;
};

struct TransitionPiece {
  int from = 0;
  int to = 0;
  std::vector<Expr> predicates;  // in `from` coords, each must be > 0
  std::vector<Expr> map;         // `to` coords in terms of `from` coords
  std::vector<int> lattice;      // deck translation carried by the piece, if any

  expr::Program map_program;
  expr::Program predicate_program;
  expr::Program jacobian_program;  // row-major d map_i / d x_j
};

struct ChartPoint {
  int chart = 0;
  Point x;
};

class Atlas;

struct PathSegment {
  int chart = 0;
  double t0 = 0.0;
  double t1 = 1.0;
  std::vector<Expr> coords;  // functions of t
  expr::Program position;    // t -> x
  expr::Program velocity;    // t -> dx/dt
  // Straight segments skip the expression layer: x = a + (t - t0)/(t1 - t0) (b - a).
  bool straight = false;
  Point a, b;

  Point pos(double t) const;
  Point vel(double t) const;
};

struct Junction {
  double t = 0.0;
  int from_chart = 0;
  int to_chart = 0;
  int piece = -1;  // index into Atlas::pieces()
  Point x_from, x_to;
};

class PathSpec {
 public:
  struct SegmentDecl {
    std::string chart;
    double t0, t1;
    std::vector<Expr> coords;
  };

  static PathSpec build(const Atlas& atlas, std::string name, const std::vector<SegmentDecl>& segments,
                        int samples_per_segment = 64);
  /// Sequence of straight chord segments through chart points; consecutive
  /// points in different charts are joined through the transition at the
  /// shared point.
  static PathSpec polyline(const Atlas& atlas, std::string name, const std::vector<ChartPoint>& nodes);

  const std::string& name() const noexcept { return name_; }
  const std::vector<PathSegment>& segments() const noexcept { return segments_; }
  const std::vector<Junction>& junctions() const noexcept { return junctions_; }
  ChartPoint start() const;
  ChartPoint end() const;
  double t_begin() const { return segments_.front().t0; }
  double t_end() const { return segments_.back().t1; }

  PathSpec reversed(const Atlas& atlas) const;
  /// Follows `first` and then `second`; the end of `first` must match the
  /// start of `second` in the same chart.
  static PathSpec concat(const Atlas& atlas, const PathSpec& first, const PathSpec& second);

  /// Largest mismatch at junctions after applying the transition map.
  double junction_defect(const Atlas& atlas) const;

 private:
  std::string name_;
  std::vector<PathSegment> segments_;
  std::vector<Junction> junctions_;
};

class Atlas {
 public:
  Atlas(std::string name, int dim, std::vector<Chart> charts);

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  const std::vector<Chart>& charts() const noexcept { return charts_; }
  const Chart& chart(int i) const { return charts_.at(static_cast<std::size_t>(i)); }
  int chart_index(const std::string& id) const;  // throws ReferenceError

  /// Adds a piece a->b (with optional b->a inverse). Returns its index.
  int add_piece(int from, int to, std::vector<Expr> map, std::vector<Expr> predicates = {},
                std::vector<int> lattice = {});
  /// Adds the pair a->b and b->a; the reverse piece index is forward + 1.
  void add_piece_pair(int a, int b, std::vector<Expr> forward, std::vector<Expr> backward,
                      std::vector<Expr> fwd_predicates = {}, std::vector<Expr> bwd_predicates = {},
                      std::vector<int> lattice = {});
  const std::vector<TransitionPiece>& pieces() const noexcept { return pieces_; }
  const TransitionPiece& piece(int i) const { return pieces_.at(static_cast<std::size_t>(i)); }
  /// Index of the inverse piece (b->a) for piece i, or -1.
  int reverse_piece(int i) const { return reverse_.at(static_cast<std::size_t>(i)); }
  std::vector<int> pieces_between(int from, int to) const;

  bool piece_applies(int piece, const Point& x, double margin = 0.0) const;
  Point apply(int piece, const Point& x) const;
  Eigen::MatrixXd jacobian(int piece, const Point& x) const;
  /// Piece from `from` to `to` whose overlap contains x, if any.
  std::optional<int> find_piece(int from, int to, const Point& x, double margin = 0.0) const;
  /// Sample points of the overlap of piece i (in `from` coordinates).
  std::vector<Point> sample_overlap(int piece, int count, std::uint64_t seed, double margin = 0.0) const;

  ChartPoint basepoint;
  std::vector<PathSpec> loop_generators;
  bool simply_connected = false;
  /// Preferred radial-extension centre per chart (defaults to domain middle).
  std::vector<Point> anchors;

 private:
  std::string name_;
  int dim_;
  std::vector<Chart> charts_;
  std::vector<TransitionPiece> pieces_;
  std::vector<int> reverse_;
};

using AtlasPtr = std::shared_ptr<const Atlas>;

/// Symmetric positive-definite metric per chart.
struct Metric {
  std::vector<std::vector<Expr>> entries;  // per chart, row-major n*n
  std::vector<expr::Program> programs;

  static Metric make(const Atlas& atlas, std::vector<std::vector<Expr>> per_chart);
  Eigen::MatrixXd at(int chart, const Point& x) const;
};

/// A map between manifolds given chart by chart: each source chart is sent
/// into one assigned target chart by target-dimension Expr entries in the
/// source coordinates.
struct ChartMap {
  AtlasPtr source;
  AtlasPtr target;
  std::vector<int> target_chart;             // per source chart
  std::vector<std::vector<Expr>> components;  // per source chart
  std::vector<expr::Program> programs;
  std::vector<expr::Program> jacobians;       // row-major target_dim x source_dim

  static ChartMap make(AtlasPtr source, AtlasPtr target, std::vector<int> target_chart,
                       std::vector<std::vector<Expr>> components);
  static ChartMap identity(AtlasPtr atlas);
  Point apply(int chart, const Point& x) const;
  Eigen::MatrixXd jacobian(int chart, const Point& x) const;
  /// Composition (this after first): x -> this(first(x)).
  ChartMap after(const ChartMap& first) const;
  /// Throws ChartAssignmentError if a sampled image leaves its target chart.
  void check_assignment(int samples, std::uint64_t seed) const;
};

/// Inverse-composition, triple-overlap and declared-path junction defects.
DefectReport validate_atlas(const Atlas& atlas, int samples, std::uint64_t seed = 1);

/// Max over samples of |J^T (g' o phi) J - g|_F.
double pullback_metric_defect(const Metric& g_source, const Metric& g_target, const ChartMap& phi, int samples,
                              std::uint64_t seed = 1);
double pullback_metric_defect(const Metric& g, const ChartMap& phi, int samples, std::uint64_t seed = 1);

enum class CatalogName { Disk, Annulus, Circle, Torus, TwoChartSphere, Plane };

struct CatalogEntry {
  AtlasPtr atlas;
  std::optional<Metric> metric;
};

CatalogName parse_catalog_name(const std::string& name);  // throws UnknownCatalogEntry
std::string to_string(CatalogName name);
/// Recognized parameters: Disk r; Plane extent; Annulus r_in, r_out;
/// TwoChartSphere R. Unlisted parameters use defaults.
CatalogEntry catalog_instantiate(CatalogName name, const std::map<std::string, double>& params = {});

}  // namespace bundlekit::manifold
