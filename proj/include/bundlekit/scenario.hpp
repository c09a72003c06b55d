#pragma once

// Scenario files: sectioned key = value text (grammar in docs/grammar.md).
// Sections are read top to bottom and may only refer to objects declared
// above them. Everything is validated while loading.

#include "bundlekit/quotient.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bundlekit::scenario {

using bundle::ActionSpec;
using bundle::BundlePtr;
using bundle::ConnectionPtr;
using bundle::FiberValue;
using bundle::GaugePtr;
using manifold::AtlasPtr;

struct Tolerances {
  double germ = germs::kGermTol;
  double glue = germs::kGlueTol;
  double intertwine = intertwiner::kIntertwineTol;
  double local_match = intertwiner::kLocalMatchTol;
  double quot = quotient::kQuotTol;
  double roundtrip = quotient::kRoundtripTol;
  double holonomy = 1e-8;
  double witness = 1e-6;
  double parallel = 1e-6;
};

struct Entry {
  std::vector<std::string> key;  // whitespace-separated tokens left of '='
  std::string value;
  int line = 0;
  int column = 0;  // 1-based column where the value starts
};

struct Section {
  std::string kind;
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

/// Splits text into sections. Throws SyntaxError with a line number.
std::vector<Section> split_sections(std::string_view text);

struct AtlasDecl {
  manifold::CatalogName catalog = manifold::CatalogName::Disk;
  AtlasPtr atlas;
  std::optional<manifold::Metric> metric;
};

struct ActionDecl {
  ActionSpec spec;
  std::optional<FiberValue> seed;
  std::string connection;  // may be empty
  int max_sheets = 64;
};

struct PathDecl {
  std::string atlas;
  manifold::PathSpec path;
};

struct MapDecl {
  std::string source, target;
  manifold::ChartMap map;
};

struct IntertwinerDecl {
  std::string connection;
  std::string connection_prime;
  std::string map;        // empty for an id-covering intertwiner
  std::string reference;  // gauge the extension is compared against, if any
  intertwiner::IntertwinerData data;
};

struct QuotientDecl {
  std::string cover;   // connection name on the cover
  std::string target;  // atlas name
  std::string action;  // optional, for the sheet cross-check
  quotient::Cover cover_data;
  quotient::DeckAction deck;
  quotient::QuotientTriple triple;
};

struct Expectation {
  std::vector<std::string> key;
  std::string value;
  int line = 0;
};

struct Scenario {
  std::string name;
  std::string file;
  std::uint64_t seed = 1;
  int steps = transport::kDefaultStepsPerUnit;  // per unit parameter length
  int samples = 32;
  int res = 21;
  std::map<std::string, double> params;
  Tolerances tol;
  /// Scenario-level choices (connection, action, loop, path, intertwiner,
  /// homogeneity) for commands that need one object of a kind.
  std::map<std::string, std::string> defaults;

  std::map<std::string, AtlasDecl> atlases;
  std::map<std::string, BundlePtr> bundles;
  std::map<std::string, ConnectionPtr> connections;
  std::map<std::string, GaugePtr> gauges;
  std::map<std::string, ActionDecl> actions;
  std::map<std::string, PathDecl> paths;
  std::map<std::string, MapDecl> maps;
  std::map<std::string, IntertwinerDecl> intertwiners;
  std::optional<QuotientDecl> quotient;
  std::map<std::string, quotient::HomogeneityCandidate> homogeneity;
  std::vector<Expectation> expectations;

  /// Every load-time check, prefixed by the object it belongs to.
  DefectReport validation;

  /// The object named by `defaults[key]`, or the only one declared.
  /// Throws ReferenceError otherwise.
  template <class T>
  const std::string& pick(const std::map<std::string, T>& decls, const std::string& key) const;

  const Expectation* expect(const std::vector<std::string>& key) const;
};

/// Overrides applied before validation; unset fields keep the file's values.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
};

Scenario parse(std::string_view text, const std::string& file = "<string>", const Overrides& over = {});
/// Throws IoError if the file cannot be read.
Scenario load(const std::string& path, const Overrides& over = {});

// ---------------------------------------------------------------- values

struct ValueContext {
  const std::map<std::string, double>* params = nullptr;
  std::vector<std::string> vars;
  int matrix_size = 1;
  std::optional<lie::GroupKind> group;  // for alg(...)
  int line = 0;
  int column = 0;
};

/// Expression with parameters substituted; errors report line and column.
expr::Expr parse_value_expr(std::string_view text, const ValueContext& ctx);
/// Matrix literal: [re | im, ... ; ...], phase(e), alg(c, ...), identity, zero.
expr::ExprMatrix parse_matrix(std::string_view text, const ValueContext& ctx);
/// Expressions separated by ';'.
std::vector<expr::Expr> parse_list(std::string_view text, const ValueContext& ctx);
lie::GroupKind parse_group(const std::string& text);

template <class T>
const std::string& Scenario::pick(const std::map<std::string, T>& decls, const std::string& key) const {
  if (const auto it = defaults.find(key); it != defaults.end()) {
    if (!decls.count(it->second)) fail(ErrorKind::ReferenceError, "no " + key + " named '" + it->second + "'");
    return decls.find(it->second)->first;
  }
  if (decls.size() == 1) return decls.begin()->first;
  if (decls.empty()) fail(ErrorKind::ReferenceError, "scenario declares no " + key);
  fail(ErrorKind::ReferenceError, "several " + key + " declarations; set " + key + " in [scenario]");
}

}  // namespace bundlekit::scenario
