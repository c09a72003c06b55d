#include "bundlekit/scenario.hpp"

#include "bundlekit/error.hpp"

#include <fstream>
#include <sstream>

namespace bundlekit::scenario {

namespace {

using expr::Expr;
using expr::ExprMatrix;

// An error that already carries its file location.
class Located : public Error {
 public:
  Located(ErrorKind kind, const std::string& message) : Error(kind, message) {}
};

std::string bare_message(const Error& e) {
  std::string msg = e.what();
  const std::string head(to_string(e.kind()));
  if (msg.rfind(head, 0) == 0) {
    msg.erase(0, head.size());
    if (msg.rfind(": ", 0) == 0) {
      msg.erase(0, 2);
    } else if (msg.rfind(" at offset ", 0) == 0) {
      const auto colon = msg.find(": ");
      msg.erase(0, colon == std::string::npos ? msg.size() : colon + 2);
    }
  }
  return msg;
}

[[noreturn]] void rethrow_at(const Error& e, int line, int column) {
  std::string where = "line " + std::to_string(line);
  if (column > 0) where += ", column " + std::to_string(column + static_cast<int>(e.offset().value_or(0)));
  throw Located(e.kind(), where + ": " + bare_message(e));
}

[[noreturn]] void fail_at(ErrorKind kind, int line, const std::string& msg) {
  throw Located(kind, "line " + std::to_string(line) + ": " + msg);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t lead(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  return b == std::string_view::npos ? s.size() : b;
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

struct Piece {
  std::string_view text;
  int offset = 0;
};

// Splits at `sep` outside of parentheses and brackets.
std::vector<Piece> split_top(std::string_view s, char sep) {
  std::vector<Piece> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == sep && depth == 0) {
      out.push_back({s.substr(start, i - start), static_cast<int>(start)});
      start = i + 1;
    }
  }
  out.push_back({s.substr(start), static_cast<int>(start)});
  return out;
}

ValueContext shifted(const ValueContext& ctx, int by) {
  ValueContext c = ctx;
  c.column += by;
  return c;
}

bool call_form(std::string_view t, std::string_view name, std::string_view& inner) {
  if (t.size() < name.size() + 2 || t.substr(0, name.size()) != name || t.back() != ')') return false;
  const auto rest = trim(t.substr(name.size()));
  if (rest.empty() || rest.front() != '(') return false;
  // The opening parenthesis must close at the very end.
  int depth = 0;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    if (rest[i] == '(') ++depth;
    if (rest[i] == ')' && --depth == 0 && i + 1 != rest.size()) return false;
  }
  inner = rest.substr(1, rest.size() - 2);
  return true;
}

int inner_offset(std::string_view outer, std::string_view inner) { return static_cast<int>(inner.data() - outer.data()); }

double number(const Entry& e, const std::map<std::string, double>& params) {
  ValueContext ctx{&params, {}, 1, std::nullopt, e.line, e.column};
  return expr::eval(parse_value_expr(e.value, ctx), {});
}

int integer(const Entry& e, const std::map<std::string, double>& params) {
  const double v = number(e, params);
  if (v != static_cast<double>(static_cast<long long>(v))) fail_at(ErrorKind::InvalidParams, e.line, "expected an integer");
  return static_cast<int>(v);
}

manifold::Point constant_point(std::string_view text, const ValueContext& ctx) {
  const auto list = parse_list(text, ctx);
  manifold::Point p(static_cast<Eigen::Index>(list.size()));
  for (std::size_t i = 0; i < list.size(); ++i) p[static_cast<Eigen::Index>(i)] = expr::eval(list[i], {});
  return p;
}

void absorb(DefectReport& into, const DefectReport& from, const std::string& prefix, int line) {
  for (const auto& c : from.checks) {
    into.add(prefix + c.name, c.value, c.tol);
    if (!c.pass()) {
      std::ostringstream msg;
      msg.precision(6);
      msg << "check " << prefix << c.name << " = " << c.value << " exceeds " << c.tol;
      fail_at(ErrorKind::InvariantFailure, line, msg.str());
    }
  }
}

template <class T>
const T& lookup(const std::map<std::string, T>& m, const std::string& name, const std::string& what, int line) {
  const auto it = m.find(name);
  if (it == m.end()) fail_at(ErrorKind::ReferenceError, line, "unknown " + what + " '" + name + "'");
  return it->second;
}

ActionSpec::Kind action_kind(const std::string& s, int line) {
  if (s == "left") return ActionSpec::Kind::GroupLeft;
  if (s == "linear") return ActionSpec::Kind::LinearRho;
  if (s == "tau") return ActionSpec::Kind::GroupTau;
  fail_at(ErrorKind::SyntaxError, line, "action kind must be left, linear or tau");
}

// ---------------------------------------------------------------- loader

class Loader {
 public:
  Loader(Scenario& sc, const Overrides& over) : sc_(sc), over_(over) {}

  void run(const std::vector<Section>& sections) {
    for (const auto& s : sections) {
      try {
        section(s);
      } catch (const Located&) {
        throw;
      } catch (const Error& e) {
        rethrow_at(e, s.line, 0);
      }
    }
  }

 private:
  Scenario& sc_;
  const Overrides& over_;
  bool saw_header_ = false;

  ValueContext ctx(const Entry& e, int dim = 0, int n = 1, std::optional<lie::GroupKind> g = std::nullopt) const {
    return {&sc_.params, dim > 0 ? manifold::coordinate_names(dim) : std::vector<std::string>{}, n, std::move(g),
            e.line, e.column};
  }

  static void unknown_key(const Entry& e, const Section& s) {
    std::string key;
    for (const auto& k : e.key) key += (key.empty() ? "" : " ") + k;
    fail_at(ErrorKind::SyntaxError, e.line, "unknown key '" + key + "' in [" + s.kind + "]");
  }

  static const Entry* find(const Section& s, const std::string& key) {
    for (const auto& e : s.entries) {
      if (e.key.size() == 1 && e.key[0] == key) return &e;
    }
    return nullptr;
  }
  static const Entry& require(const Section& s, const std::string& key) {
    const Entry* e = find(s, key);
    if (!e) fail_at(ErrorKind::ReferenceError, s.line, "[" + s.kind + " " + s.name + "] needs '" + key + "'");
    return *e;
  }
  static std::string word(const Entry& e) {
    const auto t = tokens(e.value);
    if (t.size() != 1) fail_at(ErrorKind::SyntaxError, e.line, "expected a single name");
    return t[0];
  }
  void require_name(const Section& s) const {
    if (s.name.empty()) fail_at(ErrorKind::SyntaxError, s.line, "[" + s.kind + "] needs a name");
  }

  void section(const Section& s) {
    if (s.kind == "scenario") return header(s);
    if (s.kind == "params") return params(s);
    if (s.kind == "tolerances") return tolerances(s);
    if (s.kind == "atlas") return atlas(s);
    if (s.kind == "bundle") return bundle_section(s);
    if (s.kind == "connection") return connection(s);
    if (s.kind == "gauge") return gauge(s);
    if (s.kind == "action") return action(s);
    if (s.kind == "path") return path(s);
    if (s.kind == "map") return map(s);
    if (s.kind == "intertwiner") return intertwiner_section(s);
    if (s.kind == "quotient") return quotient_section(s);
    if (s.kind == "homogeneity") return homogeneity(s);
    if (s.kind == "expect") return expect(s);
    fail_at(ErrorKind::SyntaxError, s.line, "unknown section [" + s.kind + "]");
  }

  void header(const Section& s) {
    if (saw_header_) fail_at(ErrorKind::SyntaxError, s.line, "second [scenario] section");
    saw_header_ = true;
    static const std::vector<std::string> choices{"connection", "action", "loop", "path", "intertwiner",
                                                  "homogeneity"};
    for (const auto& e : s.entries) {
      if (e.key.size() != 1) unknown_key(e, s);
      const auto& k = e.key[0];
      if (k == "name") {
        sc_.name = std::string(trim(e.value));
      } else if (k == "seed") {
        sc_.seed = static_cast<std::uint64_t>(integer(e, sc_.params));
      } else if (k == "steps") {
        sc_.steps = integer(e, sc_.params);
      } else if (k == "samples") {
        sc_.samples = integer(e, sc_.params);
      } else if (k == "res") {
        sc_.res = integer(e, sc_.params);
      } else if (std::find(choices.begin(), choices.end(), k) != choices.end()) {
        sc_.defaults[k] = word(e);
      } else {
        unknown_key(e, s);
      }
    }
    if (over_.seed) sc_.seed = *over_.seed;
    if (over_.samples) sc_.samples = *over_.samples;
    if (sc_.steps < 1 || sc_.samples < 1 || sc_.res < 3) {
      fail_at(ErrorKind::InvalidParams, s.line, "steps and samples must be positive and res at least 3");
    }
  }

  void params(const Section& s) {
    for (const auto& e : s.entries) {
      if (e.key.size() != 1) unknown_key(e, s);
      sc_.params[e.key[0]] = number(e, sc_.params);
    }
  }

  void tolerances(const Section& s) {
    auto& t = sc_.tol;
    const std::map<std::string, double*> slots{{"germ", &t.germ},         {"glue", &t.glue},
                                               {"intertwine", &t.intertwine}, {"local_match", &t.local_match},
                                               {"quot", &t.quot},         {"roundtrip", &t.roundtrip},
                                               {"holonomy", &t.holonomy}, {"witness", &t.witness},
                                               {"parallel", &t.parallel}};
    for (const auto& e : s.entries) {
      if (e.key.size() != 1 || !slots.count(e.key[0])) unknown_key(e, s);
      const double v = number(e, sc_.params);
      if (!(v > 0.0)) fail_at(ErrorKind::InvalidParams, e.line, "tolerances must be positive");
      *slots.at(e.key[0]) = v;
    }
  }

  void atlas(const Section& s) {
    require_name(s);
    AtlasDecl d;
    d.catalog = manifold::parse_catalog_name(word(require(s, "catalog")));
    std::map<std::string, double> p;
    for (const auto& e : s.entries) {
      if (e.key.size() != 1) unknown_key(e, s);
      if (e.key[0] != "catalog") p[e.key[0]] = number(e, sc_.params);
    }
    auto entry = manifold::catalog_instantiate(d.catalog, p);
    d.atlas = entry.atlas;
    d.metric = entry.metric;
    absorb(sc_.validation, manifold::validate_atlas(*d.atlas, sc_.samples, sc_.seed), "atlas." + s.name + ".", s.line);
    sc_.atlases[s.name] = std::move(d);
  }

  void bundle_section(const Section& s) {
    require_name(s);
    const auto& a = lookup(sc_.atlases, word(require(s, "atlas")), "atlas", s.line).atlas;
    const auto group = parse_group(word(require(s, "group")));
    std::vector<std::optional<ExprMatrix>> cocycle(a->pieces().size());
    for (const auto& e : s.entries) {
      if (e.key.size() == 1 && (e.key[0] == "atlas" || e.key[0] == "group")) continue;
      if (e.key.empty() || e.key[0] != "g" || e.key.size() < 3 || e.key.size() > 4) unknown_key(e, s);
      try {
        const int from = a->chart_index(e.key[1]);
        const int to = a->chart_index(e.key[2]);
        auto pieces = a->pieces_between(from, to);
        if (pieces.empty()) fail_at(ErrorKind::ReferenceError, e.line, "charts " + e.key[1] + " and " + e.key[2] + " do not overlap");
        if (e.key.size() == 4) {
          const int k = std::stoi(e.key[3]);
          if (k < 0 || k >= static_cast<int>(pieces.size())) {
            fail_at(ErrorKind::ReferenceError, e.line, "no overlap piece " + e.key[3] + " between " + e.key[1] + " and " + e.key[2]);
          }
          pieces = {pieces[static_cast<std::size_t>(k)]};
        }
        const auto m = parse_matrix(e.value, ctx(e, a->dim(), group.matrix_size(), group));
        for (int p : pieces) cocycle[static_cast<std::size_t>(p)] = m;
      } catch (const Located&) {
        throw;
      } catch (const std::invalid_argument&) {
        fail_at(ErrorKind::SyntaxError, e.line, "piece index must be an integer");
      } catch (const Error& err) {
        rethrow_at(err, e.line, 0);
      }
    }
    auto b = bundle::BundleSpec::make(a, group, std::move(cocycle));
    absorb(sc_.validation, b->validate(sc_.samples, sc_.seed), "bundle." + s.name + ".", s.line);
    sc_.bundles[s.name] = b;
  }

  void connection(const Section& s) {
    require_name(s);
    ConnectionPtr c;
    if (const Entry* from = find(s, "from")) {
      const auto& base = lookup(sc_.connections, word(*from), "connection", from->line);
      const auto& u = lookup(sc_.gauges, word(require(s, "gauge")), "gauge", s.line);
      if (u->bundle() != base->bundle()) fail_at(ErrorKind::AtlasMismatch, s.line, "gauge and connection live on different bundles");
      for (const auto& e : s.entries) {
        if (e.key.size() != 1 || (e.key[0] != "from" && e.key[0] != "gauge")) unknown_key(e, s);
      }
      c = bundle::apply_gauge(*base, *u);
    } else {
      const auto& b = lookup(sc_.bundles, word(require(s, "bundle")), "bundle", s.line);
      const auto& a = *b->atlas();
      const int n = b->group().matrix_size();
      std::vector<std::vector<ExprMatrix>> forms(a.charts().size(),
                                                 std::vector<ExprMatrix>(static_cast<std::size_t>(a.dim()), ExprMatrix::zero(n, n)));
      const auto names = manifold::coordinate_names(a.dim());
      for (const auto& e : s.entries) {
        if (e.key.size() == 1 && e.key[0] == "bundle") continue;
        if (e.key.size() != 2) unknown_key(e, s);
        try {
          const int chart = a.chart_index(e.key[0]);
          const auto it = std::find(names.begin(), names.end(), e.key[1]);
          if (it == names.end()) fail_at(ErrorKind::ReferenceError, e.line, "unknown coordinate '" + e.key[1] + "'");
          forms[static_cast<std::size_t>(chart)][static_cast<std::size_t>(it - names.begin())] =
              parse_matrix(e.value, ctx(e, a.dim(), n, b->group()));
        } catch (const Located&) {
          throw;
        } catch (const Error& err) {
          rethrow_at(err, e.line, 0);
        }
      }
      c = bundle::ConnectionSpec::make(b, std::move(forms));
    }
    absorb(sc_.validation, c->validate(sc_.samples, sc_.seed), "connection." + s.name + ".", s.line);
    sc_.connections[s.name] = c;
  }

  void gauge(const Section& s) {
    require_name(s);
    const auto& b = lookup(sc_.bundles, word(require(s, "bundle")), "bundle", s.line);
    const auto& a = *b->atlas();
    const int n = b->group().matrix_size();
    std::vector<ExprMatrix> maps(a.charts().size(), ExprMatrix::identity(n));
    for (const auto& e : s.entries) {
      if (e.key.size() == 1 && e.key[0] == "bundle") continue;
      if (e.key.size() != 1) unknown_key(e, s);
      try {
        maps[static_cast<std::size_t>(a.chart_index(e.key[0]))] = parse_matrix(e.value, ctx(e, a.dim(), n, b->group()));
      } catch (const Located&) {
        throw;
      } catch (const Error& err) {
        rethrow_at(err, e.line, 0);
      }
    }
    auto u = bundle::GaugeTransform::make(b, std::move(maps));
    absorb(sc_.validation, u->validate(sc_.samples, sc_.seed), "gauge." + s.name + ".", s.line);
    sc_.gauges[s.name] = u;
  }

  void action(const Section& s) {
    require_name(s);
    ActionDecl d;
    const Entry* kind = find(s, "kind");
    d.spec.kind = kind ? action_kind(word(*kind), kind->line) : ActionSpec::Kind::GroupLeft;
    if (const Entry* c = find(s, "connection")) {
      d.connection = word(*c);
      lookup(sc_.connections, d.connection, "connection", c->line);
    }
    std::optional<lie::GroupKind> group;
    if (const Entry* g = find(s, "group")) {
      group = parse_group(word(*g));
    } else if (!d.connection.empty()) {
      group = sc_.connections.at(d.connection)->group();
      if (d.spec.kind == ActionSpec::Kind::GroupTau) {
        if (group->factors().size() != 2) fail_at(ErrorKind::ShapeMismatch, s.line, "tau action needs a product connection");
        group = group->factors()[0];
      }
    } else {
      fail_at(ErrorKind::ReferenceError, s.line, "[action " + s.name + "] needs 'group' or 'connection'");
    }
    if (const Entry* r = find(s, "rep")) {
      const auto rep = word(*r);
      if (rep == "defining") {
        d.spec.rep = ActionSpec::Rep::Defining;
      } else if (rep == "adjoint") {
        d.spec.rep = ActionSpec::Rep::Adjoint;
      } else {
        fail_at(ErrorKind::SyntaxError, r->line, "rep must be defining or adjoint");
      }
    }
    d.spec.group = d.spec.kind == ActionSpec::Kind::GroupTau ? lie::GroupKind::product(*group, *group) : *group;
    if (!d.connection.empty() && sc_.connections.at(d.connection)->group() != d.spec.group) {
      fail_at(ErrorKind::ShapeMismatch, s.line, "action group differs from the connection group");
    }
    if (const Entry* m = find(s, "max_sheets")) d.max_sheets = integer(*m, sc_.params);
    if (const Entry* e = find(s, "seed")) {
      const auto [rows, cols] = d.spec.fiber_shape();
      const auto fiber_group = d.spec.kind == ActionSpec::Kind::LinearRho ? *group : d.spec.fiber_group();
      const FiberValue v = parse_matrix(e->value, ctx(*e, 0, rows, fiber_group)).eval({});
      if (v.rows() != rows || v.cols() != cols) fail_at(ErrorKind::ShapeMismatch, e->line, "seed has the wrong shape for the fiber");
      if (d.spec.kind != ActionSpec::Kind::LinearRho && lie::group_defect(fiber_group, v) > lie::kGroupTol) {
        fail_at(ErrorKind::MembershipViolation, e->line, "seed is not in " + fiber_group.label());
      }
      d.seed = v;
    }
    for (const auto& e : s.entries) {
      static const std::vector<std::string> keys{"kind", "group", "rep", "seed", "connection", "max_sheets"};
      if (e.key.size() != 1 || std::find(keys.begin(), keys.end(), e.key[0]) == keys.end()) unknown_key(e, s);
    }
    DefectReport r;
    r.add("axioms", bundle::action_axiom_defect(d.spec, 8, sc_.seed), 1e-9);
    absorb(sc_.validation, r, "action." + s.name + ".", s.line);
    sc_.actions[s.name] = std::move(d);
  }

  void path(const Section& s) {
    require_name(s);
    PathDecl d;
    d.atlas = word(require(s, "atlas"));
    const auto& a = *lookup(sc_.atlases, d.atlas, "atlas", s.line).atlas;
    std::vector<manifold::ChartPoint> nodes;
    std::vector<manifold::PathSpec::SegmentDecl> segments;
    std::optional<manifold::PathSpec> generator;
    for (const auto& e : s.entries) {
      if (e.key.size() == 1 && e.key[0] == "atlas") continue;
      try {
        if (e.key.size() == 1 && e.key[0] == "generator") {
          const auto g = word(e);
          for (const auto& gen : a.loop_generators) {
            if (gen.name() == g) generator = gen;
          }
          if (!generator) fail_at(ErrorKind::ReferenceError, e.line, "atlas " + d.atlas + " has no loop generator '" + g + "'");
        } else if (e.key.size() == 2 && e.key[0] == "node") {
          nodes.push_back({a.chart_index(e.key[1]), constant_point(e.value, ctx(e))});
        } else if (e.key.size() == 2 && e.key[0] == "segment") {
          const auto parts = split_top(e.value, ':');
          const auto range = split_top(parts[0].text, ',');
          if (parts.size() != 2 || range.size() != 2) fail_at(ErrorKind::SyntaxError, e.line, "segment needs 't0, t1 : coordinates'");
          manifold::PathSpec::SegmentDecl seg;
          seg.chart = e.key[1];
          a.chart_index(seg.chart);
          seg.t0 = expr::eval(parse_value_expr(range[0].text, shifted(ctx(e), range[0].offset)), {});
          seg.t1 = expr::eval(parse_value_expr(range[1].text, shifted(ctx(e), range[1].offset)), {});
          auto tctx = shifted(ctx(e), parts[1].offset);
          tctx.vars = {"t"};
          seg.coords = parse_list(parts[1].text, tctx);
          segments.push_back(std::move(seg));
        } else {
          unknown_key(e, s);
        }
      } catch (const Located&) {
        throw;
      } catch (const Error& err) {
        rethrow_at(err, e.line, 0);
      }
    }
    const int kinds = (generator ? 1 : 0) + (nodes.empty() ? 0 : 1) + (segments.empty() ? 0 : 1);
    if (kinds != 1) fail_at(ErrorKind::SyntaxError, s.line, "a path is either a generator, nodes or segments");
    if (generator) {
      d.path = *generator;
    } else if (!nodes.empty()) {
      d.path = manifold::PathSpec::polyline(a, s.name, nodes);
    } else {
      d.path = manifold::PathSpec::build(a, s.name, segments);
    }
    DefectReport r;
    r.add("junctions", d.path.junction_defect(a), 1e-8);
    absorb(sc_.validation, r, "path." + s.name + ".", s.line);
    sc_.paths.emplace(s.name, std::move(d));
  }

  void map(const Section& s) {
    require_name(s);
    MapDecl d;
    d.source = word(require(s, "source"));
    d.target = word(require(s, "target"));
    const auto& src = lookup(sc_.atlases, d.source, "atlas", s.line).atlas;
    const auto& tgt = lookup(sc_.atlases, d.target, "atlas", s.line).atlas;
    std::vector<int> assigned(src->charts().size(), -1);
    std::vector<std::vector<Expr>> comps(src->charts().size());
    for (const auto& e : s.entries) {
      if (e.key.size() == 1 && (e.key[0] == "source" || e.key[0] == "target")) continue;
      if (e.key.size() != 1) unknown_key(e, s);
      try {
        const auto c = static_cast<std::size_t>(src->chart_index(e.key[0]));
        const auto parts = split_top(e.value, ':');
        if (parts.size() != 2) fail_at(ErrorKind::SyntaxError, e.line, "map entry needs 'target chart : coordinates'");
        assigned[c] = tgt->chart_index(std::string(trim(parts[0].text)));
        comps[c] = parse_list(parts[1].text, shifted(ctx(e, src->dim()), parts[1].offset));
      } catch (const Located&) {
        throw;
      } catch (const Error& err) {
        rethrow_at(err, e.line, 0);
      }
    }
    for (std::size_t c = 0; c < assigned.size(); ++c) {
      if (assigned[c] < 0) fail_at(ErrorKind::ReferenceError, s.line, "map " + s.name + " has no entry for chart " + src->chart(static_cast<int>(c)).id);
    }
    d.map = manifold::ChartMap::make(src, tgt, std::move(assigned), std::move(comps));
    d.map.check_assignment(sc_.samples, sc_.seed);
    sc_.maps.emplace(s.name, std::move(d));
  }

  void intertwiner_section(const Section& s) {
    require_name(s);
    IntertwinerDecl d;
    d.connection = word(require(s, "connection"));
    d.connection_prime = word(require(s, "connection_prime"));
    const auto& c = lookup(sc_.connections, d.connection, "connection", s.line);
    const auto& cp = lookup(sc_.connections, d.connection_prime, "connection", s.line);
    if (const Entry* m = find(s, "map")) {
      d.map = word(*m);
      const auto& md = lookup(sc_.maps, d.map, "map", m->line);
      if (md.map.source != c->atlas() || md.map.target != cp->atlas()) {
        fail_at(ErrorKind::AtlasMismatch, m->line, "map must go from the atlas of connection to that of connection_prime");
      }
    }
    if (const Entry* r = find(s, "reference")) {
      d.reference = word(*r);
      const auto& u = lookup(sc_.gauges, d.reference, "gauge", r->line);
      if (u->bundle() != c->bundle()) fail_at(ErrorKind::AtlasMismatch, r->line, "reference gauge lives on another bundle");
    }
    const auto& a = *c->atlas();
    const auto& group = c->group();
    std::vector<std::optional<ExprMatrix>> u(a.charts().size());
    std::vector<intertwiner::Region> regions;
    static const std::vector<std::string> keys{"connection", "connection_prime", "map", "reference"};
    for (const auto& e : s.entries) {
      if (e.key.size() == 1 && std::find(keys.begin(), keys.end(), e.key[0]) != keys.end()) continue;
      try {
        if (e.key.size() == 2 && e.key[0] == "region") {
          intertwiner::Region r;
          r.chart = a.chart_index(e.key[1]);
          const auto parts = split_top(e.value, ',');
          if (parts.size() > 2) fail_at(ErrorKind::SyntaxError, e.line, "region needs 'centre [, radius]'");
          r.center = constant_point(parts[0].text, ctx(e));
          if (parts.size() == 2) r.radius = expr::eval(parse_value_expr(parts[1].text, shifted(ctx(e), parts[1].offset)), {});
          regions.push_back(std::move(r));
        } else if (e.key.size() == 1) {
          u[static_cast<std::size_t>(a.chart_index(e.key[0]))] =
              parse_matrix(e.value, ctx(e, a.dim(), group.matrix_size(), group));
        } else {
          unknown_key(e, s);
        }
      } catch (const Located&) {
        throw;
      } catch (const Error& err) {
        rethrow_at(err, e.line, 0);
      }
    }
    d.data = intertwiner::IntertwinerData::from_exprs(c->bundle(), cp->bundle(), std::move(u), std::move(regions));
    const std::string prefix = "intertwiner." + s.name + ".";
    if (d.map.empty()) {
      absorb(sc_.validation, d.data.validate(sc_.samples, sc_.seed), prefix, s.line);
    } else {
      const intertwiner::PhiCoveringData phi{sc_.maps.at(d.map).map, d.data};
      const auto reduced = intertwiner::reduce_to_id_covering(phi, *cp);
      absorb(sc_.validation, reduced.data.validate(sc_.samples, sc_.seed), prefix, s.line);
    }
    sc_.intertwiners.emplace(s.name, std::move(d));
  }

  void quotient_section(const Section& s) {
    if (sc_.quotient) fail_at(ErrorKind::SyntaxError, s.line, "only one [quotient] section is allowed");
    QuotientDecl d;
    d.cover = word(require(s, "cover"));
    d.target = word(require(s, "target"));
    const auto& conn = lookup(sc_.connections, d.cover, "connection", s.line);
    const AtlasDecl* cover_atlas = nullptr;
    for (const auto& [name, decl] : sc_.atlases) {
      if (decl.atlas == conn->atlas()) cover_atlas = &decl;
    }
    if (!cover_atlas || !cover_atlas->metric) fail_at(ErrorKind::InvariantFailure, s.line, "cover atlas has no metric");
    const auto& target = lookup(sc_.atlases, d.target, "atlas", s.line);
    if (const Entry* a = find(s, "action")) {
      d.action = word(*a);
      lookup(sc_.actions, d.action, "action", a->line);
    }
    d.cover_data = {*cover_atlas->metric, conn};
    const int dim = conn->atlas()->dim();
    const int n = conn->group().matrix_size();
    std::map<std::string, std::size_t> index;
    std::map<std::string, std::vector<Expr>> inverses;
    std::map<std::string, ExprMatrix> lifts;
    for (const auto& e : s.entries) {
      if (e.key.size() != 2 || e.key[0] != "generator") continue;
      if (index.count(e.key[1])) fail_at(ErrorKind::SyntaxError, e.line, "generator " + e.key[1] + " declared twice");
      index[e.key[1]] = d.deck.generators.size();
      d.deck.generators.push_back({e.key[1], parse_list(e.value, ctx(e, dim)), {}, ExprMatrix::identity(n)});
    }
    std::vector<std::pair<std::string, quotient::Word>> relations;
    static const std::vector<std::string> keys{"cover", "target", "action"};
    for (const auto& e : s.entries) {
      if (e.key.size() == 1 && std::find(keys.begin(), keys.end(), e.key[0]) != keys.end()) continue;
      if (e.key.size() != 2) unknown_key(e, s);
      const auto& k = e.key[0];
      if (k == "generator") continue;
      if (k == "relation") {
        quotient::Word w;
        for (const auto& t : tokens(e.value)) {
          const auto caret = t.find('^');
          const std::string g = t.substr(0, caret);
          int power = 1;
          if (caret != std::string::npos) {
            const auto p = t.substr(caret + 1);
            if (p == "-1") {
              power = -1;
            } else if (p != "1") {
              fail_at(ErrorKind::SyntaxError, e.line, "relation letters take the exponent 1 or -1");
            }
          }
          w.push_back({static_cast<int>(lookup(index, g, "generator", e.line)), power});
        }
        if (w.empty()) fail_at(ErrorKind::SyntaxError, e.line, "empty relation");
        d.deck.relations.push_back({e.key[1], std::move(w)});
        continue;
      }
      auto& gen = d.deck.generators[lookup(index, e.key[1], "generator", e.line)];
      if (k == "lift") {
        gen.lift = parse_matrix(e.value, ctx(e, dim, n, conn->group()));
      } else if (k == "inverse") {
        gen.inverse = parse_list(e.value, ctx(e, dim));
      } else {
        unknown_key(e, s);
      }
    }
    for (auto& g : d.deck.generators) {
      if (g.inverse.empty()) g.inverse = quotient::DeckAction::translation_inverse(g.map);
    }
    absorb(sc_.validation, quotient::check_lift_axioms(d.cover_data, d.deck, sc_.samples, sc_.seed), "quotient.", s.line);
    d.triple = quotient::build_quotient(d.cover_data, d.deck, target.atlas, sc_.tol.quot);
    absorb(sc_.validation, d.triple.bundle->validate(sc_.samples, sc_.seed), "quotient.bundle.", s.line);
    absorb(sc_.validation, d.triple.connection->validate(sc_.samples, sc_.seed), "quotient.connection.", s.line);
    sc_.quotient = std::move(d);
  }

  void homogeneity(const Section& s) {
    require_name(s);
    if (!sc_.quotient) fail_at(ErrorKind::ReferenceError, s.line, "[homogeneity] needs a [quotient] section above it");
    const auto& qt = sc_.quotient->triple;
    const auto& a = *qt.atlas;
    quotient::HomogeneityCandidate c;
    bool have_x = false, have_xp = false, have_iso = false;
    const int n = qt.connection->group().matrix_size();
    for (const auto& e : s.entries) {
      try {
        if (e.key.size() == 2 && (e.key[0] == "x" || e.key[0] == "x_prime")) {
          manifold::ChartPoint p{a.chart_index(e.key[1]), constant_point(e.value, ctx(e))};
          (e.key[0] == "x" ? c.x : c.x_prime) = p;
          (e.key[0] == "x" ? have_x : have_xp) = true;
        } else if (e.key.size() == 1 && e.key[0] == "iso") {
          c.iso = parse_list(e.value, ctx(e, a.dim()));
          have_iso = true;
        } else if (e.key.size() == 1 && e.key[0] == "radius") {
          c.radius = number(e, sc_.params);
        } else if (e.key.size() == 1 && e.key[0] == "phi") {
          c.phi = parse_matrix(e.value, ctx(e, a.dim(), n, qt.connection->group()));
        } else {
          unknown_key(e, s);
        }
      } catch (const Located&) {
        throw;
      } catch (const Error& err) {
        rethrow_at(err, e.line, 0);
      }
    }
    if (!have_x || !have_xp || !have_iso) fail_at(ErrorKind::ReferenceError, s.line, "[homogeneity] needs x, x_prime and iso");
    if (c.phi.rows() == 0) c.phi = ExprMatrix::identity(n);
    sc_.homogeneity.emplace(s.name, std::move(c));
  }

  void expect(const Section& s) {
    for (const auto& e : s.entries) sc_.expectations.push_back({e.key, std::string(trim(e.value)), e.line});
  }
};

}  // namespace

std::vector<Section> split_sections(std::string_view text) {
  std::vector<Section> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail_at(ErrorKind::SyntaxError, line_no, "unterminated section header");
      const auto head = tokens(t.substr(1, t.size() - 2));
      if (head.empty() || head.size() > 2) fail_at(ErrorKind::SyntaxError, line_no, "section header is '[kind name]'");
      out.push_back({head[0], head.size() == 2 ? head[1] : "", line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail_at(ErrorKind::SyntaxError, line_no, "expected 'key = value'");
    if (out.empty()) fail_at(ErrorKind::SyntaxError, line_no, "entry before the first section");
    Entry e;
    e.key = tokens(line.substr(0, eq));
    const auto rest = line.substr(eq + 1);
    e.value = std::string(trim(rest));
    e.line = line_no;
    e.column = static_cast<int>(eq + 2 + lead(rest));
    if (e.key.empty()) fail_at(ErrorKind::SyntaxError, line_no, "empty key");
    if (e.value.empty()) fail_at(ErrorKind::SyntaxError, line_no, "empty value");
    out.back().entries.push_back(std::move(e));
  }
  if (out.empty()) throw Located(ErrorKind::SyntaxError, "scenario is empty");
  return out;
}

Scenario parse(std::string_view text, const std::string& file, const Overrides& over) {
  Scenario sc;
  sc.file = file;
  const auto sections = split_sections(text);
  // The header is read first so its seed and sample count govern validation
  // however the file is ordered.
  Loader loader(sc, over);
  std::vector<Section> header, rest;
  for (const auto& s : sections) (s.kind == "scenario" ? header : rest).push_back(s);
  if (header.empty()) header.push_back({"scenario", "", 0, {}});
  // The parameter block may feed header values, so it goes first.
  std::vector<Section> ordered;
  for (const auto& s : rest) {
    if (s.kind == "params") ordered.push_back(s);
  }
  ordered.insert(ordered.end(), header.begin(), header.end());
  for (const auto& s : rest) {
    if (s.kind != "params") ordered.push_back(s);
  }
  loader.run(ordered);
  if (sc.name.empty()) {
    const auto slash = file.find_last_of('/');
    sc.name = slash == std::string::npos ? file : file.substr(slash + 1);
  }
  return sc;
}

Scenario load(const std::string& path, const Overrides& over) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path, over);
}

const Expectation* Scenario::expect(const std::vector<std::string>& key) const {
  for (const auto& e : expectations) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

// ---------------------------------------------------------------- values

expr::Expr parse_value_expr(std::string_view text, const ValueContext& ctx) {
  const auto off = static_cast<int>(lead(text));
  const auto t = trim(text);
  std::vector<std::string> declared = ctx.vars;
  std::map<std::string, Expr> subst;
  if (ctx.params) {
    for (const auto& [k, v] : *ctx.params) {
      declared.push_back(k);
      subst[k] = Expr::lit(v);
    }
  }
  try {
    if (t.empty()) fail(ErrorKind::SyntaxError, "empty expression");
    auto e = expr::parse(t, declared);
    return subst.empty() ? e : expr::substitute(e, subst);
  } catch (const Error& e) {
    rethrow_at(e, ctx.line, ctx.column + off);
  }
}

std::vector<expr::Expr> parse_list(std::string_view text, const ValueContext& ctx) {
  std::vector<Expr> out;
  for (const auto& p : split_top(text, ';')) out.push_back(parse_value_expr(p.text, shifted(ctx, p.offset)));
  return out;
}

expr::ExprMatrix parse_matrix(std::string_view text, const ValueContext& ctx) {
  const auto off = static_cast<int>(lead(text));
  const auto t = trim(text);
  const ValueContext here = shifted(ctx, off);
  std::string_view inner;
  if (t == "identity") return ExprMatrix::identity(ctx.matrix_size);
  if (t == "zero") return ExprMatrix::zero(ctx.matrix_size, ctx.matrix_size);
  if (call_form(t, "phase", inner)) {
    return ExprMatrix::phase(parse_value_expr(inner, shifted(here, inner_offset(t, inner))));
  }
  if (call_form(t, "alg", inner)) {
    if (!ctx.group) rethrow_at(Error(ErrorKind::SyntaxError, "alg(...) needs a group"), ctx.line, here.column);
    const auto basis = lie::algebra_basis(*ctx.group);
    const auto parts = split_top(inner, ',');
    if (parts.size() != basis.size()) {
      rethrow_at(Error(ErrorKind::ShapeMismatch, ctx.group->label() + " has " + std::to_string(basis.size()) +
                                                    " algebra coordinates"),
                 ctx.line, here.column);
    }
    ExprMatrix sum = ExprMatrix::zero(ctx.matrix_size, ctx.matrix_size);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const Expr c = parse_value_expr(parts[k].text, shifted(here, inner_offset(t, inner) + parts[k].offset));
      sum = sum + ExprMatrix::constant(basis[k]).scaled(c);
    }
    return sum;
  }
  if (call_form(t, "diag", inner)) {
    const auto parts = split_top(inner, ',');
    if (!ctx.group || static_cast<std::size_t>(ctx.group->factors().size()) != parts.size()) {
      rethrow_at(Error(ErrorKind::ShapeMismatch, "diag(...) needs one block per factor of a product group"), ctx.line,
                 here.column);
    }
    std::optional<ExprMatrix> out;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto& f = ctx.group->factors()[k];
      ValueContext sub = shifted(here, inner_offset(t, inner) + parts[k].offset);
      sub.group = f;
      sub.matrix_size = f.matrix_size();
      auto block = parse_matrix(parts[k].text, sub);
      out = out ? expr::block_diagonal(*out, block) : block;
    }
    return *out;
  }
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') rethrow_at(Error(ErrorKind::SyntaxError, "unterminated matrix literal"), ctx.line, here.column);
    const auto body = t.substr(1, t.size() - 2);
    const int base = 1;
    std::vector<std::vector<expr::ComplexExpr>> rows;
    for (const auto& row : split_top(body, ';')) {
      auto& r = rows.emplace_back();
      for (const auto& cell : split_top(row.text, ',')) {
        const int at = base + row.offset + cell.offset;
        const auto parts = split_top(cell.text, '|');
        if (parts.size() > 2) rethrow_at(Error(ErrorKind::SyntaxError, "entry has two '|'"), ctx.line, here.column + at);
        expr::ComplexExpr z;
        z.re = trim(parts[0].text).empty() && parts.size() == 2 ? Expr(0.0)
                                                                : parse_value_expr(parts[0].text, shifted(here, at));
        if (parts.size() == 2) z.im = parse_value_expr(parts[1].text, shifted(here, at + parts[1].offset));
        r.push_back(z);
      }
    }
    for (const auto& r : rows) {
      if (r.size() != rows.front().size()) {
        rethrow_at(Error(ErrorKind::ShapeMismatch, "matrix rows differ in length"), ctx.line, here.column);
      }
    }
    ExprMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) m.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
    return m;
  }
  // A bare expression is a real 1x1 matrix.
  ExprMatrix m(1, 1);
  m.at(0, 0).re = parse_value_expr(t, here);
  return m;
}

lie::GroupKind parse_group(const std::string& text) {
  if (const auto x = text.find('x'); x != std::string::npos) {
    return lie::GroupKind::product(parse_group(text.substr(0, x)), parse_group(text.substr(x + 1)));
  }
  if (text == "U1") return lie::GroupKind::u1();
  if (text == "SU2") return lie::GroupKind::su2();
  if (text == "SO3") return lie::GroupKind::so3();
  if (text.size() > 3 && text.rfind("U(", 0) == 0 && text.back() == ')') {
    try {
      return lie::GroupKind::unitary(std::stoi(text.substr(2, text.size() - 3)));
    } catch (const std::logic_error&) {
    }
  }
  fail(ErrorKind::UnknownIdentifier, "unknown group '" + text + "'");
}

}  // namespace bundlekit::scenario
