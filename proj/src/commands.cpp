#include "bundlekit/commands.hpp"

#include "bundlekit/error.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace bundlekit::commands {

namespace {

using report::fmt;
using report::Report;
using bundle::FiberValue;
using lie::Matrix;
using scenario::Scenario;

struct ExitRow {
  int code;
  const char* meaning;
};

const std::vector<ExitRow>& exit_rows() {
  static const std::vector<ExitRow> rows{
      {0, "every check passed"},
      {1, "a check failed"},
      {2, "usage error"},
      {3, "SyntaxError"},
      {4, "UnknownIdentifier"},
      {5, "ReferenceError"},
      {6, "MissingVariable"},
      {7, "EvalDomainError"},
      {8, "InvariantFailure"},
      {9, "MembershipViolation"},
      {10, "MonodromyWitness (no global parallel extension)"},
      {11, "NearCutLocus"},
      {12, "StepCollapse"},
      {13, "NotALoop"},
      {14, "GlueFailure"},
      {15, "OrbitOverflow (more sheets than max_sheets)"},
      {16, "ValueNotInGroup"},
      {17, "OverlapViolation"},
      {18, "LiftDefectTooLarge"},
      {19, "UnsupportedDeckPattern"},
      {20, "ChartAssignmentError"},
      {21, "AtlasMismatch"},
      {22, "ShapeMismatch"},
      {23, "UnknownCatalogEntry"},
      {24, "InvalidParams"},
      {25, "IoError"},
      {70, "internal error"},
  };
  return rows;
}

struct Traces {
  std::vector<std::pair<std::string, std::vector<transport::TracePoint>>> paths;
};

class Runner {
 public:
  Runner(const Scenario& sc, const Flags& flags, Report& rep, Traces& traces)
      : sc_(sc), flags_(flags), rep_(rep), traces_(traces) {
    opts_.steps_per_unit = flags.steps.value_or(sc.steps);
  }

  /// Returns the exit code for a run that did not throw.
  int dispatch(const std::string& command) {
    if (command == "check") return check();
    if (command == "transport") return transport_cmd();
    if (command == "holonomy") return holonomy_cmd();
    if (command == "sheets") return sheets_cmd();
    if (command == "extend-section") return extend_section();
    if (command == "extend-iso") return extend_iso_cmd();
    if (command == "quotient") return quotient_cmd();
    if (command == "verify-homogeneity") return homogeneity_cmd();
    fail(ErrorKind::InvalidParams, "unknown command '" + command + "'");
  }

 private:
  const Scenario& sc_;
  const Flags& flags_;
  Report& rep_;
  Traces& traces_;
  transport::Options opts_;

  int verdict(const std::string& status = "") {
    rep_.finish(status);
    if (rep_.failures() > 0) return kExitChecksFailed;
    if (status == "MonodromyWitness") return kExitWitness;
    if (status == "OrbitOverflow") return kExitOrbitOverflow;
    return kExitOk;
  }

  transport::Options quiet() const {
    auto o = opts_;
    o.estimate_error = false;
    o.trace = nullptr;
    return o;
  }

  germs::ExtendOptions extend_options() const {
    germs::ExtendOptions e;
    e.transport = quiet();
    e.res = sc_.res;
    e.overlap_samples = sc_.samples;
    e.seed = sc_.seed;
    e.tol = {sc_.tol.germ, sc_.tol.glue};
    return e;
  }

  const bundle::ConnectionSpec& connection(std::string* name = nullptr) const {
    const auto& n = sc_.pick(sc_.connections, "connection");
    if (name) *name = n;
    return *sc_.connections.at(n);
  }

  Matrix expected_matrix(const scenario::Expectation& e, const lie::GroupKind& g) const {
    scenario::ValueContext ctx{&sc_.params, {}, g.matrix_size(), g, e.line, 1};
    return scenario::parse_matrix(e.value, ctx).eval({});
  }
  double expected_number(const scenario::Expectation& e) const {
    scenario::ValueContext ctx{&sc_.params, {}, 1, std::nullopt, e.line, 1};
    return expr::eval(scenario::parse_value_expr(e.value, ctx), {});
  }

  struct Chosen {
    std::string name;
    bundle::ActionSpec spec;
    FiberValue seed;
    int max_sheets = 64;
    const bundle::ConnectionSpec* conn = nullptr;
  };

  // The action, its connection and a seed (identity for group fibers).
  Chosen action() const {
    Chosen c;
    c.name = sc_.pick(sc_.actions, "action");
    const auto& d = sc_.actions.at(c.name);
    c.spec = d.spec;
    c.max_sheets = d.max_sheets;
    c.conn = d.connection.empty() ? &connection() : sc_.connections.at(d.connection).get();
    if (c.conn->group() != c.spec.group) fail(ErrorKind::ShapeMismatch, "action group differs from the connection group");
    if (d.seed) {
      c.seed = *d.seed;
    } else if (c.spec.kind == bundle::ActionSpec::Kind::LinearRho) {
      fail(ErrorKind::ReferenceError, "action " + c.name + " needs a seed");
    } else {
      const int n = c.spec.fiber_group().matrix_size();
      c.seed = Matrix::Identity(n, n);
    }
    return c;
  }

  // ------------------------------------------------------------ commands

  int check() {
    rep_.checks(sc_.validation);
    for (const auto& [name, c] : sc_.connections) {
      rep_.check("connection." + name + ".curvature_covariance",
                 bundle::curvature_covariance_defect(*c, sc_.samples, sc_.seed), bundle::kConnTol);
    }
    return verdict();
  }

  void path_record(const std::string& type, const std::string& name, const transport::TransportResult& r) {
    rep_.record(type, {{"path", name},
                       {"steps", std::to_string(r.steps)},
                       {"est_error", fmt(r.est_error)},
                       {"end_chart", std::to_string(r.end_chart)},
                       {"value", fmt(r.end_value)}});
  }

  transport::Options traced(const std::string& name) {
    auto o = opts_;
    if (!flags_.plot_data.empty()) {
      traces_.paths.push_back({name, {}});
      o.trace = &traces_.paths.back().second;
    }
    return o;
  }

  int transport_cmd() {
    std::string cname;
    const auto& conn = connection(&cname);
    const auto& pname = sc_.pick(sc_.paths, "path");
    const auto& path = sc_.paths.at(pname).path;
    if (sc_.atlases.at(sc_.paths.at(pname).atlas).atlas != conn.atlas()) {
      fail(ErrorKind::AtlasMismatch, "path " + pname + " is not on the atlas of connection " + cname);
    }
    transport::TransportResult r;
    if (!sc_.actions.empty()) {
      const auto a = action();
      r = transport::associated_transport(*a.conn, a.spec, path, a.seed, traced(pname));
    } else {
      const int n = conn.group().matrix_size();
      r = transport::horizontal_lift(conn, path, Matrix::Identity(n, n), traced(pname));
    }
    path_record("transport", pname, r);
    rep_.check("est_error." + pname, r.est_error, sc_.tol.holonomy);
    if (const auto* e = sc_.expect({"transport", pname})) {
      rep_.check("transport." + pname, (r.end_value - expected_matrix(*e, conn.group())).norm(), sc_.tol.holonomy);
    }
    return verdict();
  }

  int holonomy_cmd() {
    std::string cname;
    const auto& conn = connection(&cname);
    const auto& atlas = *conn.atlas();
    std::vector<std::pair<std::string, const manifold::PathSpec*>> loops;
    if (sc_.defaults.count("loop")) {
      const auto& n = sc_.pick(sc_.paths, "loop");
      loops.push_back({n, &sc_.paths.at(n).path});
    } else {
      for (const auto& [n, d] : sc_.paths) {
        if (sc_.atlases.at(d.atlas).atlas == conn.atlas()) loops.push_back({n, &d.path});
      }
      if (loops.empty()) {
        for (const auto& g : atlas.loop_generators) loops.push_back({g.name(), &g});
      }
    }
    if (loops.empty()) fail(ErrorKind::ReferenceError, "no loops to transport around");
    for (const auto& [name, loop] : loops) {
      const auto r = transport::holonomy(conn, *loop, traced(name));
      path_record("holonomy", name, r);
      rep_.check("est_error." + name, r.est_error, sc_.tol.holonomy);
      if (const auto* e = sc_.expect({"holonomy", name})) {
        rep_.check("holonomy." + name, (r.end_value - expected_matrix(*e, conn.group())).norm(), sc_.tol.holonomy);
      }
    }
    return verdict();
  }

  void orbit_records(const germs::MonodromyOrbit& orbit, const std::string& prefix) {
    rep_.record("orbit", {{"sheets", std::to_string(orbit.sheets.size())}, {"closed", orbit.closed ? "true" : "false"}});
    for (std::size_t i = 0; i < orbit.sheets.size(); ++i) {
      rep_.record("sheet", {{"index", std::to_string(i)}, {"value", fmt(orbit.sheets[i])}});
    }
    for (std::size_t g = 0; g < orbit.generator_action.size(); ++g) {
      const auto& act = orbit.generator_action[g];
      std::string perm, cycles;
      for (std::size_t i = 0; i < act.image.size(); ++i) perm += (i ? "," : "") + std::to_string(act.image[i]);
      const auto lengths = orbit.cycle_lengths(g);
      for (std::size_t i = 0; i < lengths.size(); ++i) cycles += (i ? "," : "") + std::to_string(lengths[i]);
      rep_.record("monodromy", {{"generator", act.generator}, {"permutation", perm}, {"cycles", cycles}});
      if (const auto* e = sc_.expect({"cycle", act.generator})) {
        const double want = expected_number(*e);
        const bool single = lengths.size() == 1 && lengths[0] == static_cast<int>(want);
        rep_.check(prefix + "cycle." + act.generator, single ? 0.0 : 1.0, 0.0);
      }
    }
    if (const auto* e = sc_.expect({"sheets"})) {
      rep_.check(prefix + "sheets", std::abs(static_cast<double>(orbit.sheets.size()) - expected_number(*e)), 0.0);
    }
  }

  int sheets_cmd() {
    const auto a = action();
    const germs::GermValue seed{a.conn->atlas()->basepoint, a.seed};
    const auto orbit = germs::enumerate_sheets(*a.conn, a.spec, seed, a.max_sheets, quiet(), sc_.tol.germ);
    orbit_records(orbit, "");
    return verdict(orbit.closed ? "" : "OrbitOverflow");
  }

  int witness(const germs::MonodromyWitness& w) {
    rep_.record("witness", {{"kind", "MonodromyWitness"},
                            {"generator", w.generator},
                            {"discrepancy", fmt(w.discrepancy)},
                            {"moved", fmt(w.moved)}});
    if (const auto* e = sc_.expect({"witness"})) {
      rep_.check("witness", std::abs(w.discrepancy - expected_number(*e)), sc_.tol.witness);
    }
    return verdict("MonodromyWitness");
  }

  void section_records(const bundle::ConnectionSpec& conn, const germs::GlobalSection& s, const std::string& prefix) {
    std::string tree;
    for (const auto& [a, b, p] : s.tree) {
      tree += (tree.empty() ? "" : ",") + conn.atlas()->chart(a).id + ">" + conn.atlas()->chart(b).id;
    }
    rep_.record("section", {{"charts", std::to_string(s.charts.size())}, {"tree", tree.empty() ? "-" : tree}});
    rep_.checks(s.overlap, prefix);
    rep_.check(prefix + "parallel", germs::section_parallelism(conn, s, quiet()), sc_.tol.parallel);
  }

  int extend_section() {
    const auto a = action();
    const germs::GermValue seed{a.conn->atlas()->basepoint, a.seed};
    auto opts = extend_options();
    auto result = germs::global_extend(*a.conn, a.spec, seed, opts);
    if (const auto* w = std::get_if<germs::MonodromyWitness>(&result)) return witness(*w);
    const auto& s = std::get<germs::GlobalSection>(result);
    section_records(*a.conn, s, "");
    if (a.conn->atlas()->charts().size() > 1) {
      opts.tree_variant = 1;
      const auto other = germs::global_extend(*a.conn, a.spec, seed, opts);
      rep_.check("uniqueness", germs::uniqueness_probe(*a.conn, s, std::get<germs::GlobalSection>(other), quiet()),
                 sc_.tol.germ);
    }
    return verdict();
  }

  void intertwine_records(const std::string& prefix, const intertwiner::IntertwineReport& r) {
    rep_.record("intertwine", {{"name", prefix},
                               {"nodes", std::to_string(r.nodes)},
                               {"regions", std::to_string(r.regions)},
                               {"parallel_defect", fmt(r.parallel_defect)},
                               {"curvature_match_defect", fmt(r.curvature_match_defect)}});
    rep_.check(prefix + ".parallel", r.parallel_defect, sc_.tol.intertwine);
  }

  // Extended u against the declared gauge, at grid nodes and at samples spread
  // over every chart.
  void reference_check(const scenario::IntertwinerDecl& d, const intertwiner::IntertwinerData& ext,
                       const germs::GlobalSection& s) {
    if (d.reference.empty()) return;
    const auto& u = *sc_.gauges.at(d.reference);
    const auto& atlas = *u.bundle()->atlas();
    double worst = 0.0;
    for (const auto& g : s.charts) {
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (g.inside[i]) worst = std::max(worst, lie::geodesic_distance(g.values[i], u.value(g.chart, g.nodes[i])));
      }
    }
    for (int c = 0; c < static_cast<int>(atlas.charts().size()); ++c) {
      manifold::Sampler sampler(atlas.dim(), sc_.seed + 11);
      for (int k = 0; k < 4 * sc_.samples; ++k) {
        const auto x = atlas.chart(c).domain.from_unit(sampler.next(), 0.99);
        if (x) worst = std::max(worst, lie::geodesic_distance(ext.value(c, *x), u.value(c, *x)));
      }
    }
    rep_.check("reference", worst, sc_.tol.local_match);
  }

  int extend_iso_cmd() {
    const auto& name = sc_.pick(sc_.intertwiners, "intertwiner");
    const auto& d = sc_.intertwiners.at(name);
    const auto& a = *sc_.connections.at(d.connection);
    const auto& ap = *sc_.connections.at(d.connection_prime);
    const intertwiner::CheckOptions check{quiet(), sc_.res, sc_.tol.intertwine};
    auto opts = extend_options();

    if (d.map.empty()) {
      intertwine_records("local", intertwiner::check_connection_intertwine(d.data, a, ap, check));
      auto result = intertwiner::extend_iso(d.data, a, ap, opts, sc_.tol.intertwine);
      if (const auto* w = std::get_if<germs::MonodromyWitness>(&result)) return witness(*w);
      const auto& ext = std::get<intertwiner::ExtendedIso>(result);
      const auto product = bundle::product_bundle(ap, a);
      section_records(*product.connection, ext.section, "section.");
      rep_.check("local_match", ext.local_match, sc_.tol.local_match);
      reference_check(d, ext.data, ext.section);
      return verdict();
    }

    const intertwiner::PhiCoveringData data{sc_.maps.at(d.map).map, d.data};
    const auto direct = intertwiner::phi_covering_check(data, a, ap, check);
    const auto reduced = intertwiner::reduce_to_id_covering(data, ap);
    const auto via = intertwiner::check_connection_intertwine(reduced.data, a, *reduced.pulled_connection, check);
    intertwine_records("direct", direct);
    intertwine_records("reduced", via);
    rep_.check("reduction_agreement", std::abs(direct.parallel_defect - via.parallel_defect), 1e-9);
    if (!via.pass()) {
      // Nothing to extend from; the parallel checks above already failed.
      return verdict();
    }
    auto result = intertwiner::extend_iso_phi(data, a, ap, opts, sc_.tol.intertwine);
    if (const auto* w = std::get_if<germs::MonodromyWitness>(&result)) return witness(*w);
    const auto& ext = std::get<intertwiner::ExtendedPhiIso>(result);
    const auto product = bundle::product_bundle(*reduced.pulled_connection, a);
    section_records(*product.connection, ext.id_covering.section, "section.");
    rep_.check("local_match", ext.id_covering.local_match, sc_.tol.local_match);
    reference_check(d, ext.id_covering.data, ext.id_covering.section);
    return verdict();
  }

  int quotient_cmd() {
    if (!sc_.quotient) fail(ErrorKind::ReferenceError, "scenario declares no [quotient]");
    const auto& q = *sc_.quotient;
    const auto& qt = q.triple;
    rep_.record("quotient", {{"target", qt.atlas->name()},
                             {"charts", std::to_string(qt.atlas->charts().size())},
                             {"generators", std::to_string(q.deck.generators.size())}});
    rep_.checks(quotient::check_lift_axioms(q.cover_data, q.deck, sc_.samples, sc_.seed), "lift.");
    rep_.checks(quotient::verify_quotient_roundtrip(qt, q.cover_data, q.deck, sc_.samples, sc_.seed), "");
    const auto& loops = qt.atlas->loop_generators;
    for (std::size_t i = 0; i < loops.size(); ++i) {
      const auto& name = loops[i].name();
      const auto r = transport::holonomy(*qt.connection, loops[i], traced(name));
      path_record("holonomy", name, r);
      if (i < q.deck.generators.size()) {
        const Matrix cover = quotient::twisted_cover_transport(q.cover_data, q.deck, static_cast<int>(i),
                                                               qt.atlas->basepoint.x, quiet());
        rep_.record("cover_transport", {{"generator", q.deck.generators[i].name}, {"value", fmt(cover)}});
        rep_.check("cover_agreement." + name, (r.end_value - cover).norm(), sc_.tol.roundtrip);
      }
      if (const auto* e = sc_.expect({"holonomy", name})) {
        rep_.check("holonomy." + name, (r.end_value - expected_matrix(*e, qt.connection->group())).norm(),
                   sc_.tol.roundtrip);
      }
    }
    if (!q.action.empty()) {
      const auto& d = sc_.actions.at(q.action);
      if (d.spec.group != qt.connection->group()) fail(ErrorKind::ShapeMismatch, "action group differs from the quotient group");
      FiberValue seed;
      if (d.seed) {
        seed = *d.seed;
      } else {
        const int n = d.spec.fiber_group().matrix_size();
        seed = Matrix::Identity(n, n);
      }
      const auto orbit = germs::enumerate_sheets(*qt.connection, d.spec, {qt.atlas->basepoint, seed}, d.max_sheets,
                                                 quiet(), sc_.tol.germ);
      orbit_records(orbit, "");
      if (!orbit.closed) return verdict("OrbitOverflow");
    }
    return verdict();
  }

  int homogeneity_cmd() {
    if (!sc_.quotient) fail(ErrorKind::ReferenceError, "scenario declares no [quotient]");
    const auto& name = sc_.pick(sc_.homogeneity, "homogeneity");
    const auto& cand = sc_.homogeneity.at(name);
    rep_.record("candidate", {{"name", name},
                              {"x", sc_.quotient->triple.atlas->chart(cand.x.chart).id + ":" + fmt(cand.x.x)},
                              {"x_prime", sc_.quotient->triple.atlas->chart(cand.x_prime.chart).id + ":" +
                                              fmt(cand.x_prime.x)},
                              {"radius", fmt(cand.radius)}});
    const intertwiner::CheckOptions check{quiet(), sc_.res, sc_.tol.intertwine};
    rep_.checks(quotient::check_local_homogeneity(sc_.quotient->triple, cand, sc_.samples, check), "");
    return verdict();
  }
};

void write_traces(const Traces& t, const std::string& path) {
  std::ostringstream out;
  out << "path\tt\tchart";
  if (!t.paths.empty() && !t.paths.front().second.empty()) {
    const auto& p = t.paths.front().second.front();
    for (Eigen::Index i = 0; i < p.x.size(); ++i) out << "\tx" << i + 1;
    for (Eigen::Index i = 0; i < p.g.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.g.cols(); ++j) out << "\tre" << i << j << "\tim" << i << j;
    }
  }
  out << "\n";
  for (const auto& [name, trace] : t.paths) {
    for (const auto& p : trace) {
      out << name << "\t" << fmt(p.t) << "\t" << p.chart;
      for (Eigen::Index i = 0; i < p.x.size(); ++i) out << "\t" << fmt(p.x[i]);
      for (Eigen::Index i = 0; i < p.g.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.g.cols(); ++j) out << "\t" << fmt(p.g(i, j).real()) << "\t" << fmt(p.g(i, j).imag());
      }
      out << "\n";
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << out.str())) fail(ErrorKind::IoError, "cannot write " + path);
}

std::vector<report::Field> meta(const Scenario* sc, const Flags& flags) {
  if (!sc) return {};
  return {{"seed", std::to_string(sc->seed)},
          {"steps", std::to_string(flags.steps.value_or(sc->steps))},
          {"samples", std::to_string(sc->samples)}};
}

Outcome execute(const std::string& command, const std::string& display,
                const std::function<Scenario(const scenario::Overrides&)>& load, const Flags& flags) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    Report rep(command, display);
    rep.record("error", {{"kind", "usage"}, {"message", "unknown command '" + command + "'"}});
    rep.finish("usage");
    return {kExitUsage, rep.text()};
  }
  std::optional<Scenario> sc;
  std::optional<Report> rep;
  auto error_out = [&](const std::string& kind, const std::string& message, int code) {
    if (!rep) rep.emplace(command, display, meta(nullptr, flags));
    rep->record("error", {{"kind", kind}, {"message", message}});
    rep->finish(kind);
    return Outcome{code, rep->text()};
  };
  try {
    sc = load({flags.seed, flags.samples});
    if (flags.steps && *flags.steps < 1) fail(ErrorKind::InvalidParams, "--steps must be positive");
    rep.emplace(command, sc->name, meta(&*sc, flags));
    Traces traces;
    Runner runner(*sc, flags, *rep, traces);
    const int code = runner.dispatch(command);
    if (!flags.plot_data.empty()) write_traces(traces, flags.plot_data);
    return {code, rep->text()};
  } catch (const germs::GlueFailure& e) {
    if (!rep) rep.emplace(command, display);
    rep->record("glue_failure", {{"defect", fmt(e.defect)}, {"max_curvature", fmt(e.max_curvature)}});
    return error_out("GlueFailure", e.what(), exit_code(e.kind()));
  } catch (const Error& e) {
    return error_out(std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return error_out("internal", e.what(), kExitInternal);
  }
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return 3;
    case ErrorKind::UnknownIdentifier: return 4;
    case ErrorKind::ReferenceError: return 5;
    case ErrorKind::MissingVariable: return 6;
    case ErrorKind::EvalDomainError: return 7;
    case ErrorKind::InvariantFailure: return 8;
    case ErrorKind::MembershipViolation: return 9;
    case ErrorKind::NearCutLocus: return 11;
    case ErrorKind::StepCollapse: return 12;
    case ErrorKind::NotALoop: return 13;
    case ErrorKind::GlueFailure: return 14;
    case ErrorKind::ValueNotInGroup: return 16;
    case ErrorKind::OverlapViolation: return 17;
    case ErrorKind::LiftDefectTooLarge: return 18;
    case ErrorKind::UnsupportedDeckPattern: return 19;
    case ErrorKind::ChartAssignmentError: return 20;
    case ErrorKind::AtlasMismatch: return 21;
    case ErrorKind::ShapeMismatch: return 22;
    case ErrorKind::UnknownCatalogEntry: return 23;
    case ErrorKind::InvalidParams: return 24;
    case ErrorKind::IoError: return 25;
  }
  return kExitInternal;
}

std::string exit_code_table() {
  std::string out;
  for (const auto& r : exit_rows()) {
    std::string code = std::to_string(r.code);
    out += "  " + std::string(4 - code.size(), ' ') + code + "  " + r.meaning + "\n";
  }
  return out;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"check",      "transport",  "holonomy", "extend-section",
                                              "sheets",     "extend-iso", "quotient", "verify-homogeneity"};
  return names;
}

Outcome run(const std::string& command, const std::string& scenario_path, const Flags& flags) {
  const auto slash = scenario_path.find_last_of('/');
  const std::string display = slash == std::string::npos ? scenario_path : scenario_path.substr(slash + 1);
  return execute(
      command, display, [&](const scenario::Overrides& o) { return scenario::load(scenario_path, o); }, flags);
}

Outcome run_text(const std::string& command, const std::string& text, const std::string& name, const Flags& flags) {
  return execute(
      command, name, [&](const scenario::Overrides& o) { return scenario::parse(text, name, o); }, flags);
}

}  // namespace bundlekit::commands
