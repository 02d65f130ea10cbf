#include "llcp/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "llcp/canonicalize.hpp"
#include "llcp/document.hpp"

namespace llcp::cli {

namespace {

using json = nlohmann::json;

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// JSON cannot carry infinities or NaN; they become strings / null.
json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json matrix_json(const Matrix& m) {
  if (m.rows() == 1 && m.cols() == 1) return num(m(0, 0));
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(num(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

void print_matrix(std::ostream& out, const std::string& label, const Matrix& m) {
  if (m.rows() == 1 && m.cols() == 1) {
    out << label << " = " << fmt(m(0, 0)) << "\n";
    return;
  }
  out << label << " =\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << "  [";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << fmt(m(r, c));
    out << "]\n";
  }
}

json form_json(const AffineForm& f) {
  json terms = json::array();
  for (const auto& [i, a] : f.terms()) terms.push_back({i, a});
  return {{"terms", terms}, {"constant", f.constant()}};
}

json program_json(const ExpSumProgram& p) {
  json coords = json::array();
  for (std::size_t i = 0; i < p.coordinates.size(); ++i) {
    const Coordinate& c = p.coordinates[i];
    coords.push_back({{"index", i}, {"kind", c.kind == CoordinateKind::Variable ? "variable" : "auxiliary"},
                      {"tag", c.tag}});
  }
  json ineq = json::array();
  for (const ExpSumConstraint& c : p.inequalities) {
    json terms = json::array();
    for (const AffineForm& t : c.exp_terms) terms.push_back(form_json(t));
    ineq.push_back({{"exp_terms", terms}, {"tail", form_json(c.tail)}, {"origin", c.origin}, {"principal", c.principal}});
  }
  json eq = json::array();
  for (const EqualityRow& r : p.equalities)
    eq.push_back({{"row", form_json(r.row)}, {"origin", r.origin}, {"principal", r.principal}});
  return {{"coordinates", coords}, {"objective", form_json(p.objective)}, {"inequalities", ineq}, {"equalities", eq}};
}

json report_json(const DgpReport& r) {
  json judgments = json::array();
  for (const CurvatureJudgment& j : r.judgments) {
    json children = json::array();
    for (Curvature c : j.child_curvatures) children.push_back(std::string(to_string(c)));
    json entry = {{"location", j.location},
                  {"expr", to_string(j.expr)},
                  {"curvature", std::string(to_string(j.curvature))},
                  {"children", children}};
    if (j.failed_child) {
      entry["failed_child"] = *j.failed_child;
      entry["rule"] = j.rule;
    }
    judgments.push_back(std::move(entry));
  }
  return {{"dgp", r.is_dgp}, {"message", r.message}, {"violation_path", r.violation_path}, {"judgments", judgments}};
}

// Parses the file or reports the error; returns false on failure.
bool load(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err,
          std::optional<ProblemDocument>& doc) {
  try {
    doc.emplace(load_problem_file(path));
    return true;
  } catch (const ParseError& e) {
    if (opts.json) {
      json j = {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
      if (e.line() > 0) j["line"] = e.line(), j["column"] = e.column();
      if (!e.pointer().empty()) j["pointer"] = e.pointer();
      out << j.dump(2) << "\n";
    }
    err << "llcp: " << path << ": " << e.what() << "\n";
  } catch (const Error& e) {
    err << "llcp: " << path << ": " << e.what() << "\n";
  }
  return false;
}

int status_code(Status s) {
  switch (s) {
    case Status::Optimal: return kOk;
    case Status::Infeasible: return kInfeasible;
    case Status::Unbounded: return kUnbounded;
    case Status::MaxIterations: return kMaxIterations;
  }
  return kMaxIterations;
}

int not_dgp(const NotDgpError& e, const Options& opts, std::ostream& out) {
  if (opts.json) {
    out << report_json(e.report()).dump(2) << "\n";
  } else {
    out << format_report(e.report());
  }
  return kNotDgp;
}

}  // namespace

SolverSettings settings_from(const Options& opts) {
  SolverSettings s;
  if (opts.tol) s.gap_tol = s.feas_tol = *opts.tol;
  if (opts.max_iters) s.max_outer_iters = *opts.max_iters;
  if (opts.mu) s.mu = *opts.mu;
  const char* log = std::getenv("LLCP_LOG");
  s.verbose = opts.verbose || (log && std::string_view(log) == "debug");
  return s;
}

int cmd_check(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err) {
  std::optional<ProblemDocument> doc;
  if (!load(path, opts, out, err, doc)) return kInputError;
  DgpReport report = explain(doc->problem);
  if (opts.json) {
    out << report_json(report).dump(2) << "\n";
  } else {
    out << format_report(report);
  }
  return report.is_dgp ? kOk : kNotDgp;
}

int cmd_canonicalize(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err) {
  std::optional<ProblemDocument> doc;
  if (!load(path, opts, out, err, doc)) return kInputError;
  try {
    LoweredProblem lp = lower(doc->problem);
    if (opts.json) {
      out << program_json(lp.program).dump(2) << "\n";
    } else {
      out << lp.program.dump();
    }
    return kOk;
  } catch (const NotDgpError& e) {
    return not_dgp(e, opts, out);
  } catch (const Error& e) {
    err << "llcp: " << path << ": " << e.what() << "\n";
    return kInputError;
  }
}

int cmd_solve(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err) {
  std::optional<ProblemDocument> doc;
  if (!load(path, opts, out, err, doc)) return kInputError;
  SolverSettings settings = settings_from(opts);
  try {
    settings.validate();
  } catch (const std::invalid_argument& e) {
    err << "llcp: " << e.what() << "\n";
    return kInputError;
  }
  Solution sol;
  try {
    sol = solve_problem(doc->problem, settings);
  } catch (const NotDgpError& e) {
    return not_dgp(e, opts, out);
  } catch (const Error& e) {
    err << "llcp: " << path << ": " << e.what() << "\n";
    return kInputError;
  }

  const auto& constraints = doc->problem.constraints();
  if (opts.json) {
    json vars = json::object();
    for (const auto& [name, m] : sol.variable_values) vars[name] = matrix_json(m);
    json duals = json::array();
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      auto it = sol.dual_values.find(constraints[i].id());
      if (it != sol.dual_values.end()) duals.push_back({{"constraint", i}, {"value", matrix_json(it->second)}});
    }
    const SolveStats& st = sol.stats;
    json stats = {{"outer_iterations", st.outer_iterations},
                  {"newton_iterations", st.newton_iterations},
                  {"phase1_iterations", st.phase1_iterations},
                  {"stationarity", num(st.stationarity)},
                  {"primal_residual", num(st.primal_residual)},
                  {"complementarity", num(st.complementarity)},
                  {"gap", num(st.gap)},
                  {"message", st.message}};
    json aux = json::object();
    for (const auto& [tag, v] : st.auxiliary) aux[tag] = num(v);
    stats["auxiliary"] = std::move(aux);
    json j = {{"status", std::string(to_string(sol.status))},
              {"optimal_value", num(sol.optimal_value)},
              {"variables", vars},
              {"duals", duals},
              {"stats", stats}};
    out << j.dump(2) << "\n";
  } else {
    out << "status: " << to_string(sol.status) << "\n";
    out << "optimal value: " << fmt(sol.optimal_value) << "\n";
    for (const Expression& v : doc->variables) {
      auto it = sol.variable_values.find(v.name());
      if (it != sol.variable_values.end()) print_matrix(out, v.name(), it->second);
    }
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      auto it = sol.dual_values.find(constraints[i].id());
      if (it != sol.dual_values.end()) print_matrix(out, "dual[" + std::to_string(i) + "]", it->second);
    }
    if (!sol.stats.message.empty() && sol.status != Status::Optimal) out << "note: " << sol.stats.message << "\n";
  }
  return status_code(sol.status);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Modeling and solving log-log convex programs", "llcp"};
  app.require_subcommand(1);
  Options opts;
  std::string path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", path, "problem file (JSON)")->required();
    sub->add_flag("--json", opts.json, "machine-readable output");
  };
  CLI::App* check = app.add_subcommand("check", "verify DGP compliance and print the curvature report");
  add_common(check);
  CLI::App* canon = app.add_subcommand("canonicalize", "print the log-space standard form");
  add_common(canon);
  CLI::App* solve = app.add_subcommand("solve", "solve and print values, duals and status");
  add_common(solve);
  solve->add_option("--tol", opts.tol, "gap and feasibility tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--max-iters", opts.max_iters, "maximum outer barrier iterations")->check(CLI::PositiveNumber);
  solve->add_option("--mu", opts.mu, "barrier multiplier (> 1)");
  solve->add_flag("--verbose", opts.verbose, "solver iteration log on standard error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "llcp: " << e.what() << "\n" << app.help();
    return kInputError;
  }
  if (check->parsed()) return cmd_check(path, opts, out, err);
  if (canon->parsed()) return cmd_canonicalize(path, opts, out, err);
  return cmd_solve(path, opts, out, err);
}

}  // namespace llcp::cli
