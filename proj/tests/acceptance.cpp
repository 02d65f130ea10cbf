// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "llcp/canonicalize.hpp"
#include "llcp/document.hpp"
#include "support.hpp"

using namespace llcp;
using namespace llcp::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Every Optimal solve made by the criteria below, for the solver contract check.
struct Recorded {
  std::string label;
  KktResidual kkt;
  double feas_tol;
};
std::vector<Recorded> g_optimal;

Solution solve_recorded(const std::string& label, const Problem& p, const SolverSettings& settings = {}) {
  LoweredProblem lp = lower(p);
  SolverResult r = solve(lp.program, settings);
  if (r.status == Status::Optimal) g_optimal.push_back({label, kkt_residual(lp.program, r.u, r.lambda, r.nu), settings.feas_tol});
  return retrieve(lp.map, r, &lp.program);
}

std::string problem_path(const std::string& name) { return std::string(LLCP_PROBLEMS_DIR) + "/" + name; }

Outcome hello_world() {
  Outcome o;
  auto start = Clock::now();
  ProblemDocument doc = load_problem_file(problem_path("hello_world.llcp"));
  Solution s = solve_recorded("hello_world", doc.problem);
  double t = seconds_since(start);
  if (s.status != Status::Optimal) return {false, "status " + std::string(to_string(s.status))};
  double dual = s.dual_values.at(doc.problem.constraints()[0].id())(0, 0);
  double errs[] = {rel_err(s.optimal_value, 48.81026898447343),
                   rel_err(s.variable_values.at("x")(0, 0), 11.780089932635645),
                   rel_err(s.variable_values.at("y")(0, 0), 4.143454698868564), rel_err(dual, 2.843059917747706)};
  double worst = *std::max_element(std::begin(errs), std::end(errs));
  o.pass = worst <= 1e-3 && t < 1.0;
  o.detail = "value " + fmt(s.optimal_value) + ", max rel err " + fmt(worst) + ", " + fmt(t) + " s";
  return o;
}

Outcome pf_completion() {
  Outcome o;
  auto start = Clock::now();
  ProblemDocument doc = load_problem_file(problem_path("pf_completion.llcp"));
  Solution s = solve_recorded("pf_completion", doc.problem);
  double t = seconds_since(start);
  if (s.status != Status::Optimal) return {false, "status " + std::string(to_string(s.status))};
  Matrix want(3, 3);
  want << 1.0, 4.63616907, 1.9, 0.49991744, 0.8, 0.37774148, 3.2, 5.9, 1.14221476;
  const Matrix& x = s.variable_values.at("X");
  double x_err = ((x - want).array() / want.array()).abs().maxCoeff();
  double v_err = rel_err(s.optimal_value, 4.702374203221535);
  double prod = x(0, 1) * x(1, 0) * x(1, 2) * x(2, 2);
  o.pass = v_err <= 1e-4 && x_err <= 1e-3 && std::abs(prod - 1.0) <= 1e-6 && t < 5.0;
  o.detail = "value rel err " + fmt(v_err) + ", X rel err " + fmt(x_err) + ", |prod - 1| " + fmt(std::abs(prod - 1.0)) +
             ", " + fmt(t) + " s";
  return o;
}

bool consistent(Curvature c, ProbeVerdict v) {
  if (v == ProbeVerdict::Violation) return false;
  switch (c) {
    case Curvature::Constant:
    case Curvature::Affine: return v == ProbeVerdict::ConsistentAffine;
    case Curvature::Convex: return v != ProbeVerdict::ConsistentConcave;
    case Curvature::Concave: return v != ProbeVerdict::ConsistentConvex;
    case Curvature::Unknown: return false;
  }
  return false;
}

Outcome curvature_suite() {
  Outcome o;
  auto start = Clock::now();
  Rng rng(2024);
  std::set<std::string> covered;
  std::vector<std::string> failures;
  double worst = -INFINITY;
  for (const AtomCase& c : atom_cases()) {
    covered.insert(c.atom);
    int pairs = 0;
    double case_worst = -INFINITY;
    while (pairs < 100) {
      std::vector<Matrix> x = c.sample(rng), y = c.sample(rng);
      if (x[0].rows() != y[0].rows()) continue;
      ++pairs;
      for (double theta : {0.0, 0.25, 0.5, 0.75, 1.0}) case_worst = std::max(case_worst, jensen_violation(c, x, y, theta));
    }
    worst = std::max(worst, case_worst);
    if (case_worst > 1e-9) failures.push_back("jensen " + c.label());
  }
  for (const AtomDescriptor& a : list_atoms())
    if (!covered.count(a.name)) failures.push_back("uncovered " + a.name);

  Expression x = variable("x");
  for (const ScalarCase& c : scalar_cases()) {
    std::vector<double> params = c.params;
    Expression e = apply(c.atom, {x}, params);
    ProbeResult p = numeric_curvature_probe(e, c.lo, c.hi, 50, 1e-5);
    if (!consistent(atom_info(c.atom).curvature, p.verdict))
      failures.push_back("second-order " + c.label() + " (" + std::string(to_string(p.verdict)) + ")");
  }
  double t = seconds_since(start);
  o.pass = failures.empty() && t < 30.0;
  o.detail = std::to_string(atom_cases().size()) + " atom cases, " + std::to_string(scalar_cases().size()) +
             " scalar atoms, worst Jensen " + fmt(worst) + ", " + fmt(t) + " s";
  for (const std::string& f : failures) o.detail += "; " + f;
  return o;
}

FormMatrix fixed(const Matrix& x) {
  FormMatrix f(Shape{static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(x.cols())});
  for (Eigen::Index i = 0; i < x.size(); ++i)
    f.entries[static_cast<std::size_t>(i)] = AffineForm(std::log(x(i / x.cols(), i % x.cols())));
  return f;
}

Outcome matrix_oracles() {
  Outcome o;
  auto start = Clock::now();
  Rng rng(77);
  double pf_eval = 0, pf_graph = 0, emi_eval = 0, emi_graph = 0;
  bool solved = true;
  for (int k = 0; k < 20; ++k) {
    auto n = static_cast<std::size_t>(2 + k % 5);
    Matrix x = random_positive(rng, n, n, 0.05, 5.0);
    double oracle = eigen_spectral_radius(x);
    pf_eval = std::max(pf_eval, rel_err(eval_atom("pf_eigenvalue", std::vector<Matrix>{x})(0, 0), oracle));

    ExpSumProgram prog;
    GraphResult g = graph_pf_eigenvalue(prog, fixed(x));
    prog.objective = g.output.entries[0];
    SolverResult r = solve(prog);
    solved &= r.status == Status::Optimal;
    pf_graph = std::max(pf_graph, rel_err(std::exp(r.value), oracle));
  }
  for (int k = 0; k < 20; ++k) {
    auto n = static_cast<std::size_t>(2 + k % 4);
    Matrix x = random_with_radius(rng, n, uniform(rng, 0.05, 0.9));
    Matrix inv = (Matrix::Identity(x.rows(), x.cols()) - x).inverse();
    Matrix got = eval_atom("eye_minus_inv", std::vector<Matrix>{x});
    emi_eval = std::max(emi_eval, ((got - inv).array() / inv.array()).abs().maxCoeff());

    ExpSumProgram prog;
    GraphResult g = graph_eye_minus_inv(prog, fixed(x));
    for (const AffineForm& w : g.output.entries) prog.objective += w;
    SolverResult r = solve(prog);
    solved &= r.status == Status::Optimal;
    for (std::size_t i = 0; i < g.output.entries.size(); ++i) {
      double want = inv(static_cast<Eigen::Index>(i / n), static_cast<Eigen::Index>(i % n));
      emi_graph = std::max(emi_graph, rel_err(std::exp(g.output.entries[i].evaluate(r.u)), want));
    }
  }
  double t = seconds_since(start);
  o.pass = solved && pf_eval <= 1e-6 && emi_eval <= 1e-5 && pf_graph <= 1e-4 && emi_graph <= 1e-4 && t < 30.0;
  o.detail = "pf eval " + fmt(pf_eval) + ", pf graph " + fmt(pf_graph) + ", eye_minus_inv eval " + fmt(emi_eval) +
             ", eye_minus_inv graph " + fmt(emi_graph) + ", " + fmt(t) + " s";
  return o;
}

Outcome ggp_regression() {
  struct Case {
    std::string name;
    std::function<Problem()> build;
    double want;
  };
  Expression x = variable("x"), y = variable("y");
  std::vector<Case> cases = {
      {"min x s.t. 2 <= x", [&] { return Problem(Sense::Minimize, x, {2.0 <= x}); }, 2.0},
      {"min x s.t. 0.37 <= x", [&] { return Problem(Sense::Minimize, x, {0.37 <= x}); }, 0.37},
      {"min x s.t. 15 <= x", [&] { return Problem(Sense::Minimize, x, {15.0 <= x}); }, 15.0},
      {"min x + y s.t. xy >= 4", [&] { return Problem(Sense::Minimize, x + y, {x * y >= 4.0}); }, 4.0},
      {"min x + y s.t. xy >= 9", [&] { return Problem(Sense::Minimize, x + y, {x * y >= 9.0}); }, 6.0},
      {"max x s.t. xy <= 6, y >= 2", [&] { return Problem(Sense::Maximize, x, {x * y <= 6.0, y >= 2.0}); }, 3.0},
      {"min x/y s.t. x >= 2, y <= 5", [&] { return Problem(Sense::Minimize, x / y, {x >= 2.0, y <= 5.0}); }, 0.4},
      {"min x + 1/x", [&] { return Problem(Sense::Minimize, x + pow(x, -1)); }, 2.0},
      {"min 3x + 12/x", [&] { return Problem(Sense::Minimize, 3.0 * x + 12.0 / x); }, 12.0},
      {"max xy s.t. x + y <= 2", [&] { return Problem(Sense::Maximize, x * y, {x + y <= 2.0}); }, 1.0},
  };
  Outcome o;
  double worst = 0.0;
  for (const Case& c : cases) {
    Solution s = solve_recorded(c.name, c.build());
    double err = s.status == Status::Optimal ? rel_err(s.optimal_value, c.want) : INFINITY;
    worst = std::max(worst, err);
    if (err > 1e-6) {
      o.pass = false;
      o.detail += c.name + " got " + fmt(s.optimal_value) + "; ";
    }
  }
  o.detail += std::to_string(cases.size()) + " problems, max rel err " + fmt(worst);
  return o;
}

// Best objective over a 400x400 log-spaced grid of the box.
double grid_search(double x_lo, double x_hi, double y_lo, double y_hi, bool minimize,
                   const std::function<double(double, double)>& f, const std::function<bool(double, double)>& feasible) {
  const int n = 400;
  double best = minimize ? INFINITY : -INFINITY;
  for (int i = 0; i < n; ++i) {
    double x = x_lo * std::pow(x_hi / x_lo, i / (n - 1.0));
    for (int j = 0; j < n; ++j) {
      double y = y_lo * std::pow(y_hi / y_lo, j / (n - 1.0));
      if (!feasible(x, y)) continue;
      double v = f(x, y);
      best = minimize ? std::min(best, v) : std::max(best, v);
    }
  }
  return best;
}

Outcome brute_force() {
  struct Case {
    std::string name;
    Problem problem;
    double box[4];
    std::function<double(double, double)> f;
    std::function<bool(double, double)> feasible;
  };
  Expression x = variable("x"), y = variable("y"), v = variable("v", {2, 1});
  auto always = [](double, double) { return true; };
  std::vector<Case> cases;
  cases.push_back({"geo_mean", Problem(Sense::Maximize, geo_mean(v), {index(v, 0, 0) + 2.0 * index(v, 1, 0) <= 4.0}),
                   {0.5, 8, 0.25, 4}, [](double a, double b) { return std::sqrt(a * b); },
                   [](double a, double b) { return a + 2 * b <= 4; }});
  cases.push_back({"max plus inverse", Problem(Sense::Minimize, max({x, y}) + pow(x * y, -1)), {0.3, 5, 0.3, 5},
                   [](double a, double b) { return std::max(a, b) + 1 / (a * b); }, always});
  cases.push_back({"one_minus", Problem(Sense::Maximize, x * y * one_minus(x + y)), {0.02, 0.98, 0.02, 0.98},
                   [](double a, double b) { return a * b * (1 - a - b); }, [](double a, double b) { return a + b < 1; }});
  cases.push_back({"pnorm", Problem(Sense::Minimize, pnorm(v, 2.0), {index(v, 0, 0) * index(v, 1, 0) >= 1.0}),
                   {0.1, 10, 0.1, 10}, [](double a, double b) { return std::hypot(a, b); },
                   [](double a, double b) { return a * b >= 1; }});
  cases.push_back({"hello world", Problem(Sense::Minimize, x * y, {exp(y / x) <= log(y)}), {5, 30, 3, 8},
                   [](double a, double b) { return a * b; },
                   [](double a, double b) { return b > 1 && std::exp(b / a) <= std::log(b); }});
  Outcome o;
  double worst = 0.0;
  for (const Case& c : cases) {
    Solution s = solve_recorded("grid " + c.name, c.problem);
    double oracle = grid_search(c.box[0], c.box[1], c.box[2], c.box[3], c.problem.sense() == Sense::Minimize, c.f,
                                c.feasible);
    double err = s.status == Status::Optimal ? rel_err(s.optimal_value, oracle) : INFINITY;
    worst = std::max(worst, err);
    if (err > 1e-2) {
      o.pass = false;
      o.detail += c.name + " solver " + fmt(s.optimal_value) + " grid " + fmt(oracle) + "; ";
    }
  }
  o.detail += std::to_string(cases.size()) + " problems, max rel err " + fmt(worst);
  return o;
}

Outcome solver_contract() {
  Outcome o;
  for (const CatalogProblem& c : problem_catalog()) solve_recorded("catalog " + c.name, c.problem);
  double stat = 0, primal = 0, comp = 0;
  for (const Recorded& r : g_optimal) {
    stat = std::max(stat, r.kkt.stationarity);
    primal = std::max(primal, r.kkt.primal);
    comp = std::max(comp, r.kkt.complementarity);
    if (r.kkt.stationarity > 1e-6 || r.kkt.primal > r.feas_tol || r.kkt.complementarity > 1e-6) {
      o.pass = false;
      o.detail += r.label + " fails KKT; ";
    }
  }

  Rng rng(99);
  double grad = 0, hess = 0;
  std::size_t constraints = 0;
  for (const CatalogProblem& c : problem_catalog()) {
    LoweredProblem lp = lower(c.problem);
    const auto n = static_cast<Eigen::Index>(lp.program.num_coordinates());
    for (const ExpSumConstraint& con : lp.program.inequalities) {
      ++constraints;
      for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd u(n);
        for (Eigen::Index i = 0; i < n; ++i) u(i) = uniform(rng, -1.5, 1.5);
        DerivativeErrors e = derivative_errors(con, u);
        grad = std::max(grad, e.gradient);
        hess = std::max(hess, e.hessian);
      }
    }
  }
  if (grad > 1e-6 || hess > 1e-4) o.pass = false;
  o.detail += std::to_string(g_optimal.size()) + " optimal solves: stationarity " + fmt(stat) + ", primal " +
              fmt(primal) + ", complementarity " + fmt(comp) + "; " + std::to_string(constraints) +
              " constraints x 100 points: gradient " + fmt(grad) + ", Hessian " + fmt(hess);
  return o;
}

Outcome status_mapping() {
  Solution unb = solve_problem(load_problem_file(problem_path("unbounded.llcp")).problem);
  Solution inf = solve_problem(load_problem_file(problem_path("infeasible.llcp")).problem);
  Outcome o;
  o.pass = unb.status == Status::Unbounded && unb.optimal_value == 0.0 && inf.status == Status::Infeasible;
  o.detail = "unbounded.llcp -> " + std::string(to_string(unb.status)) + " value " + fmt(unb.optimal_value) +
             ", infeasible.llcp -> " + std::string(to_string(inf.status));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"hello world reproduction", hello_world},
      {"Perron-Frobenius matrix completion", pf_completion},
      {"atom curvature suite", curvature_suite},
      {"matrix atom oracles", matrix_oracles},
      {"GGP regression", ggp_regression},
      {"brute-force grid equivalence", brute_force},
      {"solver contract", solver_contract},
      {"status mapping", status_mapping},
  };
  int failed = 0;
  int k = 0;
  for (const Criterion& c : criteria) {
    ++k;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", k, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
