#include "llcp/canonicalize.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "graph_internal.hpp"
#include "llcp/error.hpp"

namespace llcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxSubsets = 10000.0;

// Upper: the returned forms bound log(node) from above (epigraph side).
// Lower: they bound it from below (hypograph side). Affine nodes are exact.
enum class Mode { Upper, Lower };

Mode flip(Mode m) { return m == Mode::Upper ? Mode::Lower : Mode::Upper; }

std::string entry_suffix(const Shape& s, std::size_t flat) {
  if (s.is_scalar()) return "";
  return "[" + std::to_string(flat / s.cols) + "," + std::to_string(flat % s.cols) + "]";
}

double choose(std::size_t n, std::size_t r) {
  double c = 1.0;
  for (std::size_t i = 0; i < r; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return c;
}

class Lowerer {
 public:
  explicit Lowerer(ExpSumProgram& program) : prog_(program) {}

  void add_variable(const Expression& v, std::vector<std::size_t>& coords) {
    FormMatrix forms(v.shape());
    for (std::size_t r = 0; r < v.shape().rows; ++r) {
      for (std::size_t c = 0; c < v.shape().cols; ++c) {
        Coordinate coord;
        coord.kind = CoordinateKind::Variable;
        coord.variable = v.name();
        coord.row = r;
        coord.col = c;
        coord.tag = v.name() + entry_suffix(v.shape(), r * v.shape().cols + c);
        std::size_t idx = prog_.add_coordinate(std::move(coord));
        coords.push_back(idx);
        forms(r, c) = AffineForm::coordinate(idx);
      }
    }
    memo_[{v.node(), Mode::Upper}] = forms;
  }

  Curvature curvature(const Expression& e) { return analyzer_.curvature(e); }

  FormMatrix lower(const Expression& e, Mode mode) {
    Curvature c = analyzer_.curvature(e);
    if (is_affine(c)) mode = Mode::Upper;
    auto key = std::make_pair(e.node(), mode);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    FormMatrix out = lower_uncached(e, c, mode);
    memo_[key] = out;
    return out;
  }

  // Emits constraints stating that the forms `bound` lie above (Upper) or
  // below (Lower) the atom node `e`. Returns the constraint indices; for add,
  // exp and harmonic_mean these are one per output entry in row-major order.
  std::vector<std::size_t> emit_bound(const Expression& e, Mode mode, const FormMatrix& bound,
                                      const std::string& origin) {
    const AtomDescriptor& atom = e.atom();
    std::vector<FormMatrix> z;
    for (std::size_t k = 0; k < e.children().size(); ++k) {
      Monotonicity m = atom.monotonicity(e.params(), k);
      z.push_back(lower(e.children()[k], m == Monotonicity::Nonincreasing ? flip(mode) : mode));
    }
    std::vector<std::size_t> idx;
    auto push = [&](std::vector<AffineForm> terms, AffineForm tail) {
      ExpSumConstraint c;
      c.exp_terms = std::move(terms);
      c.tail = std::move(tail);
      c.origin = origin;
      idx.push_back(prog_.inequalities.size());
      prog_.inequalities.push_back(std::move(c));
    };
    const std::size_t size = e.shape().size();
    const Shape& ns = e.shape();

    switch (atom.kind) {
      case AtomKind::Add:
        for (std::size_t i = 0; i < size; ++i) {
          std::vector<AffineForm> terms;
          for (const FormMatrix& zk : z) terms.push_back(zk.at(i) - bound.entries[i]);
          push(std::move(terms), AffineForm(-1.0));
        }
        break;
      case AtomKind::Max:
      case AtomKind::Min: {
        bool upper = atom.kind == AtomKind::Max;
        auto row = [&](const AffineForm& zi, const AffineForm& b) { push({}, upper ? zi - b : b - zi); };
        if (z.size() == 1) {
          for (const AffineForm& zi : z[0].entries) row(zi, bound.entries[0]);
        } else {
          for (std::size_t i = 0; i < size; ++i)
            for (const FormMatrix& zk : z) row(zk.at(i), bound.entries[i]);
        }
        break;
      }
      case AtomKind::SumLargest: {
        const std::size_t n = z[0].entries.size();
        const auto r = static_cast<std::size_t>(e.params()[0]);
        if (choose(n, r) > kMaxSubsets)
          throw ConstructionError("sum_largest[" + std::to_string(r) + "] over " + std::to_string(n) +
                                  " entries needs more than 10000 subset constraints");
        std::vector<std::size_t> pick(r);
        for (std::size_t i = 0; i < r; ++i) pick[i] = i;
        for (;;) {
          std::vector<AffineForm> terms;
          for (std::size_t i : pick) terms.push_back(z[0].entries[i] - bound.entries[0]);
          push(std::move(terms), AffineForm(-1.0));
          std::size_t i = r;
          while (i > 0 && pick[i - 1] == n - r + i - 1) --i;
          if (i == 0) break;
          ++pick[i - 1];
          for (std::size_t j = i; j < r; ++j) pick[j] = pick[j - 1] + 1;
        }
        break;
      }
      case AtomKind::OneMinus:
        for (std::size_t i = 0; i < size; ++i) push({bound.entries[i], z[0].at(i)}, AffineForm(-1.0));
        break;
      case AtomKind::DiffPos:
        for (std::size_t i = 0; i < size; ++i)
          push({bound.entries[i] - z[0].at(i), z[1].at(i) - z[0].at(i)}, AffineForm(-1.0));
        break;
      case AtomKind::HarmonicMean: {
        const double logn = std::log(static_cast<double>(z[0].entries.size()));
        std::vector<AffineForm> terms;
        for (const AffineForm& zk : z[0].entries) terms.push_back(bound.entries[0] - zk - logn);
        push(std::move(terms), AffineForm(-1.0));
        break;
      }
      case AtomKind::PNorm: {
        const double p = e.params()[0];
        std::vector<AffineForm> terms;
        for (const AffineForm& zk : z[0].entries) terms.push_back(p * (zk - bound.entries[0]));
        push(std::move(terms), AffineForm(-1.0));
        break;
      }
      case AtomKind::Exp:
        for (std::size_t i = 0; i < size; ++i) push({z[0].at(i)}, -bound.entries[i]);
        break;
      case AtomKind::Log:
        for (std::size_t i = 0; i < size; ++i) push({bound.entries[i]}, -z[0].at(i));
        break;
      case AtomKind::Entropy:
        for (std::size_t i = 0; i < size; ++i) push({bound.entries[i] - z[0].at(i)}, z[0].at(i));
        break;
      case AtomKind::Trace: {
        std::vector<AffineForm> terms;
        for (std::size_t i = 0; i < z[0].shape.rows; ++i) terms.push_back(z[0](i, i) - bound.entries[0]);
        push(std::move(terms), AffineForm(-1.0));
        break;
      }
      case AtomKind::MatMul: {
        const FormMatrix &p = z[0], &q = z[1];
        for (std::size_t i = 0; i < ns.rows; ++i) {
          for (std::size_t j = 0; j < ns.cols; ++j) {
            std::vector<AffineForm> terms;
            for (std::size_t k = 0; k < p.shape.cols; ++k) terms.push_back(p(i, k) + q(k, j) - bound(i, j));
            push(std::move(terms), AffineForm(-1.0));
          }
        }
        break;
      }
      case AtomKind::PfEigenvalue: {
        GraphResult g = detail::pf_graph(prog_, z[0], &bound.entries[0], next_tag("pf_eigenvalue"), e,
                                         e.children()[0]);
        for (std::size_t k : g.constraints) prog_.inequalities[k].origin = origin;
        idx = g.constraints;
        break;
      }
      default:
        throw Error("internal: no bound lowering for atom '" + atom.name + "'");
    }
    return idx;
  }

 private:
  std::string next_tag(const std::string& atom) { return "t" + std::to_string(++aux_count_) + ":" + atom; }

  FormMatrix fresh(const Expression& e, const std::string& tag) {
    FormMatrix out(e.shape());
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
      Coordinate c;
      c.tag = tag + entry_suffix(e.shape(), i);
      c.rule = TightRule::NodeValue;
      c.source = e;
      c.entry = i;
      out.entries[i] = AffineForm::coordinate(prog_.add_coordinate(std::move(c)));
    }
    return out;
  }

  FormMatrix lower_uncached(const Expression& e, Curvature c, Mode mode) {
    if (c == Curvature::Constant) {
      Matrix v = llcp::evaluate(e, {});
      FormMatrix out(e.shape());
      for (std::size_t r = 0; r < e.shape().rows; ++r)
        for (std::size_t k = 0; k < e.shape().cols; ++k)
          out(r, k) = AffineForm(std::log(v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k))));
      return out;
    }
    if (e.is_variable()) throw Error("internal: variable '" + e.name() + "' was not registered");
    if (!e.is_atom()) throw Error("internal: unexpected leaf during lowering");

    const AtomDescriptor& atom = e.atom();
    if (atom.curvature == Curvature::Affine) return lower_affine(e, mode);

    Mode needed = atom.curvature == Curvature::Convex ? Mode::Upper : Mode::Lower;
    if (mode != needed)
      throw Error("internal: " + std::string(to_string(atom.curvature)) + " atom '" + atom.name +
                  "' reached on the wrong side of an inequality");

    if (atom.kind == AtomKind::EyeMinusInv || atom.kind == AtomKind::Resolvent) {
      FormMatrix z = lower(e.children()[0], Mode::Upper);
      double s = atom.kind == AtomKind::Resolvent ? e.params()[0] : 1.0;
      double logs = std::log(s);
      for (AffineForm& f : z.entries) f -= logs;
      GraphResult g = detail::eye_minus_inv_graph(prog_, z, next_tag(atom.name), e.children()[0], s);
      for (AffineForm& f : g.output.entries) f -= logs;
      return g.output;
    }
    std::string tag = next_tag(atom.name);
    FormMatrix bound = fresh(e, tag);
    emit_bound(e, mode, bound, tag + (mode == Mode::Upper ? " epigraph" : " hypograph"));
    return bound;
  }

  FormMatrix lower_affine(const Expression& e, Mode mode) {
    const AtomDescriptor& atom = e.atom();
    std::vector<FormMatrix> z;
    for (std::size_t k = 0; k < e.children().size(); ++k) {
      Monotonicity m = atom.monotonicity(e.params(), k);
      z.push_back(lower(e.children()[k], m == Monotonicity::Nonincreasing ? flip(mode) : mode));
    }
    FormMatrix out(e.shape());
    const std::size_t size = e.shape().size();
    switch (atom.kind) {
      case AtomKind::Mul:
        for (std::size_t i = 0; i < size; ++i) out.entries[i] = z[0].at(i) + z[1].at(i);
        break;
      case AtomKind::Div:
        for (std::size_t i = 0; i < size; ++i) out.entries[i] = z[0].at(i) - z[1].at(i);
        break;
      case AtomKind::Pow:
        for (std::size_t i = 0; i < size; ++i) out.entries[i] = e.params()[0] * z[0].at(i);
        break;
      case AtomKind::GeoMean: {
        AffineForm sum;
        for (const AffineForm& f : z[0].entries) sum += f;
        out.entries[0] = (1.0 / static_cast<double>(z[0].entries.size())) * sum;
        break;
      }
      case AtomKind::Index:
        out.entries[0] = z[0](static_cast<std::size_t>(e.params()[0]), static_cast<std::size_t>(e.params()[1]));
        break;
      case AtomKind::Slice: {
        auto r0 = static_cast<std::size_t>(e.params()[0]);
        auto c0 = static_cast<std::size_t>(e.params()[2]);
        for (std::size_t r = 0; r < e.shape().rows; ++r)
          for (std::size_t c = 0; c < e.shape().cols; ++c) out(r, c) = z[0](r0 + r, c0 + c);
        break;
      }
      default:
        throw Error("internal: no affine lowering for atom '" + atom.name + "'");
    }
    return out;
  }

  ExpSumProgram& prog_;
  CurvatureAnalyzer analyzer_;
  std::map<std::pair<const Expression::Node*, Mode>, FormMatrix> memo_;
  int aux_count_ = 0;
};

bool folds_as_epigraph(const Expression& e, Curvature c) {
  return c == Curvature::Convex && e.is_atom() && (e.atom().kind == AtomKind::Add || e.atom().kind == AtomKind::Exp);
}

bool folds_as_hypograph(const Expression& e, Curvature c) {
  return c == Curvature::Concave && e.is_atom() && e.atom().kind == AtomKind::HarmonicMean;
}

}  // namespace

LoweredProblem lower(const Problem& problem) {
  DgpReport report = explain(problem);
  if (!report.is_dgp) throw NotDgpError(std::move(report));

  LoweredProblem out;
  ExpSumProgram& prog = out.program;
  RetrievalMap& map = out.map;
  Lowerer lw(prog);

  for (const Expression& v : problem.variables()) {
    RetrievalMap::VariableEntry entry{v.name(), v.shape(), {}};
    lw.add_variable(v, entry.coordinates);
    map.variables.push_back(std::move(entry));
  }

  map.sense = problem.sense();
  if (problem.sense() == Sense::Minimize) {
    prog.objective = lw.lower(problem.objective(), Mode::Upper).entries[0];
  } else {
    prog.objective = -lw.lower(problem.objective(), Mode::Lower).entries[0];
  }

  for (const Constraint& con : problem.constraints()) {
    RetrievalMap::ConstraintEntry entry;
    entry.id = con.id();
    entry.kind = con.kind();
    entry.shape = con.lhs().shape();
    const std::string origin = "constraint " + std::to_string(con.id());

    if (con.kind() == ConstraintKind::Eq) {
      FormMatrix l = lw.lower(con.lhs(), Mode::Upper), r = lw.lower(con.rhs(), Mode::Upper);
      for (std::size_t i = 0; i < l.entries.size(); ++i) {
        EqualityRow row{l.entries[i] - r.entries[i], origin + entry_suffix(entry.shape, i), con.id(), true};
        entry.principal.push_back(prog.equalities.size());
        prog.equalities.push_back(std::move(row));
      }
    } else {
      Curvature cl = lw.curvature(con.lhs()), cr = lw.curvature(con.rhs());
      if (folds_as_epigraph(con.lhs(), cl)) {
        FormMatrix r = lw.lower(con.rhs(), Mode::Lower);
        entry.principal = lw.emit_bound(con.lhs(), Mode::Upper, r, origin);
      } else if (folds_as_hypograph(con.rhs(), cr)) {
        FormMatrix l = lw.lower(con.lhs(), Mode::Upper);
        entry.principal = lw.emit_bound(con.rhs(), Mode::Lower, l, origin);
      } else {
        FormMatrix l = lw.lower(con.lhs(), Mode::Upper), r = lw.lower(con.rhs(), Mode::Lower);
        for (std::size_t i = 0; i < l.entries.size(); ++i) {
          ExpSumConstraint c;
          c.tail = l.entries[i] - r.entries[i];
          c.origin = origin;
          entry.principal.push_back(prog.inequalities.size());
          prog.inequalities.push_back(std::move(c));
        }
      }
      if (entry.principal.size() != entry.shape.size())
        throw Error("internal: constraint " + std::to_string(con.id()) + " lowered to " +
                    std::to_string(entry.principal.size()) + " principal rows for " +
                    std::to_string(entry.shape.size()) + " entries");
      for (std::size_t i = 0; i < entry.principal.size(); ++i) {
        ExpSumConstraint& c = prog.inequalities[entry.principal[i]];
        c.principal = true;
        c.constraint_id = con.id();
        c.origin = origin + entry_suffix(entry.shape, i);
      }
    }
    map.constraints.push_back(std::move(entry));
  }

  map.objective_offset = prog.objective.constant();
  map.num_coordinates = prog.num_coordinates();
  map.num_inequalities = prog.inequalities.size();
  map.num_equalities = prog.equalities.size();
  return out;
}

Solution retrieve(const RetrievalMap& map, const SolverResult& result, const ExpSumProgram* program) {
  const auto n = static_cast<Eigen::Index>(map.num_coordinates);
  if ((result.u.size() != 0 && result.u.size() != n) ||
      (result.lambda.size() != 0 && result.lambda.size() != static_cast<Eigen::Index>(map.num_inequalities)) ||
      (result.nu.size() != 0 && result.nu.size() != static_cast<Eigen::Index>(map.num_equalities)))
    throw Error("internal consistency: solver result does not match the retrieval map");
  if (program && (program->num_coordinates() != map.num_coordinates ||
                  program->inequalities.size() != map.num_inequalities ||
                  program->equalities.size() != map.num_equalities))
    throw Error("internal consistency: program does not match the retrieval map");

  Solution sol;
  sol.status = result.status;
  const bool minimize = map.sense == Sense::Minimize;
  switch (result.status) {
    case Status::Optimal:
    case Status::MaxIterations:
      sol.optimal_value = std::exp(minimize ? result.value : -result.value);
      break;
    case Status::Unbounded:
      sol.optimal_value = minimize ? 0.0 : kInf;
      break;
    case Status::Infeasible:
      sol.optimal_value = minimize ? kInf : 0.0;
      break;
  }

  const bool has_point = (result.status == Status::Optimal || result.status == Status::MaxIterations) &&
                         result.u.size() == n;
  if (has_point) {
    for (const RetrievalMap::VariableEntry& v : map.variables) {
      Matrix m(static_cast<Eigen::Index>(v.shape.rows), static_cast<Eigen::Index>(v.shape.cols));
      for (std::size_t i = 0; i < v.coordinates.size(); ++i)
        m(static_cast<Eigen::Index>(i / v.shape.cols), static_cast<Eigen::Index>(i % v.shape.cols)) =
            std::exp(result.u(static_cast<Eigen::Index>(v.coordinates[i])));
      sol.variable_values.emplace(v.name, std::move(m));
    }
    for (const RetrievalMap::ConstraintEntry& c : map.constraints) {
      const Eigen::VectorXd& src = c.kind == ConstraintKind::Eq ? result.nu : result.lambda;
      Matrix m = Matrix::Zero(static_cast<Eigen::Index>(c.shape.rows), static_cast<Eigen::Index>(c.shape.cols));
      if (src.size() > 0) {
        for (std::size_t i = 0; i < c.principal.size(); ++i)
          m(static_cast<Eigen::Index>(i / c.shape.cols), static_cast<Eigen::Index>(i % c.shape.cols)) =
              src(static_cast<Eigen::Index>(c.principal[i]));
      }
      sol.dual_values.emplace(c.id, std::move(m));
    }
  }

  SolveStats& st = sol.stats;
  st.outer_iterations = result.outer_iterations;
  st.newton_iterations = result.newton_iterations;
  st.phase1_iterations = result.phase1_iterations;
  st.gap = result.gap;
  st.message = result.message;
  if (program && has_point) {
    for (std::size_t i = 0; i < program->coordinates.size(); ++i) {
      const Coordinate& c = program->coordinates[i];
      if (c.kind == CoordinateKind::Auxiliary) st.auxiliary[c.tag] = std::exp(result.u(static_cast<Eigen::Index>(i)));
    }
    if (result.lambda.size() == static_cast<Eigen::Index>(map.num_inequalities) &&
        result.nu.size() == static_cast<Eigen::Index>(map.num_equalities)) {
      KktResidual k = kkt_residual(*program, result.u, result.lambda, result.nu);
      st.stationarity = k.stationarity;
      st.primal_residual = k.primal;
      st.complementarity = k.complementarity;
    }
  }
  return sol;
}

Eigen::VectorXd lift_point(const ExpSumProgram& program, const Assignment& point) {
  std::unordered_map<const Expression::Node*, Matrix> values;
  auto value_of = [&](const Expression& e) -> const Matrix& {
    auto it = values.find(e.node());
    if (it == values.end()) it = values.emplace(e.node(), llcp::evaluate(e, point)).first;
    return it->second;
  };
  Eigen::VectorXd u(static_cast<Eigen::Index>(program.num_coordinates()));
  for (std::size_t i = 0; i < program.coordinates.size(); ++i) {
    const Coordinate& c = program.coordinates[i];
    double v = 0.0;
    if (c.rule == TightRule::VariableEntry) {
      auto it = point.find(c.variable);
      if (it == point.end()) throw LookupError("no value for variable '" + c.variable + "'");
      v = std::log(it->second(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.col)));
    } else {
      if (!c.source) throw Error("coordinate " + c.tag + " has no recorded source");
      const Matrix& m = value_of(*c.source);
      const auto cols = m.cols();
      const auto r = static_cast<Eigen::Index>(c.entry) / cols, k = static_cast<Eigen::Index>(c.entry) % cols;
      switch (c.rule) {
        case TightRule::NodeValue:
          v = std::log(m(r, k));
          break;
        case TightRule::PerronVector: {
          Eigen::VectorXd vec;
          perron_root(m, &vec);
          v = std::log(vec(static_cast<Eigen::Index>(c.entry)) / vec(0));
          break;
        }
        case TightRule::EyeMinusInv: {
          Matrix y = (Matrix::Identity(m.rows(), m.cols()) - m / c.scale).inverse();
          v = std::log(y(r, k));
          break;
        }
        case TightRule::VariableEntry:
          break;
      }
    }
    u(static_cast<Eigen::Index>(i)) = v;
  }
  return u;
}

Solution solve_problem(const Problem& problem, const SolverSettings& settings) {
  auto start = std::chrono::steady_clock::now();
  LoweredProblem lp = lower(problem);
  SolverResult res = solve(lp.program, settings);
  Solution sol = retrieve(lp.map, res, &lp.program);
  sol.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace llcp
