#include "support.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "llcp/error.hpp"
#include "llcp/solver.hpp"

namespace llcp::testing {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(uniform(rng, std::log(lo), std::log(hi))); }

Matrix random_positive(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = log_uniform(rng, lo, hi);
  return m;
}

double eigen_spectral_radius(const Matrix& x) {
  Eigen::EigenSolver<Matrix> es(x, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix random_with_radius(Rng& rng, std::size_t n, double radius) {
  Matrix m = random_positive(rng, n, n);
  return m * (radius / eigen_spectral_radius(m));
}

Matrix neumann_inverse(const Matrix& x) {
  Matrix sum = Matrix::Identity(x.rows(), x.cols());
  Matrix term = sum;
  for (int k = 0; k < 100000; ++k) {
    term = term * x;
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-17 * sum.cwiseAbs().maxCoeff()) break;
  }
  return sum;
}

namespace {

std::string param_suffix(const std::vector<double>& params) {
  if (params.empty()) return "";
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < params.size(); ++i) os << (i ? "," : "") << params[i];
  os << "]";
  return os.str();
}

}  // namespace

std::string AtomCase::label() const { return atom + param_suffix(params); }
std::string ScalarCase::label() const { return atom + param_suffix(params); }

std::vector<AtomCase> atom_cases() {
  auto pos = [](std::size_t r, std::size_t c) {
    return [r, c](Rng& rng) { return std::vector<Matrix>{random_positive(rng, r, c)}; };
  };
  auto pos_n = [](std::size_t k, std::size_t r, std::size_t c) {
    return [k, r, c](Rng& rng) {
      std::vector<Matrix> out;
      for (std::size_t i = 0; i < k; ++i) out.push_back(random_positive(rng, r, c));
      return out;
    };
  };
  auto unit_interval = [](std::size_t r, std::size_t c) {
    return [r, c](Rng& rng) { return std::vector<Matrix>{random_positive(rng, r, c, 0.01, 0.99)}; };
  };
  std::vector<AtomCase> cases = {
      {"add", {}, pos_n(2, 2, 2)},
      {"add", {}, pos_n(3, 1, 1)},
      {"mul", {}, pos_n(2, 2, 2)},
      {"div", {}, pos_n(2, 2, 2)},
      {"pow", {-1.5}, pos(2, 2)},
      {"pow", {0.5}, pos(2, 2)},
      {"pow", {2.0}, pos(2, 2)},
      {"max", {}, pos(4, 1)},
      {"max", {}, pos_n(3, 2, 2)},
      {"min", {}, pos(4, 1)},
      {"min", {}, pos_n(3, 2, 2)},
      {"sum_largest", {2}, pos(5, 1)},
      {"one_minus", {}, unit_interval(2, 2)},
      {"diff_pos", {},
       [](Rng& rng) {
         Matrix x = random_positive(rng, 2, 2);
         Matrix y = x.cwiseProduct(random_positive(rng, 2, 2, 0.05, 0.95));
         return std::vector<Matrix>{x, y};
       }},
      {"geo_mean", {}, pos(4, 1)},
      {"harmonic_mean", {}, pos(4, 1)},
      {"pnorm", {1.0}, pos(4, 1)},
      {"pnorm", {2.0}, pos(4, 1)},
      {"pnorm", {3.5}, pos(4, 1)},
      {"exp", {}, [](Rng& rng) { return std::vector<Matrix>{random_positive(rng, 2, 2, 0.1, 4.0)}; }},
      {"log", {}, [](Rng& rng) { return std::vector<Matrix>{random_positive(rng, 2, 2, 1.05, 30.0)}; }},
      {"entropy", {}, unit_interval(2, 2)},
      {"trace", {}, pos(3, 3)},
      {"matmul", {},
       [](Rng& rng) { return std::vector<Matrix>{random_positive(rng, 2, 3), random_positive(rng, 3, 2)}; }},
      {"pf_eigenvalue", {},
       [](Rng& rng) {
         auto n = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 6)(rng));
         return std::vector<Matrix>{random_positive(rng, n, n)};
       }},
      {"eye_minus_inv", {},
       [](Rng& rng) { return std::vector<Matrix>{random_with_radius(rng, 3, uniform(rng, 0.05, 0.9))}; }},
      {"resolvent", {2.0},
       [](Rng& rng) { return std::vector<Matrix>{random_with_radius(rng, 3, uniform(rng, 0.1, 1.8))}; }},
      {"index", {1, 0}, pos(2, 2)},
      {"slice", {0, 2, 1, 3}, pos(3, 3)},
  };
  return cases;
}

std::vector<ScalarCase> scalar_cases() {
  return {
      {"pow", {-1.5}, 0.1, 10.0},  {"pow", {0.5}, 0.1, 10.0},         {"pow", {2.0}, 0.1, 10.0},
      {"exp", {}, 0.1, 5.0},       {"log", {}, 1.05, 50.0},           {"entropy", {}, 0.01, 0.99},
      {"one_minus", {}, 0.01, 0.99}, {"geo_mean", {}, 0.1, 10.0},      {"harmonic_mean", {}, 0.1, 10.0},
      {"pnorm", {2.0}, 0.1, 10.0}, {"max", {}, 0.1, 10.0},            {"min", {}, 0.1, 10.0},
      {"sum_largest", {1}, 0.1, 10.0}, {"trace", {}, 0.1, 10.0},      {"pf_eigenvalue", {}, 0.1, 10.0},
      {"eye_minus_inv", {}, 0.01, 0.99}, {"resolvent", {2.0}, 0.01, 1.98}, {"index", {0, 0}, 0.1, 10.0},
      {"slice", {0, 1, 0, 1}, 0.1, 10.0},
  };
}

double jensen_violation(const AtomCase& c, const std::vector<Matrix>& x, const std::vector<Matrix>& y, double theta) {
  std::vector<Matrix> z;
  for (std::size_t k = 0; k < x.size(); ++k)
    z.push_back((theta * x[k].array().log() + (1.0 - theta) * y[k].array().log()).exp().matrix());
  const Matrix fx = eval_atom(c.atom, x, c.params);
  const Matrix fy = eval_atom(c.atom, y, c.params);
  const Matrix fz = eval_atom(c.atom, z, c.params);
  const Curvature curv = atom_info(c.atom).curvature;
  double worst = -INFINITY;
  for (Eigen::Index i = 0; i < fz.size(); ++i) {
    double gap = std::log(fz.data()[i]) - (theta * std::log(fx.data()[i]) + (1.0 - theta) * std::log(fy.data()[i]));
    double v = curv == Curvature::Convex ? gap : curv == Curvature::Concave ? -gap : std::abs(gap);
    worst = std::max(worst, v);
  }
  return worst;
}

DerivativeErrors derivative_errors(const ExpSumConstraint& c, const Eigen::VectorXd& u) {
  const Eigen::Index n = u.size();
  const double h = 1e-5;
  ConstraintEval ev = constraint_value_grad_hess(c, u);
  Eigen::VectorXd g_fd(n);
  Eigen::MatrixXd h_fd(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd up = u, dn = u;
    up(j) += h;
    dn(j) -= h;
    g_fd(j) = (c.value(up) - c.value(dn)) / (2 * h);
    h_fd.col(j) = (constraint_value_grad_hess(c, up).gradient - constraint_value_grad_hess(c, dn).gradient) / (2 * h);
  }
  DerivativeErrors e;
  e.gradient = (g_fd - ev.gradient).lpNorm<Eigen::Infinity>() / std::max(1.0, ev.gradient.lpNorm<Eigen::Infinity>());
  e.hessian = (h_fd - ev.hessian).cwiseAbs().maxCoeff() / std::max(1.0, ev.hessian.cwiseAbs().maxCoeff());
  return e;
}

std::vector<CatalogProblem> problem_catalog() {
  auto scalar = [](double v) { return Matrix::Constant(1, 1, v); };
  std::vector<CatalogProblem> out;
  {
    Expression x = variable("x"), y = variable("y");
    out.push_back({"hello_world", Problem(Sense::Minimize, x * y, {exp(y / x) <= log(y)}), [=](Rng& rng) {
                     return Assignment{{"x", scalar(log_uniform(rng, 1, 20))}, {"y", scalar(log_uniform(rng, 1.5, 10))}};
                   }});
  }
  {
    Expression X = variable("X", {3, 3});
    out.push_back({"pf_eigenvalue",
                   Problem(Sense::Minimize, pf_eigenvalue(X),
                           {1.0 <= index(X, 0, 1) * index(X, 1, 0), index(X, 2, 2) >= 0.5, X >= 0.2}),
                   [](Rng& rng) { return Assignment{{"X", random_positive(rng, 3, 3, 0.1, 3)}}; }});
  }
  {
    Expression X = variable("X", {3, 3});
    out.push_back({"eye_minus_inv",
                   Problem(Sense::Minimize, trace(eye_minus_inv(X)) * pow(index(X, 1, 2), -1),
                           {index(X, 0, 0) + index(X, 1, 1) <= 0.5, X <= 0.3, X >= 0.005}),
                   [](Rng& rng) { return Assignment{{"X", random_positive(rng, 3, 3, 0.01, 0.3)}}; }});
  }
  {
    Expression X = variable("X", {2, 2});
    out.push_back({"resolvent",
                   Problem(Sense::Minimize, index(resolvent(X, 2.0), 0, 1) + pow(index(X, 1, 1), -1),
                           {pnorm(slice(X, 0, 2, 0, 1), 2.0) <= 1.2, 0.05 <= harmonic_mean(slice(X, 0, 2, 1, 2)),
                            X <= 0.9, X >= 0.05}),
                   [](Rng& rng) { return Assignment{{"X", random_positive(rng, 2, 2, 0.1, 0.9)}}; }});
  }
  {
    Expression x = variable("x"), y = variable("y");
    out.push_back({"one_minus_diff_pos",
                   Problem(Sense::Maximize, x * y * one_minus(x + y), {y <= diff_pos(constant(0.9), x)}),
                   [=](Rng& rng) {
                     return Assignment{{"x", scalar(uniform(rng, 0.02, 0.98))}, {"y", scalar(uniform(rng, 0.02, 0.98))}};
                   }});
  }
  {
    Expression x = variable("x"), y = variable("y");
    out.push_back({"entropy_log", Problem(Sense::Maximize, entropy(x) * log(y), {y <= 5.0, x <= 0.9}), [=](Rng& rng) {
                     return Assignment{{"x", scalar(uniform(rng, 0.01, 0.99))}, {"y", scalar(log_uniform(rng, 1.05, 10))}};
                   }});
  }
  {
    Expression x = variable("x"), y = variable("y"), v = variable("v", {3, 1});
    out.push_back({"max_min_sum_largest",
                   Problem(Sense::Minimize, max({x, y, x * y}) + sum_largest(v, 2),
                           {0.5 <= min({x, y}), 1.0 <= geo_mean(v)}),
                   [=](Rng& rng) {
                     return Assignment{{"x", scalar(log_uniform(rng, 0.2, 5))},
                                       {"y", scalar(log_uniform(rng, 0.2, 5))},
                                       {"v", random_positive(rng, 3, 1, 0.2, 5)}};
                   }});
  }
  {
    Expression A = variable("A", {2, 3}), B = variable("B", {3, 2});
    out.push_back({"matmul",
                   Problem(Sense::Minimize, trace(matmul(A, B)) + pow(index(A, 0, 0), -1),
                           {1.0 <= index(A, 1, 2) * index(B, 2, 1), matmul(A, B) <= 20.0, A >= 0.05, B >= 0.05}),
                   [](Rng& rng) {
                     return Assignment{{"A", random_positive(rng, 2, 3, 0.1, 3)}, {"B", random_positive(rng, 3, 2, 0.1, 3)}};
                   }});
  }
  {
    Expression x = variable("x"), y = variable("y");
    out.push_back({"exp_pow_div",
                   Problem(Sense::Minimize, exp(x / y) + pow(y, -2), {exp(x) <= 5.0 * y, x * y >= 0.1, y <= 10.0}),
                   [=](Rng& rng) {
                     return Assignment{{"x", scalar(log_uniform(rng, 0.05, 3))}, {"y", scalar(log_uniform(rng, 0.1, 10))}};
                   }});
  }
  {
    Expression v = variable("v", {4, 1});
    out.push_back({"harmonic_mean_pnorm", Problem(Sense::Maximize, harmonic_mean(v), {pnorm(v, 1.0) <= 3.0}),
                   [=](Rng& rng) { return Assignment{{"v", random_positive(rng, 4, 1, 0.05, 2)}}; }});
  }
  return out;
}

bool strictly_feasible(const Problem& p, const Assignment& point) {
  try {
    for (const Constraint& c : p.constraints()) {
      Matrix l = evaluate(c.lhs(), point), r = evaluate(c.rhs(), point);
      if (l.rows() != r.rows() || l.cols() != r.cols()) {
        if (r.size() == 1) r = Matrix::Constant(l.rows(), l.cols(), r(0, 0));
        if (l.size() == 1) l = Matrix::Constant(r.rows(), r.cols(), l(0, 0));
      }
      for (Eigen::Index i = 0; i < l.size(); ++i) {
        const double a = l.data()[i], b = r.data()[i];
        if (c.kind() == ConstraintKind::LessEq ? !(a < b) : std::abs(a / b - 1.0) > 1e-12) return false;
      }
    }
    evaluate(p.objective(), point);
  } catch (const DomainError&) {
    return false;
  }
  return true;
}

double max_constraint_ratio(const Problem& p, const Assignment& point) {
  double worst = 0.0;
  for (const Constraint& c : p.constraints()) {
    Matrix l = evaluate(c.lhs(), point), r = evaluate(c.rhs(), point);
    for (Eigen::Index i = 0; i < std::max(l.size(), r.size()); ++i) {
      const double a = l.size() == 1 ? l(0, 0) : l.data()[i];
      const double b = r.size() == 1 ? r(0, 0) : r.data()[i];
      worst = std::max(worst, c.kind() == ConstraintKind::LessEq ? a / b : std::max(a / b, b / a));
    }
  }
  return worst;
}

}  // namespace llcp::testing
