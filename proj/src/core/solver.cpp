#include "llcp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>

namespace llcp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense copy of sum_k exp(A_k x + b_k) + f'x + g.
struct DenseConstraint {
  MatrixXd A;
  VectorXd b;
  VectorXd f;
  double g = 0.0;
};

DenseConstraint densify(const ExpSumConstraint& c, Index n) {
  DenseConstraint d;
  d.A = MatrixXd::Zero(static_cast<Index>(c.exp_terms.size()), n);
  d.b.resize(d.A.rows());
  for (Index k = 0; k < d.A.rows(); ++k) {
    const AffineForm& t = c.exp_terms[static_cast<std::size_t>(k)];
    for (const auto& [i, a] : t.terms()) d.A(k, static_cast<Index>(i)) = a;
    d.b(k) = t.constant();
  }
  d.f = c.tail.dense(static_cast<std::size_t>(n));
  d.g = c.tail.constant();
  return d;
}

// Returns false on overflow (value then +inf).
bool evaluate(const DenseConstraint& c, const VectorXd& x, double& h, VectorXd* grad, MatrixXd* hess) {
  VectorXd z = c.A * x + c.b;
  if (z.size() > 0 && !(z.maxCoeff() <= kExpOverflow)) {
    h = kInf;
    return false;
  }
  VectorXd e = z.array().exp();
  h = e.sum() + c.f.dot(x) + c.g;
  if (grad) *grad = c.A.transpose() * e + c.f;
  if (hess) *hess = c.A.transpose() * e.asDiagonal() * c.A;
  return std::isfinite(h);
}

// minimize c'x + c0 s.t. cons(x) <= 0, E x = d, |x_j| < box_j.
struct Barrier {
  VectorXd c;
  double c0 = 0.0;
  std::vector<DenseConstraint> cons;
  MatrixXd E;
  VectorXd d;
  VectorXd box;  // +inf for unboxed coordinates

  Index n() const { return c.size(); }
  Index num_box() const { return static_cast<Index>((box.array() < kInf).count()); }
  double total_inequalities() const { return static_cast<double>(cons.size()) + 2.0 * num_box(); }
  double objective(const VectorXd& x) const { return c.dot(x) + c0; }

  bool inside_box(const VectorXd& x) const {
    for (Index j = 0; j < x.size(); ++j)
      if (box(j) < kInf && !(std::abs(x(j)) < box(j))) return false;
    return true;
  }

  // Values of all constraints; false if any is not strictly negative.
  bool values(const VectorXd& x, VectorXd& h) const {
    h.resize(static_cast<Index>(cons.size()));
    bool ok = true;
    for (std::size_t i = 0; i < cons.size(); ++i) {
      double v;
      evaluate(cons[i], x, v, nullptr, nullptr);
      h(static_cast<Index>(i)) = v;
      if (!(v < 0.0)) ok = false;
    }
    return ok && inside_box(x);
  }
};

enum class CenterStatus { Converged, IterationLimit, Stalled, Unbounded, EarlyStop, NumericFailure };

struct CenterOutcome {
  CenterStatus status = CenterStatus::Converged;
  int steps = 0;
  double decrement = 0.0;
  VectorXd w;  // multipliers of E x = d in the last KKT solve
};

struct CenterOptions {
  bool detect_unbounded = false;
  std::function<bool(const VectorXd&)> early_stop;
};

// Solves [H + reg I, E'; E, 0] [dx; w] = [-g; -r].
bool solve_kkt(const MatrixXd& H, const MatrixXd& E, const VectorXd& g, const VectorXd& r, double reg, VectorXd& dx,
               VectorXd& w) {
  const Index n = H.rows(), p = E.rows();
  if (p == 0) {
    MatrixXd Hr = H;
    Hr.diagonal().array() += reg;
    Eigen::LDLT<MatrixXd> ldlt(Hr);
    VectorXd rhs = -g;
    if (ldlt.info() == Eigen::Success) {
      dx = ldlt.solve(rhs);
      for (int it = 0; it < 2 && dx.allFinite(); ++it) dx += ldlt.solve(rhs - H * dx);
    }
    if (ldlt.info() != Eigen::Success || !dx.allFinite()) dx = H.completeOrthogonalDecomposition().solve(rhs);
    w.resize(0);
    return dx.allFinite();
  }
  MatrixXd K = MatrixXd::Zero(n + p, n + p);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, p) = E.transpose();
  K.bottomLeftCorner(p, n) = E;
  VectorXd rhs(n + p);
  rhs << -g, -r;
  // Only the Hessian block is regularized: a shift on the equality block
  // would let A x = d drift once the multipliers grow with tau.
  MatrixXd Kr = K;
  Kr.diagonal().head(n).array() += reg;
  Eigen::PartialPivLU<MatrixXd> lu(Kr);
  VectorXd sol = lu.solve(rhs);
  for (int it = 0; it < 2 && sol.allFinite(); ++it) sol += lu.solve(rhs - K * sol);
  double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-6 * scale)
    sol = Kr.completeOrthogonalDecomposition().solve(rhs);
  dx = sol.head(n);
  w = sol.tail(p);
  return sol.allFinite();
}

struct NewtonSystem {
  VectorXd h;                   // constraint values
  std::vector<VectorXd> grads;  // constraint gradients
  VectorXd g;                   // gradient of tau*f0 + barrier
  MatrixXd H;
  VectorXd r;  // E x - d
  VectorXd dx, w;
};

// Assembles and solves the Newton KKT system at a strictly feasible x.
bool newton_system(const Barrier& bp, const VectorXd& x, double tau, double reg, NewtonSystem& ns) {
  const Index n = bp.n();
  ns.g = tau * bp.c;
  ns.H = MatrixXd::Zero(n, n);
  ns.h.resize(static_cast<Index>(bp.cons.size()));
  ns.grads.resize(bp.cons.size());
  for (std::size_t i = 0; i < bp.cons.size(); ++i) {
    double v;
    MatrixXd Hi;
    if (!evaluate(bp.cons[i], x, v, &ns.grads[i], &Hi) || !(v < 0.0)) return false;
    ns.h(static_cast<Index>(i)) = v;
    double inv = 1.0 / -v;
    ns.g += inv * ns.grads[i];
    ns.H.noalias() += (inv * inv) * ns.grads[i] * ns.grads[i].transpose();
    ns.H += inv * Hi;
  }
  for (Index j = 0; j < n; ++j) {
    if (!(bp.box(j) < kInf)) continue;
    double a = 1.0 / (bp.box(j) - x(j)), b = 1.0 / (bp.box(j) + x(j));
    ns.g(j) += a - b;
    ns.H(j, j) += a * a + b * b;
  }
  ns.r = bp.E.rows() > 0 ? VectorXd(bp.E * x - bp.d) : VectorXd(0);
  return solve_kkt(ns.H, bp.E, ns.g, ns.r, reg, ns.dx, ns.w);
}

CenterOutcome center(const Barrier& bp, VectorXd& x, double tau, const SolverSettings& s, const CenterOptions& opt,
                     int& newton_counter) {
  CenterOutcome out;
  const Index n = bp.n();
  NewtonSystem ns;
  for (;;) {
    if (!newton_system(bp, x, tau, s.hessian_reg, ns)) {
      out.status = CenterStatus::NumericFailure;
      return out;
    }
    const VectorXd& h = ns.h;
    const VectorXd& g = ns.g;
    const VectorXd& r = ns.r;
    const VectorXd& dx = ns.dx;
    const MatrixXd& H = ns.H;
    out.w = ns.w;
    double dec2 = std::max(0.0, dx.dot(H * dx));
    out.decrement = std::sqrt(dec2);
    if (dec2 / 2.0 <= 1e-12 && (r.size() == 0 || r.lpNorm<Eigen::Infinity>() <= 1e-12)) {
      out.status = CenterStatus::Converged;
      return out;
    }
    if (out.steps >= s.max_newton_iters) {
      out.status = CenterStatus::IterationLimit;
      return out;
    }

    // Backtracking: strict feasibility first, then sufficient decrease of the
    // barrier function measured as a difference to avoid cancellation.
    double slope = g.dot(dx);
    double step = 1.0;
    VectorXd xn, hn;
    bool accepted = false;
    while (step >= 1e-14) {
      xn = x + step * dx;
      if (bp.values(xn, hn)) {
        double dphi = tau * step * bp.c.dot(dx);
        for (Index i = 0; i < h.size(); ++i) dphi -= std::log(hn(i) / h(i));
        for (Index j = 0; j < n; ++j) {
          if (!(bp.box(j) < kInf)) continue;
          dphi -= std::log((bp.box(j) - xn(j)) / (bp.box(j) - x(j)));
          dphi -= std::log((bp.box(j) + xn(j)) / (bp.box(j) + x(j)));
        }
        // Inside the quadratic convergence region the full step is taken
        // without the decrease test, which is lost in rounding at large tau.
        if (dphi <= s.alpha * step * slope || (step == 1.0 && out.decrement < 1e-3)) {
          accepted = true;
          break;
        }
      }
      step *= s.beta;
    }
    if (!accepted) {
      out.status = CenterStatus::Stalled;
      return out;
    }
    x = xn;
    ++out.steps;
    ++newton_counter;
    if (opt.detect_unbounded && bp.objective(x) < s.unbounded_threshold) {
      out.status = CenterStatus::Unbounded;
      return out;
    }
    if (opt.early_stop && opt.early_stop(x)) {
      out.status = CenterStatus::EarlyStop;
      return out;
    }
  }
}

void equality_system(const ExpSumProgram& program, MatrixXd& E, VectorXd& d) {
  const Index n = static_cast<Index>(program.num_coordinates());
  const Index p = static_cast<Index>(program.equalities.size());
  E = MatrixXd::Zero(p, n);
  d.resize(p);
  for (Index k = 0; k < p; ++k) {
    const AffineForm& row = program.equalities[static_cast<std::size_t>(k)].row;
    for (const auto& [i, a] : row.terms()) E(k, static_cast<Index>(i)) = a;
    d(k) = -row.constant();
  }
}

double max_violation(const std::vector<DenseConstraint>& cons, const VectorXd& u) {
  double m = -kInf;
  for (const DenseConstraint& c : cons) {
    double v;
    evaluate(c, u, v, nullptr, nullptr);
    m = std::max(m, v);
  }
  return m;
}

constexpr double kEarlyMargin = 1e-3;

}  // namespace

void SolverSettings::validate() const {
  if (!(mu > 1.0)) throw std::invalid_argument("barrier multiplier mu must be > 1");
  if (!(initial_barrier > 0.0)) throw std::invalid_argument("initial barrier weight must be > 0");
  if (!(gap_tol > 0.0) || !(feas_tol > 0.0)) throw std::invalid_argument("tolerances must be > 0");
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 0.5)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  if (max_newton_iters < 1 || max_outer_iters < 1) throw std::invalid_argument("iteration limits must be >= 1");
  if (!(hessian_reg >= 0.0)) throw std::invalid_argument("Hessian regularization must be >= 0");
  if (!(coordinate_bound > 0.0)) throw std::invalid_argument("coordinate bound must be > 0");
}

ConstraintEval constraint_value_grad_hess(const ExpSumConstraint& constraint, const VectorXd& u) {
  DenseConstraint d = densify(constraint, u.size());
  ConstraintEval out;
  out.overflow = !evaluate(d, u, out.value, &out.gradient, &out.hessian);
  if (out.overflow) {
    out.value = kInf;
    out.gradient = VectorXd::Constant(u.size(), std::numeric_limits<double>::quiet_NaN());
    out.hessian = MatrixXd::Constant(u.size(), u.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

KktResidual kkt_residual(const ExpSumProgram& program, const VectorXd& u, const VectorXd& lambda, const VectorXd& nu) {
  const Index n = static_cast<Index>(program.num_coordinates());
  if (u.size() != n || lambda.size() != static_cast<Index>(program.inequalities.size()) ||
      nu.size() != static_cast<Index>(program.equalities.size()))
    throw std::invalid_argument("kkt_residual: dimension mismatch");
  KktResidual res;
  VectorXd stat = program.objective.dense(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < program.inequalities.size(); ++i) {
    ConstraintEval ev = constraint_value_grad_hess(program.inequalities[i], u);
    double l = lambda(static_cast<Index>(i));
    stat += l * ev.gradient;
    res.primal = std::max(res.primal, ev.value);
    res.complementarity = std::max(res.complementarity, std::abs(l * ev.value));
  }
  MatrixXd E;
  VectorXd d;
  equality_system(program, E, d);
  if (E.rows() > 0) {
    stat += E.transpose() * nu;
    res.primal = std::max(res.primal, (E * u - d).lpNorm<Eigen::Infinity>());
  }
  res.stationarity = n > 0 ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  return res;
}

Phase1Result phase1(const ExpSumProgram& program, const SolverSettings& settings) {
  settings.validate();
  const Index n = static_cast<Index>(program.num_coordinates());
  Phase1Result out;

  MatrixXd E;
  VectorXd d;
  equality_system(program, E, d);
  VectorXd u0 = VectorXd::Zero(n);
  if (E.rows() > 0) {
    u0 = E.completeOrthogonalDecomposition().solve(d);
    double resid = (E * u0 - d).lpNorm<Eigen::Infinity>();
    if (!(resid <= 1e-9 * (1.0 + d.lpNorm<Eigen::Infinity>()))) {
      out.status = Status::Infeasible;
      out.u = u0;
      out.s_lower = resid;
      out.message = "equality constraints are inconsistent (residual " + std::to_string(resid) + ")";
      return out;
    }
  }

  std::vector<DenseConstraint> cons;
  for (const ExpSumConstraint& c : program.inequalities) cons.push_back(densify(c, n));
  double hmax = max_violation(cons, u0);
  out.u = u0;
  out.max_violation = hmax;
  if (cons.empty() || hmax <= -kEarlyMargin) {
    out.status = Status::Optimal;
    return out;
  }
  if (!std::isfinite(hmax)) {
    out.message = "phase I start overflows";
    return out;
  }

  // Variables (u, s): minimize s s.t. h_i(u) - s <= 0, -s - 1 <= 0.
  Barrier bp;
  bp.c = VectorXd::Zero(n + 1);
  bp.c(n) = 1.0;
  for (const DenseConstraint& c : cons) {
    DenseConstraint e;
    e.A = MatrixXd::Zero(c.A.rows(), n + 1);
    e.A.leftCols(n) = c.A;
    e.b = c.b;
    e.f = VectorXd::Zero(n + 1);
    e.f.head(n) = c.f;
    e.f(n) = -1.0;
    e.g = c.g;
    bp.cons.push_back(std::move(e));
  }
  DenseConstraint floor;
  floor.A = MatrixXd::Zero(0, n + 1);
  floor.b = VectorXd(0);
  floor.f = VectorXd::Zero(n + 1);
  floor.f(n) = -1.0;
  floor.g = -1.0;
  bp.cons.push_back(floor);
  bp.E = MatrixXd::Zero(E.rows(), n + 1);
  bp.E.leftCols(n) = E;
  bp.d = d;
  double bound = std::max(settings.coordinate_bound, 2.0 * (n > 0 ? u0.lpNorm<Eigen::Infinity>() : 0.0) + 1.0);
  bp.box = VectorXd::Constant(n + 1, bound);
  bp.box(n) = kInf;

  VectorXd x(n + 1);
  x << u0, hmax + 1.0;

  CenterOptions opt;
  opt.early_stop = [&](const VectorXd& xs) { return max_violation(cons, xs.head(n)) <= -kEarlyMargin; };
  double tau = settings.initial_barrier;
  const double m = bp.total_inequalities();
  for (int outer = 0; outer < settings.max_outer_iters; ++outer) {
    CenterOutcome co = center(bp, x, tau, settings, opt, out.newton_iterations);
    out.u = x.head(n);
    out.max_violation = max_violation(cons, out.u);
    if (co.status == CenterStatus::NumericFailure) {
      out.message = "phase I: numerical failure in Newton step";
      return out;
    }
    if (out.max_violation < 0.0) {
      out.status = Status::Optimal;
      return out;
    }
    out.s_lower = x(n) - m / tau;
    if (out.s_lower > settings.feas_tol) {
      out.status = Status::Infeasible;
      out.message = "phase I optimum is positive (lower bound " + std::to_string(out.s_lower) + ")";
      return out;
    }
    if (m / tau <= settings.gap_tol) {
      out.message = "phase I converged on the boundary of the feasible set";
      return out;
    }
    tau *= settings.mu;
  }
  out.message = "phase I: outer iteration limit reached";
  return out;
}

SolverResult solve(const ExpSumProgram& program, const SolverSettings& settings) {
  settings.validate();
  const Index n = static_cast<Index>(program.num_coordinates());
  const Index m = static_cast<Index>(program.inequalities.size());
  SolverResult res;
  res.lambda = VectorXd::Zero(m);
  res.nu = VectorXd::Zero(static_cast<Index>(program.equalities.size()));

  Phase1Result p1 = phase1(program, settings);
  res.phase1_iterations = p1.newton_iterations;
  res.newton_iterations = p1.newton_iterations;
  res.u = p1.u;
  if (p1.status != Status::Optimal) {
    res.status = p1.status;
    res.message = p1.message;
    res.value = p1.status == Status::Infeasible ? kInf : program.objective.evaluate(p1.u);
    return res;
  }

  Barrier bp;
  bp.c = program.objective.dense(static_cast<std::size_t>(n));
  bp.c0 = program.objective.constant();
  for (const ExpSumConstraint& c : program.inequalities) bp.cons.push_back(densify(c, n));
  equality_system(program, bp.E, bp.d);
  double bound = std::max(settings.coordinate_bound, 2.0 * (n > 0 ? p1.u.lpNorm<Eigen::Infinity>() : 0.0) + 1.0);
  bp.box = VectorXd::Constant(n, bound);

  VectorXd x = p1.u;
  CenterOptions opt;
  opt.detect_unbounded = true;
  double tau = settings.initial_barrier;
  const double mt = bp.total_inequalities();
  VectorXd w = VectorXd::Zero(bp.E.rows());
  for (int outer = 0; outer < settings.max_outer_iters; ++outer) {
    CenterOutcome co = center(bp, x, tau, settings, opt, res.newton_iterations);
    res.outer_iterations = outer + 1;
    if (co.w.size() == w.size()) w = co.w;
    CenteringRecord rec;
    rec.tau = tau;
    rec.newton_steps = co.steps;
    rec.objective = bp.objective(x);
    rec.gap = mt / tau;
    rec.decrement = co.decrement;
    rec.primal_residual = bp.E.rows() > 0 ? (bp.E * x - bp.d).lpNorm<Eigen::Infinity>() : 0.0;
    res.history.push_back(rec);
    if (settings.verbose)
      std::fprintf(stderr, "[llcp] tau=%.3e newton=%d obj=%.12g gap=%.3e dec=%.3e eq=%.3e\n", rec.tau,
                   rec.newton_steps, rec.objective, rec.gap, rec.decrement, rec.primal_residual);
    res.u = x;
    res.value = bp.objective(x);
    res.gap = rec.gap;
    if (co.status == CenterStatus::Unbounded) {
      res.status = Status::Unbounded;
      res.value = -kInf;
      res.message = "objective fell below the unboundedness threshold";
      return res;
    }
    if (co.status == CenterStatus::NumericFailure) {
      res.status = Status::MaxIterations;
      res.message = "numerical failure in Newton step at tau=" + std::to_string(tau);
      return res;
    }
    if (rec.gap <= settings.gap_tol) {
      res.status = Status::Optimal;
      break;
    }
    tau *= settings.mu;
  }
  if (res.status != Status::Optimal) res.message = "outer iteration limit reached";

  // Dual estimates at the final central point, lambda_i = 1/(tau*(-h_i)),
  // with the first-order correction from one more Newton system. Both use the
  // same h values, so their rounding cancels in the stationarity residual.
  NewtonSystem ns;
  if (newton_system(bp, x, tau, settings.hessian_reg, ns)) {
    for (Index i = 0; i < m; ++i) {
      double inv = 1.0 / -ns.h(i);
      double corr = ns.grads[static_cast<std::size_t>(i)].dot(ns.dx) * inv;
      res.lambda(i) = std::max(0.0, inv * (1.0 + corr) / tau);
    }
    if (bp.E.rows() > 0) res.nu = ns.w / tau;
  } else {
    for (Index i = 0; i < m; ++i) {
      double v;
      evaluate(bp.cons[static_cast<std::size_t>(i)], x, v, nullptr, nullptr);
      res.lambda(i) = 1.0 / (tau * -v);
    }
    if (bp.E.rows() > 0) res.nu = w / tau;
  }
  return res;
}

}  // namespace llcp
