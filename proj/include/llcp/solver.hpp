#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llcp/exp_sum_program.hpp"
#include "llcp/problem.hpp"

namespace llcp {

struct SolverSettings {
  double mu = 10.0;
  double initial_barrier = 1.0;
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  double alpha = 0.25;
  double beta = 0.5;
  int max_newton_iters = 50;
  int max_outer_iters = 100;
  double unbounded_threshold = -1e3;
  double hessian_reg = 1e-10;
  /// Implicit box |u_i| <= coordinate_bound kept by the barrier. Log-space
  /// directions along which the objective is flat would otherwise drift.
  double coordinate_bound = 1200.0;
  bool verbose = false;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// One line of the iteration log, recorded at the end of each centering step.
struct CenteringRecord {
  double tau = 0.0;
  int newton_steps = 0;
  double objective = 0.0;
  double gap = 0.0;
  double decrement = 0.0;
  double primal_residual = 0.0;
};

struct SolverResult {
  Status status = Status::MaxIterations;
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;  // one per inequality
  Eigen::VectorXd nu;      // one per equality row
  double value = 0.0;      // canonical objective, including its constant
  std::vector<CenteringRecord> history;
  int outer_iterations = 0;
  int newton_iterations = 0;
  int phase1_iterations = 0;
  double gap = 0.0;
  std::string message;
};

struct ConstraintEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  bool overflow = false;
};

/// Exponents above this are reported as overflow (value +inf).
inline constexpr double kExpOverflow = 700.0;

ConstraintEval constraint_value_grad_hess(const ExpSumConstraint& constraint, const Eigen::VectorXd& u);

struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
};

KktResidual kkt_residual(const ExpSumProgram& program, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                         const Eigen::VectorXd& nu);

struct Phase1Result {
  /// Optimal: u is strictly feasible. Infeasible: certificate s_lower > 0.
  Status status = Status::MaxIterations;
  Eigen::VectorXd u;
  double max_violation = 0.0;  // max_i h_i(u)
  double s_lower = 0.0;        // lower bound on the phase I optimum
  int newton_iterations = 0;
  std::string message;
};

Phase1Result phase1(const ExpSumProgram& program, const SolverSettings& settings = {});

SolverResult solve(const ExpSumProgram& program, const SolverSettings& settings = {});

}  // namespace llcp
