#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "llcp/atoms.hpp"
#include "llcp/exp_sum_program.hpp"
#include "llcp/problem.hpp"

namespace llcp::testing {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
/// Log-uniform in [lo, hi].
double log_uniform(Rng& rng, double lo, double hi);

Matrix random_positive(Rng& rng, std::size_t rows, std::size_t cols, double lo = 0.1, double hi = 3.0);

/// Positive n x n matrix rescaled to the given spectral radius.
Matrix random_with_radius(Rng& rng, std::size_t n, double radius);

/// Spectral radius from Eigen's general eigensolver.
double eigen_spectral_radius(const Matrix& x);

/// (I - X)^-1 from the Neumann series, summed until terms are negligible.
Matrix neumann_inverse(const Matrix& x);

/// One way of exercising an atom: fixed parameters and a sampler of
/// in-domain arguments.
struct AtomCase {
  std::string atom;
  std::vector<double> params;
  std::function<std::vector<Matrix>(Rng&)> sample;
  std::string label() const;
};

/// Covers every registered atom at least once.
std::vector<AtomCase> atom_cases();

/// A unary atom applied to one positive scalar, and an interior interval of
/// its domain.
struct ScalarCase {
  std::string atom;
  std::vector<double> params;
  double lo;
  double hi;
  std::string label() const;
};

std::vector<ScalarCase> scalar_cases();

/// Worst signed violation of the geometric-mean Jensen property for the
/// atom's declared curvature, on the log scale, at the point pair (x, y) and
/// weight theta. Nonpositive when the property holds exactly.
double jensen_violation(const AtomCase& c, const std::vector<Matrix>& x, const std::vector<Matrix>& y, double theta);

/// Maximum errors of the analytic gradient and Hessian of an exp-sum
/// constraint against central finite differences, relative to
/// max(1, |reference|).
struct DerivativeErrors {
  double gradient = 0.0;
  double hessian = 0.0;
};
DerivativeErrors derivative_errors(const ExpSumConstraint& c, const Eigen::VectorXd& u);

/// Small DGP problems that together use every registered atom, with a sampler
/// of candidate points inside the atoms' domains.
struct CatalogProblem {
  std::string name;
  Problem problem;
  std::function<Assignment(Rng&)> sample;
};
std::vector<CatalogProblem> problem_catalog();

/// Every constraint holds strictly at the point (equalities to 1e-12).
/// Points outside an atom domain count as infeasible.
bool strictly_feasible(const Problem& p, const Assignment& point);

/// Largest constraint ratio lhs/rhs at the point (1 means tight).
double max_constraint_ratio(const Problem& p, const Assignment& point);

}  // namespace llcp::testing
