#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "llcp/dgp.hpp"
#include "llcp/error.hpp"
#include "llcp/exp_sum_program.hpp"
#include "llcp/problem.hpp"
#include "llcp/solver.hpp"

namespace llcp {

/// Raised by lower() for problems that fail the DGP check.
class NotDgpError : public Error {
 public:
  explicit NotDgpError(DgpReport report) : Error("problem is not DGP: " + report.message), report_(std::move(report)) {}
  const DgpReport& report() const { return report_; }

 private:
  DgpReport report_;
};

struct RetrievalMap {
  struct VariableEntry {
    std::string name;
    Shape shape;
    std::vector<std::size_t> coordinates;  // row-major
  };
  struct ConstraintEntry {
    std::uint64_t id = 0;
    ConstraintKind kind = ConstraintKind::LessEq;
    Shape shape;
    /// Principal canonical constraint per entry: indices into
    /// inequalities (LessEq) or equalities (Eq).
    std::vector<std::size_t> principal;
  };

  Sense sense = Sense::Minimize;
  double objective_offset = 0.0;
  std::vector<VariableEntry> variables;
  std::vector<ConstraintEntry> constraints;
  std::size_t num_coordinates = 0;
  std::size_t num_inequalities = 0;
  std::size_t num_equalities = 0;
};

struct LoweredProblem {
  ExpSumProgram program;
  RetrievalMap map;
};

/// Throws NotDgpError, or ConstructionError when an expansion is too large.
LoweredProblem lower(const Problem& problem);

/// Output forms and the indices of the inequalities added to the program.
struct GraphResult {
  FormMatrix output;
  std::vector<std::size_t> constraints;
};

/// Epigraph of the Perron-Frobenius eigenvalue of exp(U): auxiliaries t and
/// nu with sum_j exp(U_ij + nu_j - t - nu_i) <= 1. nu_0 is pinned to 0 since
/// the eigenvector is only defined up to scale. When `bound` is given it
/// replaces the fresh t.
GraphResult graph_pf_eigenvalue(ExpSumProgram& program, const FormMatrix& u, const AffineForm* bound = nullptr,
                                const std::string& tag = "pf");

/// Graph of (I - exp(U))^-1: auxiliaries W with
/// sum_k exp(W_ik + U_kj - W_ij) + [i=j] exp(-W_ij) <= 1. Output is W.
GraphResult graph_eye_minus_inv(ExpSumProgram& program, const FormMatrix& u, const std::string& tag = "eye_minus_inv");

/// Maps a canonical result back to the original problem.
/// Throws Error when the result does not match the map's dimensions.
Solution retrieve(const RetrievalMap& map, const SolverResult& result, const ExpSumProgram* program = nullptr);

/// Canonical point for an original assignment: log of variable entries and
/// tight values for auxiliaries.
Eigen::VectorXd lift_point(const ExpSumProgram& program, const Assignment& point);

/// lower, solve and retrieve in one call.
Solution solve_problem(const Problem& problem, const SolverSettings& settings = {});

}  // namespace llcp
