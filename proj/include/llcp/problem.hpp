#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "llcp/expression.hpp"

namespace llcp {

enum class ConstraintKind { LessEq, Eq };

/// Elementwise constraint `lhs <= rhs` or `lhs == rhs`. Each constraint gets a
/// process-unique id at construction; dual values are keyed by it.
class Constraint {
 public:
  Constraint(ConstraintKind kind, Expression lhs, Expression rhs);

  ConstraintKind kind() const { return kind_; }
  const Expression& lhs() const { return lhs_; }
  const Expression& rhs() const { return rhs_; }
  std::uint64_t id() const { return id_; }

 private:
  ConstraintKind kind_;
  Expression lhs_;
  Expression rhs_;
  std::uint64_t id_;
};

Constraint operator<=(const Expression& lhs, const Expression& rhs);
Constraint operator>=(const Expression& lhs, const Expression& rhs);
Constraint operator==(const Expression& lhs, const Expression& rhs);
/// A number on either side is broadcast to the shape of the expression.
Constraint operator<=(const Expression& lhs, double rhs);
Constraint operator>=(const Expression& lhs, double rhs);
Constraint operator==(const Expression& lhs, double rhs);
Constraint operator<=(double lhs, const Expression& rhs);

enum class Sense { Minimize, Maximize };

std::string_view to_string(Sense s);

class Problem {
 public:
  /// Throws ConstructionError if the objective is not scalar, if two distinct
  /// variables share a name, or if constraint ids repeat.
  Problem(Sense sense, Expression objective, std::vector<Constraint> constraints = {});

  Sense sense() const { return sense_; }
  const Expression& objective() const { return objective_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  /// Distinct variables, objective first, then constraints in order.
  const std::vector<Expression>& variables() const { return variables_; }

 private:
  Sense sense_;
  Expression objective_;
  std::vector<Constraint> constraints_;
  std::vector<Expression> variables_;
};

enum class Status { Optimal, Infeasible, Unbounded, MaxIterations };

std::string_view to_string(Status s);

struct SolveStats {
  int outer_iterations = 0;
  int newton_iterations = 0;
  int phase1_iterations = 0;
  double stationarity = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::quiet_NaN();
  double complementarity = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  /// Diagnostic values of auxiliary quantities (e.g. Perron vectors),
  /// keyed by their canonical coordinate tag. No accuracy guarantee.
  std::map<std::string, double> auxiliary;
  std::string message;
};

struct Solution {
  Status status = Status::MaxIterations;
  double optimal_value = std::numeric_limits<double>::quiet_NaN();
  Assignment variable_values;
  /// Keyed by Constraint::id(); shape of the constraint.
  std::map<std::uint64_t, Matrix> dual_values;
  SolveStats stats;
};

}  // namespace llcp
