#include "llcp/problem.hpp"

#include <atomic>
#include <set>

#include "llcp/error.hpp"

namespace llcp {

namespace {
std::atomic<std::uint64_t> next_constraint_id{1};
}

Constraint::Constraint(ConstraintKind kind, Expression lhs, Expression rhs)
    : kind_(kind), lhs_(std::move(lhs)), rhs_(std::move(rhs)), id_(next_constraint_id.fetch_add(1)) {
  if (lhs_.shape() != rhs_.shape())
    throw ConstructionError("constraint sides have different shapes (" + lhs_.shape().str() +
                            " vs " + rhs_.shape().str() + ")");
}

Constraint operator<=(const Expression& lhs, const Expression& rhs) {
  return Constraint(ConstraintKind::LessEq, lhs, rhs);
}
Constraint operator>=(const Expression& lhs, const Expression& rhs) {
  return Constraint(ConstraintKind::LessEq, rhs, lhs);
}
Constraint operator==(const Expression& lhs, const Expression& rhs) {
  return Constraint(ConstraintKind::Eq, lhs, rhs);
}
namespace {
// A number on one side of a constraint is broadcast to the other side's shape.
Expression filled(double v, const Shape& s) {
  return constant(Matrix::Constant(static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols), v));
}
}  // namespace

Constraint operator<=(const Expression& lhs, double rhs) { return lhs <= filled(rhs, lhs.shape()); }
Constraint operator>=(const Expression& lhs, double rhs) { return lhs >= filled(rhs, lhs.shape()); }
Constraint operator==(const Expression& lhs, double rhs) { return lhs == filled(rhs, lhs.shape()); }
Constraint operator<=(double lhs, const Expression& rhs) { return filled(lhs, rhs.shape()) <= rhs; }

std::string_view to_string(Sense s) { return s == Sense::Minimize ? "minimize" : "maximize"; }

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::MaxIterations: return "max_iterations";
  }
  return "max_iterations";
}

Problem::Problem(Sense sense, Expression objective, std::vector<Constraint> constraints)
    : sense_(sense), objective_(std::move(objective)), constraints_(std::move(constraints)) {
  if (!objective_.shape().is_scalar())
    throw ConstructionError("objective must be scalar, got shape " + objective_.shape().str());

  std::map<std::string, std::uint64_t> ids_by_name;
  auto add_vars = [&](const Expression& e) {
    for (const Expression& v : llcp::variables(e)) {
      auto [it, inserted] = ids_by_name.emplace(v.name(), v.variable_id());
      if (inserted) {
        variables_.push_back(v);
      } else if (it->second != v.variable_id()) {
        throw ConstructionError("duplicate variable name '" + v.name() + "'");
      }
    }
  };
  add_vars(objective_);
  std::set<std::uint64_t> constraint_ids;
  for (const Constraint& c : constraints_) {
    if (!constraint_ids.insert(c.id()).second)
      throw ConstructionError("constraint " + std::to_string(c.id()) + " appears twice");
    add_vars(c.lhs());
    add_vars(c.rhs());
  }
}

}  // namespace llcp
