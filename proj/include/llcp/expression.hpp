#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llcp/atoms.hpp"
#include "llcp/shape.hpp"

namespace llcp {

enum class NodeKind { Variable, Constant, Atom };

/// Name -> value map used to evaluate expressions.
using Assignment = std::map<std::string, Matrix, std::less<>>;

/// Immutable expression-tree node handle. Copies share the underlying node.
///
/// Leaves are positive variables or positive constants; interior nodes apply a
/// registered atom to child expressions. Shapes are checked at construction.
class Expression {
 public:
  struct Node;

  NodeKind kind() const;
  const Shape& shape() const;

  bool is_variable() const { return kind() == NodeKind::Variable; }
  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_atom() const { return kind() == NodeKind::Atom; }

  /// Variable name, or atom name for atom nodes. Empty for constants.
  const std::string& name() const;
  /// Unique id of a variable leaf (0 for other nodes).
  std::uint64_t variable_id() const;
  /// Value of a constant leaf.
  const Matrix& value() const;
  /// Atom descriptor of an atom node.
  const AtomDescriptor& atom() const;
  std::span<const Expression> children() const;
  std::span<const double> params() const;

  /// Node identity; equal for copies of the same handle.
  const Node* node() const { return node_.get(); }

 private:
  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  friend Expression variable(std::string name, Shape shape);
  friend Expression constant(Matrix values);
  friend Expression apply(std::string_view atom, std::vector<Expression> children,
                          std::vector<double> params);

  std::shared_ptr<const Node> node_;
};

struct Expression::Node {
  NodeKind kind;
  Shape shape;
  std::string name;
  std::uint64_t variable_id = 0;
  Matrix value;
  const AtomDescriptor* atom = nullptr;
  std::vector<Expression> children;
  std::vector<double> params;
};

/// Positive variable leaf. Throws ConstructionError on an empty name or shape.
Expression variable(std::string name, Shape shape = kScalar);

/// Positive constant leaf. Throws DomainError naming the first nonpositive or
/// non-finite entry.
Expression constant(Matrix values);
Expression constant(double value);

/// Applies a registered atom. Throws LookupError for unknown atoms and
/// SignatureError on arity, parameter or shape mismatches.
Expression apply(std::string_view atom, std::vector<Expression> children,
                 std::vector<double> params = {});

/// Evaluates bottom-up. Throws LookupError for unassigned variables and
/// DomainError (with the path to the offending subtree) on domain violations.
Matrix evaluate(const Expression& expr, const Assignment& assignment);

/// Distinct variables in first-appearance (depth-first, left to right) order.
std::vector<Expression> variables(const Expression& expr);

/// Replaces variables by name. Replacement shapes must match.
Expression substitute(const Expression& expr,
                      const std::map<std::string, Expression, std::less<>>& replacements);

bool structurally_equal(const Expression& a, const Expression& b);

/// Prefix rendering, e.g. `mul(x, y)` or `pow[2](x)`.
std::string to_string(const Expression& expr);

// Construction sugar.

Expression operator+(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator+(const Expression& a, double b);
Expression operator+(double a, const Expression& b);
Expression operator*(const Expression& a, double b);
Expression operator*(double a, const Expression& b);
Expression operator/(const Expression& a, double b);
Expression operator/(double a, const Expression& b);

Expression pow(const Expression& x, double a);
Expression exp(const Expression& x);
Expression log(const Expression& x);
Expression entropy(const Expression& x);
Expression one_minus(const Expression& x);
Expression diff_pos(const Expression& x, const Expression& y);
Expression max(std::vector<Expression> args);
Expression min(std::vector<Expression> args);
Expression sum_largest(const Expression& x, int r);
Expression geo_mean(const Expression& x);
Expression harmonic_mean(const Expression& x);
Expression pnorm(const Expression& x, double p);
Expression trace(const Expression& x);
Expression matmul(const Expression& a, const Expression& b);
Expression pf_eigenvalue(const Expression& x);
Expression eye_minus_inv(const Expression& x);
Expression resolvent(const Expression& x, double s);
Expression index(const Expression& x, std::size_t row, std::size_t col);
Expression slice(const Expression& x, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1);

}  // namespace llcp
