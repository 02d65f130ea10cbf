#include "llcp/expression.hpp"

#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "llcp/error.hpp"

namespace llcp {

namespace {

std::atomic<std::uint64_t> next_variable_id{1};

const std::string kEmpty;

}  // namespace

NodeKind Expression::kind() const { return node_->kind; }
const Shape& Expression::shape() const { return node_->shape; }
const std::string& Expression::name() const { return node_->name; }
std::uint64_t Expression::variable_id() const { return node_->variable_id; }
const Matrix& Expression::value() const { return node_->value; }
const AtomDescriptor& Expression::atom() const { return *node_->atom; }
std::span<const Expression> Expression::children() const { return node_->children; }
std::span<const double> Expression::params() const { return node_->params; }

Expression variable(std::string name, Shape shape) {
  if (name.empty()) throw ConstructionError("variable name must be nonempty");
  if (shape.rows == 0 || shape.cols == 0)
    throw ConstructionError("variable '" + name + "' has an empty shape");
  auto node = std::make_shared<Expression::Node>();
  node->kind = NodeKind::Variable;
  node->shape = shape;
  node->name = std::move(name);
  node->variable_id = next_variable_id.fetch_add(1);
  return Expression(std::move(node));
}

Expression constant(Matrix values) {
  if (values.size() == 0) throw DomainError("constant must have at least one entry");
  for (Eigen::Index j = 0; j < values.cols(); ++j)
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      double v = values(i, j);
      if (!std::isfinite(v) || v <= 0.0) {
        std::ostringstream os;
        os << "constant entry (" << i << "," << j << ") = " << v << " is not positive and finite";
        throw DomainError(os.str());
      }
    }
  auto node = std::make_shared<Expression::Node>();
  node->kind = NodeKind::Constant;
  node->shape = {static_cast<std::size_t>(values.rows()), static_cast<std::size_t>(values.cols())};
  node->value = std::move(values);
  return Expression(std::move(node));
}

Expression constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Expression apply(std::string_view atom, std::vector<Expression> children, std::vector<double> params) {
  const AtomDescriptor& desc = atom_info(atom);
  std::vector<Shape> shapes;
  shapes.reserve(children.size());
  for (const Expression& c : children) shapes.push_back(c.shape());
  Shape out = desc.output_shape(shapes, params);
  auto node = std::make_shared<Expression::Node>();
  node->kind = NodeKind::Atom;
  node->shape = out;
  node->name = desc.name;
  node->atom = &desc;
  node->children = std::move(children);
  node->params = std::move(params);
  return Expression(std::move(node));
}

namespace {

class Evaluator {
 public:
  explicit Evaluator(const Assignment& a) : assignment_(a) {}

  Matrix run(const Expression& e) {
    if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
    Matrix out;
    switch (e.kind()) {
      case NodeKind::Constant:
        out = e.value();
        break;
      case NodeKind::Variable: {
        auto it = assignment_.find(e.name());
        if (it == assignment_.end()) throw LookupError("no value assigned to variable '" + e.name() + "'");
        const Matrix& v = it->second;
        if (v.rows() != static_cast<Eigen::Index>(e.shape().rows) ||
            v.cols() != static_cast<Eigen::Index>(e.shape().cols))
          throw DomainError("value of '" + e.name() + "' has the wrong shape (expected " +
                            e.shape().str() + ")");
        out = v;
        break;
      }
      case NodeKind::Atom: {
        std::vector<Matrix> args;
        auto children = e.children();
        for (std::size_t k = 0; k < children.size(); ++k) {
          path_.push_back(e.name() + "[" + std::to_string(k) + "]");
          args.push_back(run(children[k]));
          path_.pop_back();
        }
        try {
          out = e.atom().evaluate(args, e.params());
        } catch (const DomainError& err) {
          std::string where = "root";
          for (const std::string& p : path_) where += " > " + p;
          throw DomainError(std::string(err.what()) + " (at " + where + ")");
        }
        break;
      }
    }
    memo_.emplace(e.node(), out);
    return out;
  }

 private:
  const Assignment& assignment_;
  std::unordered_map<const Expression::Node*, Matrix> memo_;
  std::vector<std::string> path_;
};

void collect_variables(const Expression& e, std::set<std::uint64_t>& seen,
                       std::set<const Expression::Node*>& visited, std::vector<Expression>& out) {
  if (!visited.insert(e.node()).second) return;
  if (e.is_variable()) {
    if (seen.insert(e.variable_id()).second) out.push_back(e);
    return;
  }
  for (const Expression& c : e.children()) collect_variables(c, seen, visited, out);
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

Matrix evaluate(const Expression& expr, const Assignment& assignment) {
  return Evaluator(assignment).run(expr);
}

std::vector<Expression> variables(const Expression& expr) {
  std::set<std::uint64_t> seen;
  std::set<const Expression::Node*> visited;
  std::vector<Expression> out;
  collect_variables(expr, seen, visited, out);
  return out;
}

Expression substitute(const Expression& expr,
                      const std::map<std::string, Expression, std::less<>>& replacements) {
  switch (expr.kind()) {
    case NodeKind::Constant:
      return expr;
    case NodeKind::Variable: {
      auto it = replacements.find(expr.name());
      if (it == replacements.end()) return expr;
      if (it->second.shape() != expr.shape())
        throw SignatureError("replacement for '" + expr.name() + "' has shape " +
                             it->second.shape().str() + ", expected " + expr.shape().str());
      return it->second;
    }
    case NodeKind::Atom: {
      std::vector<Expression> children;
      for (const Expression& c : expr.children()) children.push_back(substitute(c, replacements));
      return llcp::apply(expr.name(), std::move(children),
                   std::vector<double>(expr.params().begin(), expr.params().end()));
    }
  }
  return expr;
}

bool structurally_equal(const Expression& a, const Expression& b) {
  if (a.node() == b.node()) return true;
  if (a.kind() != b.kind() || a.shape() != b.shape()) return false;
  switch (a.kind()) {
    case NodeKind::Constant:
      return a.value() == b.value();
    case NodeKind::Variable:
      return a.name() == b.name();
    case NodeKind::Atom: {
      if (a.name() != b.name() || a.children().size() != b.children().size()) return false;
      if (!std::equal(a.params().begin(), a.params().end(), b.params().begin(), b.params().end()))
        return false;
      for (std::size_t k = 0; k < a.children().size(); ++k)
        if (!structurally_equal(a.children()[k], b.children()[k])) return false;
      return true;
    }
  }
  return false;
}

std::string to_string(const Expression& expr) {
  switch (expr.kind()) {
    case NodeKind::Variable:
      return expr.name();
    case NodeKind::Constant: {
      if (expr.shape().is_scalar()) return format_number(expr.value()(0, 0));
      return "const<" + expr.shape().str() + ">";
    }
    case NodeKind::Atom: {
      std::string s = expr.name();
      if (!expr.params().empty()) {
        s += "[";
        for (std::size_t i = 0; i < expr.params().size(); ++i)
          s += (i ? ", " : "") + format_number(expr.params()[i]);
        s += "]";
      }
      s += "(";
      for (std::size_t i = 0; i < expr.children().size(); ++i)
        s += (i ? ", " : "") + to_string(expr.children()[i]);
      return s + ")";
    }
  }
  return {};
}

Expression operator+(const Expression& a, const Expression& b) { return llcp::apply("add", {a, b}); }
Expression operator*(const Expression& a, const Expression& b) { return llcp::apply("mul", {a, b}); }
Expression operator/(const Expression& a, const Expression& b) { return llcp::apply("div", {a, b}); }
Expression operator+(const Expression& a, double b) { return a + constant(b); }
Expression operator+(double a, const Expression& b) { return constant(a) + b; }
Expression operator*(const Expression& a, double b) { return a * constant(b); }
Expression operator*(double a, const Expression& b) { return constant(a) * b; }
Expression operator/(const Expression& a, double b) { return a / constant(b); }
Expression operator/(double a, const Expression& b) { return constant(a) / b; }

Expression pow(const Expression& x, double a) { return llcp::apply("pow", {x}, {a}); }
Expression exp(const Expression& x) { return llcp::apply("exp", {x}); }
Expression log(const Expression& x) { return llcp::apply("log", {x}); }
Expression entropy(const Expression& x) { return llcp::apply("entropy", {x}); }
Expression one_minus(const Expression& x) { return llcp::apply("one_minus", {x}); }
Expression diff_pos(const Expression& x, const Expression& y) { return llcp::apply("diff_pos", {x, y}); }
Expression max(std::vector<Expression> args) { return llcp::apply("max", std::move(args)); }
Expression min(std::vector<Expression> args) { return llcp::apply("min", std::move(args)); }
Expression sum_largest(const Expression& x, int r) { return llcp::apply("sum_largest", {x}, {double(r)}); }
Expression geo_mean(const Expression& x) { return llcp::apply("geo_mean", {x}); }
Expression harmonic_mean(const Expression& x) { return llcp::apply("harmonic_mean", {x}); }
Expression pnorm(const Expression& x, double p) { return llcp::apply("pnorm", {x}, {p}); }
Expression trace(const Expression& x) { return llcp::apply("trace", {x}); }
Expression matmul(const Expression& a, const Expression& b) { return llcp::apply("matmul", {a, b}); }
Expression pf_eigenvalue(const Expression& x) { return llcp::apply("pf_eigenvalue", {x}); }
Expression eye_minus_inv(const Expression& x) { return llcp::apply("eye_minus_inv", {x}); }
Expression resolvent(const Expression& x, double s) { return llcp::apply("resolvent", {x}, {s}); }
Expression index(const Expression& x, std::size_t row, std::size_t col) {
  return llcp::apply("index", {x}, {double(row), double(col)});
}
Expression slice(const Expression& x, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  return llcp::apply("slice", {x}, {double(r0), double(r1), double(c0), double(c1)});
}

}  // namespace llcp
