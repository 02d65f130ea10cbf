#include "graph_internal.hpp"

#include "llcp/error.hpp"

namespace llcp {

namespace detail {

namespace {

std::string entry_tag(const std::string& base, std::size_t i, std::size_t j) {
  return base + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

void require_square(const FormMatrix& u, const char* what) {
  if (!u.shape.is_square() || u.shape.rows == 0)
    throw ConstructionError(std::string(what) + " requires a square matrix, got " + u.shape.str());
}

}  // namespace

GraphResult pf_graph(ExpSumProgram& program, const FormMatrix& u, const AffineForm* bound, const std::string& tag,
                     const std::optional<Expression>& node, const std::optional<Expression>& matrix) {
  require_square(u, "pf_eigenvalue");
  const std::size_t n = u.shape.rows;
  GraphResult out;
  out.output = FormMatrix(kScalar);
  if (bound) {
    out.output.entries[0] = *bound;
  } else {
    Coordinate t;
    t.tag = tag + ":t";
    t.rule = TightRule::NodeValue;
    t.source = node;
    out.output.entries[0] = AffineForm::coordinate(program.add_coordinate(std::move(t)));
  }
  const AffineForm& t = out.output.entries[0];

  // log of the eigenvector, with the first entry pinned to 0.
  std::vector<AffineForm> nu(n);
  for (std::size_t i = 1; i < n; ++i) {
    Coordinate c;
    c.tag = tag + ":nu[" + std::to_string(i) + "]";
    c.rule = TightRule::PerronVector;
    c.source = matrix;
    c.entry = i;
    nu[i] = AffineForm::coordinate(program.add_coordinate(std::move(c)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    ExpSumConstraint c;
    for (std::size_t j = 0; j < n; ++j) c.exp_terms.push_back(u(i, j) + nu[j] - t - nu[i]);
    c.tail = AffineForm(-1.0);
    c.origin = tag + " row " + std::to_string(i);
    out.constraints.push_back(program.inequalities.size());
    program.inequalities.push_back(std::move(c));
  }
  return out;
}

GraphResult eye_minus_inv_graph(ExpSumProgram& program, const FormMatrix& u, const std::string& tag,
                                const std::optional<Expression>& matrix, double scale) {
  require_square(u, "eye_minus_inv");
  const std::size_t n = u.shape.rows;
  GraphResult out;
  out.output = FormMatrix(u.shape);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Coordinate c;
      c.tag = entry_tag(tag + ":W", i, j);
      c.rule = TightRule::EyeMinusInv;
      c.source = matrix;
      c.entry = i * n + j;
      c.scale = scale;
      out.output(i, j) = AffineForm::coordinate(program.add_coordinate(std::move(c)));
    }
  }
  const FormMatrix& w = out.output;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      ExpSumConstraint c;
      for (std::size_t k = 0; k < n; ++k) c.exp_terms.push_back(w(i, k) + u(k, j) - w(i, j));
      if (i == j) c.exp_terms.push_back(-w(i, j));
      c.tail = AffineForm(-1.0);
      c.origin = entry_tag(tag, i, j);
      out.constraints.push_back(program.inequalities.size());
      program.inequalities.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace detail

GraphResult graph_pf_eigenvalue(ExpSumProgram& program, const FormMatrix& u, const AffineForm* bound,
                                const std::string& tag) {
  return detail::pf_graph(program, u, bound, tag, std::nullopt, std::nullopt);
}

GraphResult graph_eye_minus_inv(ExpSumProgram& program, const FormMatrix& u, const std::string& tag) {
  return detail::eye_minus_inv_graph(program, u, tag, std::nullopt, 1.0);
}

}  // namespace llcp
