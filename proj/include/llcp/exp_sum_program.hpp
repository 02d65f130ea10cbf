#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "llcp/expression.hpp"
#include "llcp/shape.hpp"

namespace llcp {

/// Affine function sum_i a_i u_i + constant over the log-space coordinates u.
/// Terms are kept sorted by coordinate with no repeated indices.
class AffineForm {
 public:
  AffineForm() = default;
  explicit AffineForm(double constant) : constant_(constant) {}

  static AffineForm coordinate(std::size_t index, double coefficient = 1.0);

  const std::vector<std::pair<std::size_t, double>>& terms() const { return terms_; }
  double constant() const { return constant_; }
  bool is_constant() const { return terms_.empty(); }
  double coefficient(std::size_t index) const;

  double evaluate(const Eigen::VectorXd& u) const;
  /// Dense coefficient vector of length n.
  Eigen::VectorXd dense(std::size_t n) const;

  AffineForm& operator+=(const AffineForm& other);
  AffineForm& operator-=(const AffineForm& other);
  AffineForm& operator*=(double s);
  AffineForm& operator+=(double c) {
    constant_ += c;
    return *this;
  }
  AffineForm& operator-=(double c) {
    constant_ -= c;
    return *this;
  }

  friend AffineForm operator+(AffineForm a, const AffineForm& b) { return a += b; }
  friend AffineForm operator-(AffineForm a, const AffineForm& b) { return a -= b; }
  friend AffineForm operator*(double s, AffineForm a) { return a *= s; }
  friend AffineForm operator+(AffineForm a, double c) { return a += c; }
  friend AffineForm operator-(AffineForm a, double c) { return a -= c; }
  friend AffineForm operator-(AffineForm a) { return a *= -1.0; }
  friend bool operator==(const AffineForm&, const AffineForm&) = default;

  /// e.g. "u0 - 2*u3 + 0.693147".
  std::string str() const;

 private:
  std::vector<std::pair<std::size_t, double>> terms_;
  double constant_ = 0.0;
};

/// Matrix of affine forms in row-major order.
struct FormMatrix {
  Shape shape;
  std::vector<AffineForm> entries;

  FormMatrix() = default;
  explicit FormMatrix(Shape s) : shape(s), entries(s.size()) {}

  AffineForm& operator()(std::size_t r, std::size_t c) { return entries[r * shape.cols + c]; }
  const AffineForm& operator()(std::size_t r, std::size_t c) const { return entries[r * shape.cols + c]; }
  /// Broadcast lookup: scalar matrices return their only entry.
  const AffineForm& at(std::size_t flat) const { return entries.size() == 1 ? entries[0] : entries[flat]; }
};

/// sum_k exp(terms[k](u)) + tail(u) <= 0.
struct ExpSumConstraint {
  std::vector<AffineForm> exp_terms;
  AffineForm tail;
  std::string origin;
  std::optional<std::uint64_t> constraint_id;
  bool principal = false;

  double value(const Eigen::VectorXd& u) const;
};

/// row(u) == 0.
struct EqualityRow {
  AffineForm row;
  std::string origin;
  std::optional<std::uint64_t> constraint_id;
  bool principal = false;
};

enum class CoordinateKind { Variable, Auxiliary };

/// How to compute the tight value of a coordinate from an original point.
enum class TightRule {
  VariableEntry,  // log of the variable entry
  NodeValue,      // log of entry `entry` of `source` evaluated
  PerronVector,   // log(v_entry / v_0), v the Perron vector of `source` evaluated
  EyeMinusInv,    // log of entry of (I - source/scale)^-1
};

struct Coordinate {
  CoordinateKind kind = CoordinateKind::Auxiliary;
  std::string tag;
  std::string variable;  // for Variable coordinates
  std::size_t row = 0;
  std::size_t col = 0;
  TightRule rule = TightRule::VariableEntry;
  std::optional<Expression> source;
  std::size_t entry = 0;
  double scale = 1.0;
};

/// Smooth convex standard form in log space:
///   minimize objective(u)  s.t.  exp-sum inequalities <= 0,  equality rows == 0.
struct ExpSumProgram {
  std::vector<Coordinate> coordinates;
  AffineForm objective;
  std::vector<ExpSumConstraint> inequalities;
  std::vector<EqualityRow> equalities;

  std::size_t num_coordinates() const { return coordinates.size(); }
  std::size_t add_coordinate(Coordinate c) {
    coordinates.push_back(std::move(c));
    return coordinates.size() - 1;
  }

  /// Deterministic text listing of coordinates, inequalities and equality rows.
  std::string dump() const;
};

}  // namespace llcp
