#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "llcp/shape.hpp"

namespace llcp {

using Matrix = Eigen::MatrixXd;

/// Log-log curvature. Ordered as a lattice: Constant below Affine below
/// {Convex, Concave} below Unknown.
enum class Curvature { Constant, Affine, Convex, Concave, Unknown };

enum class Monotonicity { Nondecreasing, Nonincreasing, Neither };

std::string_view to_string(Curvature c);
std::string_view to_string(Monotonicity m);

/// Least upper bound in the curvature lattice.
Curvature join(Curvature a, Curvature b);
/// Greatest lower bound in the curvature lattice.
Curvature meet(Curvature a, Curvature b);

inline bool is_affine(Curvature c) { return c == Curvature::Constant || c == Curvature::Affine; }
inline bool is_convex(Curvature c) { return is_affine(c) || c == Curvature::Convex; }
inline bool is_concave(Curvature c) { return is_affine(c) || c == Curvature::Concave; }

enum class AtomKind {
  Add,
  Mul,
  Div,
  Pow,
  Max,
  Min,
  SumLargest,
  OneMinus,
  DiffPos,
  GeoMean,
  HarmonicMean,
  PNorm,
  Exp,
  Log,
  Entropy,
  Trace,
  MatMul,
  PfEigenvalue,
  EyeMinusInv,
  Resolvent,
  Index,
  Slice,
};

inline constexpr std::size_t kVariadic = std::numeric_limits<std::size_t>::max();

struct AtomDescriptor {
  using ShapeRule = std::function<Shape(std::span<const Shape>, std::span<const double>)>;
  using DomainCheck =
      std::function<std::optional<std::string>(std::span<const Matrix>, std::span<const double>)>;
  using Evaluator = std::function<Matrix(std::span<const Matrix>, std::span<const double>)>;
  using MonotonicityRule = std::function<Monotonicity(std::span<const double>, std::size_t)>;

  std::string name;
  AtomKind kind;
  std::string signature;  // e.g. "pow[a](x)"
  std::size_t min_args = 1;
  std::size_t max_args = 1;
  std::size_t num_params = 0;
  Curvature curvature = Curvature::Unknown;
  std::string domain;  // human-readable description of the domain

  MonotonicityRule monotonicity_rule;
  ShapeRule shape_rule;
  DomainCheck domain_check;
  Evaluator evaluator;

  Monotonicity monotonicity(std::span<const double> params, std::size_t arg) const {
    return monotonicity_rule(params, arg);
  }

  /// Validates arity, parameters and child shapes; returns the output shape.
  /// Throws SignatureError naming the atom and its signature.
  Shape output_shape(std::span<const Shape> children, std::span<const double> params) const;

  /// Evaluates with domain checking. Throws DomainError.
  Matrix evaluate(std::span<const Matrix> args, std::span<const double> params) const;
};

/// Looks up an atom. Throws LookupError listing near matches.
const AtomDescriptor& atom_info(std::string_view name);

/// Returns nullptr for unregistered names.
const AtomDescriptor* find_atom(std::string_view name);

/// All registered atoms, ordered by name.
std::span<const AtomDescriptor> list_atoms();

/// Evaluates a registered atom on numeric arguments.
Matrix eval_atom(std::string_view name, std::span<const Matrix> args,
                 std::span<const double> params = {});

/// Spectral radius of an entrywise-positive square matrix by power iteration
/// with Collatz-Wielandt bracketing. `eigenvector` (if given) receives the
/// Perron vector normalized to unit max-norm.
double perron_root(const Matrix& x, Eigen::VectorXd* eigenvector = nullptr,
                   double tol = 1e-12, int max_iters = 10000);

/// Output shape of an elementwise operation with scalar broadcasting.
std::optional<Shape> broadcast_shape(std::span<const Shape> shapes);

}  // namespace llcp
