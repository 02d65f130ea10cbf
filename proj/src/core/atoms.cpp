#include "llcp/atoms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "llcp/error.hpp"

namespace llcp {

std::string_view to_string(Curvature c) {
  switch (c) {
    case Curvature::Constant: return "log-log constant";
    case Curvature::Affine: return "log-log affine";
    case Curvature::Convex: return "log-log convex";
    case Curvature::Concave: return "log-log concave";
    case Curvature::Unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::Nondecreasing: return "nondecreasing";
    case Monotonicity::Nonincreasing: return "nonincreasing";
    case Monotonicity::Neither: return "neither";
  }
  return "neither";
}

namespace {

int rank(Curvature c) {
  switch (c) {
    case Curvature::Constant: return 0;
    case Curvature::Affine: return 1;
    case Curvature::Convex:
    case Curvature::Concave: return 2;
    case Curvature::Unknown: return 3;
  }
  return 3;
}

}  // namespace

Curvature join(Curvature a, Curvature b) {
  if (a == b) return a;
  if (rank(a) == 2 && rank(b) == 2) return Curvature::Unknown;
  return rank(a) >= rank(b) ? a : b;
}

Curvature meet(Curvature a, Curvature b) {
  if (a == b) return a;
  if (rank(a) == 2 && rank(b) == 2) return Curvature::Affine;
  return rank(a) <= rank(b) ? a : b;
}

std::optional<Shape> broadcast_shape(std::span<const Shape> shapes) {
  Shape out = kScalar;
  for (const Shape& s : shapes) {
    if (s.is_scalar()) continue;
    if (out.is_scalar()) {
      out = s;
    } else if (out != s) {
      return std::nullopt;
    }
  }
  return out;
}

namespace {

using Span = std::span<const Matrix>;
using Params = std::span<const double>;

Matrix broadcast(const Matrix& m, Shape s) {
  if (m.rows() == static_cast<Eigen::Index>(s.rows) &&
      m.cols() == static_cast<Eigen::Index>(s.cols))
    return m;
  return Matrix::Constant(s.rows, s.cols, m(0, 0));
}

Shape shape_of(const Matrix& m) {
  return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
}

Shape broadcast_values(Span args) {
  std::vector<Shape> shapes;
  for (const Matrix& a : args) shapes.push_back(shape_of(a));
  return broadcast_shape(shapes).value_or(kScalar);
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

[[noreturn]] void bad_signature(std::string_view name, std::string_view signature,
                                const std::string& detail) {
  throw SignatureError("atom '" + std::string(name) + "' expects " + std::string(signature) +
                       ": " + detail);
}

std::string entry_str(Eigen::Index i, Eigen::Index j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

// First entry of `m` for which `pred` fails, formatted as a message.
template <typename Pred>
std::optional<std::string> entrywise(const Matrix& m, std::size_t arg, Pred pred,
                                     std::string_view domain) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!pred(m(i, j))) {
        std::ostringstream os;
        os << "argument " << arg << " entry " << entry_str(i, j) << " = " << m(i, j)
           << " outside domain " << domain;
        return os.str();
      }
  return std::nullopt;
}

std::optional<std::string> no_domain(Span, Params) { return std::nullopt; }

Monotonicity increasing(Params, std::size_t) { return Monotonicity::Nondecreasing; }

Shape elementwise_shape(std::span<const Shape> children, Params) {
  auto s = broadcast_shape(children);
  if (!s) throw SignatureError("operand shapes are not broadcast compatible");
  return *s;
}

Shape reduce_shape(std::span<const Shape>, Params) { return kScalar; }

Shape square_to_scalar(std::span<const Shape> children, Params) {
  if (!children[0].is_square()) throw SignatureError("argument must be square");
  return kScalar;
}

Shape square_to_square(std::span<const Shape> children, Params) {
  if (!children[0].is_square()) throw SignatureError("argument must be square");
  return children[0];
}

template <typename F>
Matrix unary_map(Span args, F f) {
  return args[0].unaryExpr(f);
}

std::optional<std::string> spectral_radius_below(const Matrix& x, double bound,
                                                 std::string_view domain) {
  double rho = perron_root(x);
  if (!(rho < bound)) {
    std::ostringstream os;
    os << "argument 0 has spectral radius " << rho << " outside domain " << domain;
    return os.str();
  }
  return std::nullopt;
}

std::vector<AtomDescriptor> build_registry() {
  std::vector<AtomDescriptor> atoms;

  auto add_atom = [&](AtomDescriptor d) {
    if (!d.domain_check) d.domain_check = no_domain;
    if (!d.monotonicity_rule) d.monotonicity_rule = increasing;
    atoms.push_back(std::move(d));
  };

  add_atom({
      .name = "add",
      .kind = AtomKind::Add,
      .signature = "add(x1, x2, ...)",
      .min_args = 2,
      .max_args = kVariadic,
      .curvature = Curvature::Convex,
      .domain = "positive",
      .shape_rule = elementwise_shape,
      .evaluator =
          [](Span args, Params) {
            Shape s = broadcast_values(args);
            Matrix out = Matrix::Zero(s.rows, s.cols);
            for (const Matrix& a : args) out += broadcast(a, s);
            return out;
          },
  });

  add_atom({
      .name = "mul",
      .kind = AtomKind::Mul,
      .signature = "mul(x, y)",
      .min_args = 2,
      .max_args = 2,
      .curvature = Curvature::Affine,
      .domain = "positive",
      .shape_rule = elementwise_shape,
      .evaluator =
          [](Span args, Params) {
            Shape s = broadcast_values(args);
            return Matrix(broadcast(args[0], s).cwiseProduct(broadcast(args[1], s)));
          },
  });

  add_atom({
      .name = "div",
      .kind = AtomKind::Div,
      .signature = "div(x, y)",
      .min_args = 2,
      .max_args = 2,
      .curvature = Curvature::Affine,
      .domain = "positive",
      .monotonicity_rule =
          [](Params, std::size_t arg) {
            return arg == 0 ? Monotonicity::Nondecreasing : Monotonicity::Nonincreasing;
          },
      .shape_rule = elementwise_shape,
      .evaluator =
          [](Span args, Params) {
            Shape s = broadcast_values(args);
            return Matrix(broadcast(args[0], s).cwiseQuotient(broadcast(args[1], s)));
          },
  });

  add_atom({
      .name = "pow",
      .kind = AtomKind::Pow,
      .signature = "pow[a](x), a real",
      .num_params = 1,
      .curvature = Curvature::Affine,
      .domain = "positive",
      .monotonicity_rule =
          [](Params p, std::size_t) {
            return p[0] >= 0 ? Monotonicity::Nondecreasing : Monotonicity::Nonincreasing;
          },
      .shape_rule =
          [](std::span<const Shape> c, Params p) {
            if (!std::isfinite(p[0])) throw SignatureError("exponent must be finite");
            return c[0];
          },
      .evaluator =
          [](Span args, Params p) {
            double a = p[0];
            return unary_map(args, [a](double x) { return std::pow(x, a); });
          },
  });

  auto max_like = [](bool is_max) {
    return [is_max](Span args, Params) -> Matrix {
      auto pick = [is_max](double a, double b) { return is_max ? std::max(a, b) : std::min(a, b); };
      if (args.size() == 1) {
        double v = is_max ? args[0].maxCoeff() : args[0].minCoeff();
        return Matrix::Constant(1, 1, v);
      }
      Shape s = broadcast_values(args);
      Matrix out = broadcast(args[0], s);
      for (std::size_t k = 1; k < args.size(); ++k) out = out.binaryExpr(broadcast(args[k], s), pick);
      return out;
    };
  };
  auto max_shape = [](std::span<const Shape> c, Params p) {
    if (c.size() == 1) return kScalar;
    return elementwise_shape(c, p);
  };

  add_atom({
      .name = "max",
      .kind = AtomKind::Max,
      .signature = "max(x) or max(x1, x2, ...)",
      .min_args = 1,
      .max_args = kVariadic,
      .curvature = Curvature::Convex,
      .domain = "positive",
      .shape_rule = max_shape,
      .evaluator = max_like(true),
  });

  add_atom({
      .name = "min",
      .kind = AtomKind::Min,
      .signature = "min(x) or min(x1, x2, ...)",
      .min_args = 1,
      .max_args = kVariadic,
      .curvature = Curvature::Concave,
      .domain = "positive",
      .shape_rule = max_shape,
      .evaluator = max_like(false),
  });

  add_atom({
      .name = "sum_largest",
      .kind = AtomKind::SumLargest,
      .signature = "sum_largest[r](x), 1 <= r <= size(x)",
      .num_params = 1,
      .curvature = Curvature::Convex,
      .domain = "positive",
      .shape_rule =
          [](std::span<const Shape> c, Params p) {
            if (!is_integer(p[0]) || p[0] < 1 || p[0] > static_cast<double>(c[0].size()))
              throw SignatureError("r must be an integer in [1, " + std::to_string(c[0].size()) +
                                   "]");
            return kScalar;
          },
      .evaluator =
          [](Span args, Params p) {
            std::vector<double> v(args[0].data(), args[0].data() + args[0].size());
            std::sort(v.begin(), v.end(), std::greater<>());
            auto r = static_cast<std::size_t>(p[0]);
            return Matrix::Constant(1, 1, std::accumulate(v.begin(), v.begin() + r, 0.0));
          },
  });

  add_atom({
      .name = "one_minus",
      .kind = AtomKind::OneMinus,
      .signature = "one_minus(x)",
      .curvature = Curvature::Concave,
      .domain = "(0, 1)",
      .monotonicity_rule = [](Params, std::size_t) { return Monotonicity::Nonincreasing; },
      .shape_rule = [](std::span<const Shape> c, Params) { return c[0]; },
      .domain_check =
          [](Span args, Params) {
            return entrywise(args[0], 0, [](double x) { return x < 1.0; }, "(0, 1)");
          },
      .evaluator = [](Span args, Params) { return unary_map(args, [](double x) { return 1.0 - x; }); },
  });

  add_atom({
      .name = "diff_pos",
      .kind = AtomKind::DiffPos,
      .signature = "diff_pos(x, y), x > y",
      .min_args = 2,
      .max_args = 2,
      .curvature = Curvature::Concave,
      .domain = "x > y",
      .monotonicity_rule =
          [](Params, std::size_t arg) {
            return arg == 0 ? Monotonicity::Nondecreasing : Monotonicity::Nonincreasing;
          },
      .shape_rule = elementwise_shape,
      .domain_check =
          [](Span args, Params) -> std::optional<std::string> {
            Shape s = broadcast_values(args);
            Matrix d = broadcast(args[0], s) - broadcast(args[1], s);
            return entrywise(d, 0, [](double v) { return v > 0.0; }, "x > y");
          },
      .evaluator =
          [](Span args, Params) {
            Shape s = broadcast_values(args);
            return Matrix(broadcast(args[0], s) - broadcast(args[1], s));
          },
  });

  add_atom({
      .name = "geo_mean",
      .kind = AtomKind::GeoMean,
      .signature = "geo_mean(x)",
      .curvature = Curvature::Affine,
      .domain = "positive",
      .shape_rule = reduce_shape,
      .evaluator =
          [](Span args, Params) {
            double mean_log = args[0].array().log().mean();
            return Matrix::Constant(1, 1, std::exp(mean_log));
          },
  });

  add_atom({
      .name = "harmonic_mean",
      .kind = AtomKind::HarmonicMean,
      .signature = "harmonic_mean(x)",
      .curvature = Curvature::Concave,
      .domain = "positive",
      .shape_rule = reduce_shape,
      .evaluator =
          [](Span args, Params) {
            double n = static_cast<double>(args[0].size());
            return Matrix::Constant(1, 1, n / args[0].array().inverse().sum());
          },
  });

  add_atom({
      .name = "pnorm",
      .kind = AtomKind::PNorm,
      .signature = "pnorm[p](x), p >= 1",
      .num_params = 1,
      .curvature = Curvature::Convex,
      .domain = "positive",
      .shape_rule =
          [](std::span<const Shape>, Params p) {
            if (!(p[0] >= 1.0) || !std::isfinite(p[0])) throw SignatureError("p must be >= 1");
            return kScalar;
          },
      .evaluator =
          [](Span args, Params p) {
            double scale = args[0].maxCoeff();
            double s = (args[0].array() / scale).pow(p[0]).sum();
            return Matrix::Constant(1, 1, scale * std::pow(s, 1.0 / p[0]));
          },
  });

  add_atom({
      .name = "exp",
      .kind = AtomKind::Exp,
      .signature = "exp(x)",
      .curvature = Curvature::Convex,
      .domain = "positive",
      .shape_rule = [](std::span<const Shape> c, Params) { return c[0]; },
      .evaluator = [](Span args, Params) { return unary_map(args, [](double x) { return std::exp(x); }); },
  });

  add_atom({
      .name = "log",
      .kind = AtomKind::Log,
      .signature = "log(x), x > 1",
      .curvature = Curvature::Concave,
      .domain = "(1, inf)",
      .shape_rule = [](std::span<const Shape> c, Params) { return c[0]; },
      .domain_check =
          [](Span args, Params) {
            return entrywise(args[0], 0, [](double x) { return x > 1.0; }, "(1, inf)");
          },
      .evaluator = [](Span args, Params) { return unary_map(args, [](double x) { return std::log(x); }); },
  });

  add_atom({
      .name = "entropy",
      .kind = AtomKind::Entropy,
      .signature = "entropy(x), 0 < x < 1",
      .curvature = Curvature::Concave,
      .domain = "(0, 1)",
      .monotonicity_rule = [](Params, std::size_t) { return Monotonicity::Neither; },
      .shape_rule = [](std::span<const Shape> c, Params) { return c[0]; },
      .domain_check =
          [](Span args, Params) {
            return entrywise(args[0], 0, [](double x) { return x < 1.0; }, "(0, 1)");
          },
      .evaluator =
          [](Span args, Params) { return unary_map(args, [](double x) { return -x * std::log(x); }); },
  });

  add_atom({
      .name = "trace",
      .kind = AtomKind::Trace,
      .signature = "trace(X), X square",
      .curvature = Curvature::Convex,
      .domain = "positive",
      .shape_rule = square_to_scalar,
      .evaluator = [](Span args, Params) { return Matrix::Constant(1, 1, args[0].trace()); },
  });

  add_atom({
      .name = "matmul",
      .kind = AtomKind::MatMul,
      .signature = "matmul(A, B), cols(A) == rows(B)",
      .min_args = 2,
      .max_args = 2,
      .curvature = Curvature::Convex,
      .domain = "positive",
      .shape_rule =
          [](std::span<const Shape> c, Params) {
            if (c[0].cols != c[1].rows)
              throw SignatureError("inner dimensions differ (" + c[0].str() + " times " +
                                   c[1].str() + ")");
            return Shape{c[0].rows, c[1].cols};
          },
      .evaluator = [](Span args, Params) { return Matrix(args[0] * args[1]); },
  });

  add_atom({
      .name = "pf_eigenvalue",
      .kind = AtomKind::PfEigenvalue,
      .signature = "pf_eigenvalue(X), X square",
      .curvature = Curvature::Convex,
      .domain = "positive",
      .shape_rule = square_to_scalar,
      .evaluator = [](Span args, Params) { return Matrix::Constant(1, 1, perron_root(args[0])); },
  });

  add_atom({
      .name = "eye_minus_inv",
      .kind = AtomKind::EyeMinusInv,
      .signature = "eye_minus_inv(X), X square with spectral radius < 1",
      .curvature = Curvature::Convex,
      .domain = "spectral radius < 1",
      .shape_rule = square_to_square,
      .domain_check =
          [](Span args, Params) { return spectral_radius_below(args[0], 1.0, "(spectral radius < 1)"); },
      .evaluator =
          [](Span args, Params) {
            const Matrix& x = args[0];
            Matrix m = Matrix::Identity(x.rows(), x.cols()) - x;
            return Matrix(m.partialPivLu().inverse());
          },
  });

  add_atom({
      .name = "resolvent",
      .kind = AtomKind::Resolvent,
      .signature = "resolvent[s](X), s > 0, X square with spectral radius < s",
      .num_params = 1,
      .curvature = Curvature::Convex,
      .domain = "spectral radius < s",
      .shape_rule =
          [](std::span<const Shape> c, Params p) {
            if (!(p[0] > 0) || !std::isfinite(p[0])) throw SignatureError("s must be positive");
            return square_to_square(c, p);
          },
      .domain_check =
          [](Span args, Params p) {
            return spectral_radius_below(args[0], p[0], "(spectral radius < s)");
          },
      .evaluator =
          [](Span args, Params p) {
            const Matrix& x = args[0];
            Matrix m = p[0] * Matrix::Identity(x.rows(), x.cols()) - x;
            return Matrix(m.partialPivLu().inverse());
          },
  });

  add_atom({
      .name = "index",
      .kind = AtomKind::Index,
      .signature = "index[row, col](X)",
      .num_params = 2,
      .curvature = Curvature::Affine,
      .domain = "positive",
      .shape_rule =
          [](std::span<const Shape> c, Params p) {
            if (!is_integer(p[0]) || !is_integer(p[1]) || p[0] < 0 || p[1] < 0 ||
                p[0] >= static_cast<double>(c[0].rows) || p[1] >= static_cast<double>(c[0].cols))
              throw SignatureError("index out of range for shape " + c[0].str());
            return kScalar;
          },
      .evaluator =
          [](Span args, Params p) {
            return Matrix::Constant(1, 1, args[0](static_cast<Eigen::Index>(p[0]),
                                                  static_cast<Eigen::Index>(p[1])));
          },
  });

  add_atom({
      .name = "slice",
      .kind = AtomKind::Slice,
      .signature = "slice[r0, r1, c0, c1](X), half-open ranges",
      .num_params = 4,
      .curvature = Curvature::Affine,
      .domain = "positive",
      .shape_rule =
          [](std::span<const Shape> c, Params p) {
            for (double v : p)
              if (!is_integer(v) || v < 0) throw SignatureError("slice bounds must be integers");
            if (!(p[0] < p[1]) || !(p[2] < p[3]) || p[1] > static_cast<double>(c[0].rows) ||
                p[3] > static_cast<double>(c[0].cols))
              throw SignatureError("slice out of range for shape " + c[0].str());
            return Shape{static_cast<std::size_t>(p[1] - p[0]), static_cast<std::size_t>(p[3] - p[2])};
          },
      .evaluator =
          [](Span args, Params p) {
            auto r0 = static_cast<Eigen::Index>(p[0]), c0 = static_cast<Eigen::Index>(p[2]);
            return Matrix(args[0].block(r0, c0, static_cast<Eigen::Index>(p[1]) - r0,
                                        static_cast<Eigen::Index>(p[3]) - c0));
          },
  });

  std::sort(atoms.begin(), atoms.end(),
            [](const AtomDescriptor& a, const AtomDescriptor& b) { return a.name < b.name; });
  return atoms;
}

const std::vector<AtomDescriptor>& registry() {
  static const std::vector<AtomDescriptor> atoms = build_registry();
  return atoms;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

Shape AtomDescriptor::output_shape(std::span<const Shape> children,
                                   std::span<const double> params) const {
  if (children.size() < min_args || children.size() > max_args) {
    std::string expected = min_args == max_args ? std::to_string(min_args)
                           : max_args == kVariadic ? "at least " + std::to_string(min_args)
                                                   : std::to_string(min_args) + " to " +
                                                         std::to_string(max_args);
    bad_signature(name, signature,
                  expected + " argument(s), got " + std::to_string(children.size()));
  }
  if (params.size() != num_params)
    bad_signature(name, signature,
                  std::to_string(num_params) + " parameter(s), got " + std::to_string(params.size()));
  try {
    return shape_rule(children, params);
  } catch (const SignatureError& e) {
    bad_signature(name, signature, e.what());
  }
}

Matrix AtomDescriptor::evaluate(std::span<const Matrix> args, std::span<const double> params) const {
  std::vector<Shape> shapes;
  for (const Matrix& a : args) shapes.push_back(shape_of(a));
  output_shape(shapes, params);
  for (std::size_t k = 0; k < args.size(); ++k) {
    auto bad = entrywise(args[k], k, [](double x) { return std::isfinite(x) && x > 0.0; },
                         "(0, inf)");
    if (bad) throw DomainError(name + ": " + *bad);
  }
  if (auto bad = domain_check(args, params)) throw DomainError(name + ": " + *bad);
  return evaluator(args, params);
}

const AtomDescriptor* find_atom(std::string_view name) {
  const auto& atoms = registry();
  auto it = std::lower_bound(atoms.begin(), atoms.end(), name,
                             [](const AtomDescriptor& a, std::string_view n) { return a.name < n; });
  if (it == atoms.end() || it->name != name) return nullptr;
  return &*it;
}

const AtomDescriptor& atom_info(std::string_view name) {
  if (const AtomDescriptor* d = find_atom(name)) return *d;
  std::string msg = "unknown atom '" + std::string(name) + "'";
  std::vector<std::string> near;
  for (const AtomDescriptor& a : registry()) {
    bool close = edit_distance(a.name, name) <= 2 ||
                 (name.size() >= 3 && a.name.find(name) != std::string::npos);
    if (close) near.push_back(a.name);
  }
  if (!near.empty()) {
    msg += "; did you mean";
    for (std::size_t i = 0; i < near.size(); ++i) msg += (i ? ", " : " ") + near[i];
    msg += "?";
  }
  throw LookupError(msg);
}

std::span<const AtomDescriptor> list_atoms() { return registry(); }

Matrix eval_atom(std::string_view name, std::span<const Matrix> args, std::span<const double> params) {
  return atom_info(name).evaluate(args, params);
}

double perron_root(const Matrix& x, Eigen::VectorXd* eigenvector, double tol, int max_iters) {
  const Eigen::Index n = x.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  double lo = 0.0, hi = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd w = x * v;
    Eigen::ArrayXd ratio = w.array() / v.array();
    lo = ratio.minCoeff();
    hi = ratio.maxCoeff();
    v = w / w.maxCoeff();
    if (hi - lo <= tol * hi) break;
  }
  if (eigenvector) *eigenvector = v;
  return 0.5 * (lo + hi);
}

}  // namespace llcp
