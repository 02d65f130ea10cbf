#include "llcp/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "llcp/error.hpp"

namespace llcp {

namespace {

// Can argument `child` of an atom with monotonicity `m` keep the result
// log-log convex (`want_convex`) or log-log concave?
bool composes(Curvature child, Monotonicity m, bool want_convex) {
  if (is_affine(child)) return true;
  bool same = want_convex ? child == Curvature::Convex : child == Curvature::Concave;
  bool opposite = want_convex ? child == Curvature::Concave : child == Curvature::Convex;
  return (same && m == Monotonicity::Nondecreasing) || (opposite && m == Monotonicity::Nonincreasing);
}

std::string requirement(Monotonicity m, bool want_convex) {
  std::string_view same = want_convex ? "log-log convex" : "log-log concave";
  std::string_view opposite = want_convex ? "log-log concave" : "log-log convex";
  switch (m) {
    case Monotonicity::Nondecreasing: return "log-log affine or " + std::string(same);
    case Monotonicity::Nonincreasing: return "log-log affine or " + std::string(opposite);
    case Monotonicity::Neither: return "log-log affine";
  }
  return "log-log affine";
}

std::string describe_children(const std::vector<Curvature>& cs) {
  std::string s = "[";
  for (std::size_t i = 0; i < cs.size(); ++i) s += (i ? ", " : "") + std::string(to_string(cs[i]));
  return s + "]";
}

}  // namespace

const CurvatureAnalyzer::Verdict& CurvatureAnalyzer::analyze(const Expression& expr) {
  if (auto it = memo_.find(expr.node()); it != memo_.end()) return it->second;

  Verdict v;
  switch (expr.kind()) {
    case NodeKind::Constant:
      v.curvature = Curvature::Constant;
      break;
    case NodeKind::Variable:
      v.curvature = Curvature::Affine;
      break;
    case NodeKind::Atom: {
      const AtomDescriptor& atom = expr.atom();
      auto children = expr.children();
      std::vector<Curvature> cs;
      for (const Expression& c : children) cs.push_back(analyze(c).curvature);

      auto first_unknown = std::find(cs.begin(), cs.end(), Curvature::Unknown);
      if (std::all_of(cs.begin(), cs.end(), [](Curvature c) { return c == Curvature::Constant; })) {
        v.curvature = Curvature::Constant;
      } else if (first_unknown != cs.end()) {
        v.curvature = Curvature::Unknown;
      } else {
        auto all_compose = [&](bool want_convex) -> std::optional<std::size_t> {
          for (std::size_t k = 0; k < cs.size(); ++k)
            if (!composes(cs[k], atom.monotonicity(expr.params(), k), want_convex)) return k;
          return std::nullopt;
        };
        bool all_affine = std::all_of(cs.begin(), cs.end(), is_affine);
        auto convex_fail = all_compose(true);
        auto concave_fail = all_compose(false);
        switch (atom.curvature) {
          case Curvature::Affine:
            if (all_affine) {
              v.curvature = Curvature::Affine;
            } else if (!convex_fail) {
              v.curvature = Curvature::Convex;
            } else if (!concave_fail) {
              v.curvature = Curvature::Concave;
            } else {
              std::size_t k = std::max(*convex_fail, *concave_fail);
              v.failed_child = k;
              v.rule = "log-log affine atom '" + atom.name + "' (" +
                       std::string(to_string(atom.monotonicity(expr.params(), k))) +
                       " in argument " + std::to_string(k) +
                       ") mixes log-log convex and log-log concave arguments; arguments are " +
                       describe_children(cs);
            }
            break;
          case Curvature::Convex:
          case Curvature::Concave: {
            bool want_convex = atom.curvature == Curvature::Convex;
            auto fail = want_convex ? convex_fail : concave_fail;
            if (!fail) {
              v.curvature = atom.curvature;
            } else {
              std::size_t k = *fail;
              Monotonicity m = atom.monotonicity(expr.params(), k);
              v.failed_child = k;
              v.rule = std::string(to_string(atom.curvature)) + " atom '" + atom.name + "' is " +
                       std::string(to_string(m)) + " in argument " + std::to_string(k) +
                       ", which must be " + requirement(m, want_convex) + "; found " +
                       std::string(to_string(cs[k])) + " (arguments " + describe_children(cs) + ")";
            }
            break;
          }
          default:
            break;
        }
      }
      break;
    }
  }
  return memo_.emplace(expr.node(), std::move(v)).first->second;
}

Curvature curvature(const Expression& expr) { return CurvatureAnalyzer().curvature(expr); }

namespace {

class Explainer {
 public:
  DgpReport run(const Problem& p) {
    bool want_convex = p.sense() == Sense::Minimize;
    check_root("objective", p.objective(), want_convex ? Need::Convex : Need::Concave,
               std::string(p.sense() == Sense::Minimize ? "Minimize" : "Maximize") + " requires " +
                   (want_convex ? "log-log convex" : "log-log concave"));
    for (std::size_t i = 0; i < p.constraints().size(); ++i) {
      const Constraint& c = p.constraints()[i];
      std::string where = "constraint " + std::to_string(i);
      if (c.kind() == ConstraintKind::LessEq) {
        check_root(where + " lhs", c.lhs(), Need::Convex, "inequality requires log-log convex lhs");
        check_root(where + " rhs", c.rhs(), Need::Concave, "inequality requires log-log concave rhs");
      } else {
        check_root(where + " lhs", c.lhs(), Need::Affine, "equality requires log-log affine");
        check_root(where + " rhs", c.rhs(), Need::Affine, "equality requires log-log affine");
      }
    }
    return std::move(report_);
  }

 private:
  enum class Need { Convex, Concave, Affine };

  void record(const Expression& e, const std::string& location) {
    if (!seen_.insert(e.node()).second) return;
    CurvatureJudgment j{.expr = e, .location = location};
    const auto& v = analyzer_.analyze(e);
    j.curvature = v.curvature;
    j.failed_child = v.failed_child;
    j.rule = v.rule;
    for (const Expression& c : e.children()) j.child_curvatures.push_back(analyzer_.curvature(c));
    report_.judgments.push_back(std::move(j));
    auto children = e.children();
    for (std::size_t k = 0; k < children.size(); ++k)
      record(children[k], location + " > " + e.name() + "[" + std::to_string(k) + "]");
  }

  void check_root(const std::string& where, const Expression& root, Need need,
                  const std::string& requirement) {
    record(root, where);
    if (!report_.is_dgp) return;
    Curvature c = analyzer_.curvature(root);
    bool ok = need == Need::Convex ? is_convex(c) : need == Need::Concave ? is_concave(c) : is_affine(c);
    if (ok) return;
    report_.is_dgp = false;
    report_.violation_path.push_back(where + ": " + to_string(root));
    if (c != Curvature::Unknown) {
      std::string side = where.substr(where.rfind(' ') + 1);
      if (where == "objective")
        report_.message = requirement + "; found " + std::string(to_string(c));
      else
        report_.message = requirement + "; " + side + " is " + std::string(to_string(c));
      return;
    }
    // Descend along the leftmost uncertified child to where the rule fails.
    Expression node = root;
    while (true) {
      const auto& v = analyzer_.analyze(node);
      if (v.failed_child) {
        report_.message = where + ": " + v.rule;
        return;
      }
      auto children = node.children();
      auto it = std::find_if(children.begin(), children.end(), [&](const Expression& ch) {
        return analyzer_.curvature(ch) == Curvature::Unknown;
      });
      if (it == children.end()) {
        report_.message = where + ": curvature could not be certified";
        return;
      }
      node = *it;
      report_.violation_path.push_back(to_string(node));
    }
  }

  CurvatureAnalyzer analyzer_;
  std::set<const Expression::Node*> seen_;
  DgpReport report_;
};

}  // namespace

DgpReport explain(const Problem& problem) { return Explainer().run(problem); }

bool is_dgp(const Problem& problem) {
  CurvatureAnalyzer a;
  bool minimize = problem.sense() == Sense::Minimize;
  Curvature obj = a.curvature(problem.objective());
  if (minimize ? !is_convex(obj) : !is_concave(obj)) return false;
  for (const Constraint& c : problem.constraints()) {
    Curvature l = a.curvature(c.lhs()), r = a.curvature(c.rhs());
    if (c.kind() == ConstraintKind::LessEq) {
      if (!is_convex(l) || !is_concave(r)) return false;
    } else if (!is_affine(l) || !is_affine(r)) {
      return false;
    }
  }
  return true;
}

std::string format_report(const DgpReport& report) {
  std::ostringstream os;
  os << "DGP: " << (report.is_dgp ? "yes" : "no") << "\n";
  if (!report.is_dgp) {
    os << "violation: " << report.message << "\n";
    os << "path:\n";
    for (std::size_t i = 0; i < report.violation_path.size(); ++i)
      os << "  " << std::string(2 * i, ' ') << report.violation_path[i] << "\n";
  }
  os << "curvature:\n";
  for (const CurvatureJudgment& j : report.judgments)
    os << "  " << j.location << ": " << to_string(j.expr) << " -> " << to_string(j.curvature) << "\n";
  return os.str();
}

std::string_view to_string(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::ConsistentConvex: return "consistent-convex";
    case ProbeVerdict::ConsistentConcave: return "consistent-concave";
    case ProbeVerdict::ConsistentAffine: return "consistent-affine";
    case ProbeVerdict::Violation: return "violation";
  }
  return "violation";
}

ProbeResult numeric_curvature_probe(const Expression& expr, double lo, double hi, int samples,
                                    double tol, std::uint64_t seed) {
  auto vars = variables(expr);
  if (vars.size() > 1 || !expr.shape().is_scalar() || (vars.size() == 1 && !vars[0].shape().is_scalar()))
    throw SignatureError("probe requires a scalar expression of at most one scalar variable");
  if (!(lo > 0.0) || !(hi > lo) || samples < 1) throw DomainError("probe interval must satisfy 0 < lo < hi");

  std::string name = vars.empty() ? std::string() : vars[0].name();
  auto f = [&](double x) {
    Assignment a;
    if (!name.empty()) a.emplace(name, Matrix::Constant(1, 1, x));
    return evaluate(expr, a)(0, 0);
  };

  // Each piece of evidence is a signed number: positive favors convex,
  // negative concave; |value| <= 1 counts as zero.
  struct Evidence {
    double x;
    double value;
  };
  std::vector<Evidence> evidence;
  ProbeResult result;
  result.max_curvature = -INFINITY;
  result.min_curvature = INFINITY;

  // Rounding error of the second difference with step 1e-4 x is about
  // eps / 1e-8 in q; anything below this level is not evidence.
  constexpr double kDifferenceNoise = 64 * std::numeric_limits<double>::epsilon() / 1e-8;
  const double log_lo = std::log(lo), log_hi = std::log(hi);
  for (int k = 0; k < samples; ++k) {
    double x = std::exp(log_lo + (k + 0.5) / samples * (log_hi - log_lo));
    double h = 1e-4 * x;
    double f0 = f(x), fp = f(x + h), fm = f(x - h);
    double d1 = (fp - fm) / (2 * h);
    double d2 = (fp - 2 * f0 + fm) / (h * h);
    // x^2/f * (f'' + f'/x - f'^2/f) is the second derivative of log f(e^u).
    double a = x * x * d2 / f0, b = x * d1 / f0, c = b * b;
    double q = a + b - c;
    double scale = std::abs(a) + std::abs(b) + c;
    result.max_curvature = std::max(result.max_curvature, q);
    result.min_curvature = std::min(result.min_curvature, q);
    evidence.push_back({x, q / (tol * scale + kDifferenceNoise)});
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double thetas[] = {0.25, 0.5, 0.75};
  for (int k = 0; k < samples; ++k) {
    double xa = std::exp(log_lo + unit(rng) * (log_hi - log_lo));
    double xb = std::exp(log_lo + unit(rng) * (log_hi - log_lo));
    double la = std::log(f(xa)), lb = std::log(f(xb));
    for (double t : thetas) {
      double xm = std::exp(t * std::log(xa) + (1 - t) * std::log(xb));
      double gap = t * la + (1 - t) * lb - std::log(f(xm));
      evidence.push_back({xm, gap / (1e-9 * (1 + std::abs(la) + std::abs(lb)))});
    }
  }

  bool any_pos = false, any_neg = false;
  for (const Evidence& e : evidence) {
    any_pos |= e.value > 1.0;
    any_neg |= e.value < -1.0;
  }
  if (!any_pos && !any_neg) {
    result.verdict = ProbeVerdict::ConsistentAffine;
  } else if (!any_neg) {
    result.verdict = ProbeVerdict::ConsistentConvex;
  } else if (!any_pos) {
    result.verdict = ProbeVerdict::ConsistentConcave;
  } else {
    result.verdict = ProbeVerdict::Violation;
    // Witness: strongest evidence against the majority sign.
    int pos = 0, neg = 0;
    for (const Evidence& e : evidence) pos += e.value > 1.0, neg += e.value < -1.0;
    double best = 0.0;
    for (const Evidence& e : evidence) {
      double against = pos >= neg ? -e.value : e.value;
      if (against > best) best = against, result.witness = e.x;
    }
  }
  return result;
}

}  // namespace llcp
