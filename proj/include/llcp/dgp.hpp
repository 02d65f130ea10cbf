#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "llcp/expression.hpp"
#include "llcp/problem.hpp"

namespace llcp {

/// Curvature of one node as inferred by the composition rule.
struct CurvatureJudgment {
  Expression expr;
  std::string location;  // first place the node was reached, e.g. "objective > mul[1]"
  Curvature curvature = Curvature::Unknown;
  std::vector<Curvature> child_curvatures;
  /// Set when the rule fails at this node (curvature Unknown with certified children).
  std::optional<std::size_t> failed_child;
  std::string rule;  // violated clause, empty unless failed_child is set
};

struct DgpReport {
  bool is_dgp = true;
  /// One entry per distinct node of the objective and constraint trees.
  std::vector<CurvatureJudgment> judgments;
  /// Root-to-node list for the first failure; empty when is_dgp.
  std::vector<std::string> violation_path;
  std::string message;
};

/// Infers log-log curvature bottom-up with a per-node memo. Shared subtrees
/// are analyzed once. The result is sound: Unknown only means "not certified".
class CurvatureAnalyzer {
 public:
  struct Verdict {
    Curvature curvature = Curvature::Unknown;
    std::optional<std::size_t> failed_child;
    std::string rule;
  };

  Curvature curvature(const Expression& expr) { return analyze(expr).curvature; }
  const Verdict& analyze(const Expression& expr);

 private:
  std::unordered_map<const Expression::Node*, Verdict> memo_;
};

Curvature curvature(const Expression& expr);

/// Objective and every constraint satisfy the DGP problem form.
bool is_dgp(const Problem& problem);

DgpReport explain(const Problem& problem);

/// Human-readable multi-line rendering of a report.
std::string format_report(const DgpReport& report);

enum class ProbeVerdict { ConsistentConvex, ConsistentConcave, ConsistentAffine, Violation };

std::string_view to_string(ProbeVerdict v);

struct ProbeResult {
  ProbeVerdict verdict = ProbeVerdict::Violation;
  /// Point at which the evidence contradicts every single classification.
  double witness = 0.0;
  /// Largest and smallest normalized second-order quantities observed.
  double max_curvature = 0.0;
  double min_curvature = 0.0;
};

/// Numeric classification of a scalar expression of one scalar variable over
/// [lo, hi]: the scalar second-order condition f'' + f'/x - f'^2/f via central
/// differences at `samples` log-spaced interior points, plus randomized
/// geometric-mean Jensen checks. A test oracle only; never used to certify.
/// Throws DomainError if an evaluation leaves the domain.
ProbeResult numeric_curvature_probe(const Expression& expr, double lo, double hi, int samples,
                                    double tol = 1e-5, std::uint64_t seed = 7);

}  // namespace llcp
