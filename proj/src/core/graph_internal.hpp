#pragma once

#include <optional>
#include <string>

#include "llcp/canonicalize.hpp"

namespace llcp::detail {

// Variants of the public graph builders that also record where the tight
// auxiliary values come from: `node` is the pf_eigenvalue node and `matrix`
// its argument.
GraphResult pf_graph(ExpSumProgram& program, const FormMatrix& u, const AffineForm* bound, const std::string& tag,
                     const std::optional<Expression>& node, const std::optional<Expression>& matrix);

GraphResult eye_minus_inv_graph(ExpSumProgram& program, const FormMatrix& u, const std::string& tag,
                                const std::optional<Expression>& matrix, double scale);

}  // namespace llcp::detail
