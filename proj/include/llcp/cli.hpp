#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "llcp/solver.hpp"

namespace llcp::cli {

enum ExitCode : int {
  kOk = 0,
  kNotDgp = 1,
  kInputError = 2,
  kInfeasible = 3,
  kUnbounded = 4,
  kMaxIterations = 5,
};

struct Options {
  bool json = false;
  bool verbose = false;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<double> mu;
};

/// Solver settings after applying flags and LLCP_LOG.
SolverSettings settings_from(const Options& opts);

int cmd_check(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_canonicalize(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_solve(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err);

/// Entry point shared by the llcp binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace llcp::cli
