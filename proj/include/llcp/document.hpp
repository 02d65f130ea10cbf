#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "llcp/error.hpp"
#include "llcp/problem.hpp"

namespace llcp {

enum class ParseErrorCode {
  Io,
  Syntax,
  Schema,
  UnsupportedVersion,
  NotPositive,
  DuplicateVariable,
  UnknownVariable,
  UnknownConstant,
  UnknownAtom,
  ShapeMismatch,
  NonpositiveConstant,
};

/// Stable identifier such as "E_SYNTAX".
std::string_view to_string(ParseErrorCode code);

/// Problem-file error. Syntax errors carry a 1-based line and column; other
/// errors carry the JSON pointer of the offending value instead.
class ParseError : public Error {
 public:
  ParseError(ParseErrorCode code, std::string message, std::string pointer = {}, int line = 0, int column = 0);

  ParseErrorCode code() const { return code_; }
  const std::string& pointer() const { return pointer_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  ParseErrorCode code_;
  std::string pointer_;
  int line_;
  int column_;
};

struct ProblemDocument {
  int version = 1;
  /// Declared variables in document order, including unused ones.
  std::vector<Expression> variables;
  Problem problem;
};

/// Parses a JSON problem document. Constraint ids are assigned in document
/// order. Throws ParseError.
ProblemDocument parse_problem_document(std::string_view text);

Problem parse_problem_file(std::string_view text);

/// Reads and parses a file; a missing file is ParseErrorCode::Io.
ProblemDocument load_problem_file(const std::string& path);

/// Canonical document text: leq/eq constraints, inline constants, two-space
/// indentation. Variables default to the problem's variables.
std::string serialize_problem(const Problem& problem, const std::vector<Expression>* declared = nullptr);

std::string serialize_document(const ProblemDocument& doc);

}  // namespace llcp
