#include "llcp/document.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace llcp {

namespace {

using json = nlohmann::json;
using VarTable = std::map<std::string, Expression, std::less<>>;
using ConstTable = std::map<std::string, Matrix, std::less<>>;

[[noreturn]] void fail(ParseErrorCode code, const std::string& pointer, const std::string& message) {
  throw ParseError(code, message + (pointer.empty() ? "" : " (at " + pointer + ")"), pointer);
}

const json& member(const json& obj, const char* key, const std::string& ptr) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ParseErrorCode::Schema, ptr, std::string("missing key \"") + key + "\"");
  return *it;
}

std::size_t as_index(const json& j, const std::string& ptr) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) fail(ParseErrorCode::Schema, ptr, "expected a nonnegative integer");
  auto v = j.get<long long>();
  if (v < 0) fail(ParseErrorCode::Schema, ptr, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

double as_number(const json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ParseErrorCode::Schema, ptr, "expected a number");
  return j.get<double>();
}

// A number or a non-empty rectangular array of rows.
Matrix parse_matrix(const json& j, const std::string& ptr) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(ParseErrorCode::Schema, ptr, "expected a number or an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = ptr + "/" + std::to_string(r);
    if (!j[r].is_array() || j[r].empty()) fail(ParseErrorCode::Schema, rp, "expected a non-empty row array");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) fail(ParseErrorCode::ShapeMismatch, rp, "rows have different lengths");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_number(j[r][c], ptr + "/" + std::to_string(r) + "/" + std::to_string(c));
  return m;
}

Expression make_constant(const Matrix& m, const std::string& ptr) {
  try {
    return constant(m);
  } catch (const DomainError& e) {
    fail(ParseErrorCode::NonpositiveConstant, ptr, e.what());
  }
}

class ExpressionParser {
 public:
  ExpressionParser(const VarTable& vars, const ConstTable& consts) : vars_(vars), consts_(consts) {}

  Expression parse(const json& j, const std::string& ptr) {
    if (!j.is_array() || j.empty() || !j[0].is_string())
      fail(ParseErrorCode::Schema, ptr, "expression must be an array starting with a name");
    const std::string head = j[0].get<std::string>();
    if (head == "var") {
      if (j.size() != 2 || !j[1].is_string()) fail(ParseErrorCode::Schema, ptr, "expected [\"var\", name]");
      auto it = vars_.find(j[1].get<std::string>());
      if (it == vars_.end())
        fail(ParseErrorCode::UnknownVariable, ptr + "/1", "undeclared variable '" + j[1].get<std::string>() + "'");
      return it->second;
    }
    if (head == "const") {
      if (j.size() != 2) fail(ParseErrorCode::Schema, ptr, "expected [\"const\", value]");
      if (j[1].is_string()) {
        auto it = consts_.find(j[1].get<std::string>());
        if (it == consts_.end())
          fail(ParseErrorCode::UnknownConstant, ptr + "/1", "undefined constant '" + j[1].get<std::string>() + "'");
        return make_constant(it->second, ptr + "/1");
      }
      return make_constant(parse_matrix(j[1], ptr + "/1"), ptr + "/1");
    }
    const AtomDescriptor* atom = find_atom(head);
    if (!atom) {
      try {
        atom_info(head);
      } catch (const LookupError& e) {
        fail(ParseErrorCode::UnknownAtom, ptr + "/0", e.what());
      }
    }
    // Index and slice take their integer parameters after the child.
    const bool trailing = atom->kind == AtomKind::Index || atom->kind == AtomKind::Slice;
    const std::size_t np = atom->num_params;
    if (j.size() < 1 + np) fail(ParseErrorCode::Schema, ptr, "too few entries for " + atom->signature);
    std::vector<double> params;
    std::vector<Expression> children;
    const std::size_t first_param = trailing ? j.size() - np : 1;
    for (std::size_t k = 0; k < np; ++k) {
      std::string pp = ptr + "/" + std::to_string(first_param + k);
      params.push_back(trailing ? static_cast<double>(as_index(j[first_param + k], pp))
                                : as_number(j[first_param + k], pp));
    }
    const std::size_t c0 = trailing ? 1 : 1 + np, c1 = trailing ? j.size() - np : j.size();
    for (std::size_t k = c0; k < c1; ++k) children.push_back(parse(j[k], ptr + "/" + std::to_string(k)));
    try {
      return apply(head, std::move(children), std::move(params));
    } catch (const SignatureError& e) {
      fail(ParseErrorCode::ShapeMismatch, ptr, e.what());
    }
  }

 private:
  const VarTable& vars_;
  const ConstTable& consts_;
};

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json matrix_json(const Matrix& m) {
  if (m.rows() == 1 && m.cols() == 1) return m(0, 0);
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json expression_json(const Expression& e) {
  switch (e.kind()) {
    case NodeKind::Variable: return json::array({"var", e.name()});
    case NodeKind::Constant: return json::array({"const", matrix_json(e.value())});
    case NodeKind::Atom: break;
  }
  json out = json::array({e.name()});
  const bool trailing = e.atom().kind == AtomKind::Index || e.atom().kind == AtomKind::Slice;
  if (!trailing)
    for (double p : e.params()) out.push_back(p);
  for (const Expression& c : e.children()) out.push_back(expression_json(c));
  if (trailing)
    for (double p : e.params()) out.push_back(static_cast<std::size_t>(p));
  return out;
}

json problem_json(const Problem& problem, const std::vector<Expression>& vars, int version) {
  json doc;
  doc["version"] = version;
  json jv = json::array();
  for (const Expression& v : vars)
    jv.push_back({{"name", v.name()}, {"shape", {v.shape().rows, v.shape().cols}}, {"pos", true}});
  doc["variables"] = std::move(jv);
  doc["objective"] = {{"sense", std::string(to_string(problem.sense()))},
                      {"expr", expression_json(problem.objective())}};
  json jc = json::array();
  for (const Constraint& c : problem.constraints())
    jc.push_back({{"type", c.kind() == ConstraintKind::Eq ? "eq" : "leq"},
                  {"lhs", expression_json(c.lhs())},
                  {"rhs", expression_json(c.rhs())}});
  doc["constraints"] = std::move(jc);
  return doc;
}

}  // namespace

std::string_view to_string(ParseErrorCode code) {
  switch (code) {
    case ParseErrorCode::Io: return "E_IO";
    case ParseErrorCode::Syntax: return "E_SYNTAX";
    case ParseErrorCode::Schema: return "E_SCHEMA";
    case ParseErrorCode::UnsupportedVersion: return "E_VERSION";
    case ParseErrorCode::NotPositive: return "E_NOT_POSITIVE";
    case ParseErrorCode::DuplicateVariable: return "E_DUPLICATE_VARIABLE";
    case ParseErrorCode::UnknownVariable: return "E_UNKNOWN_VARIABLE";
    case ParseErrorCode::UnknownConstant: return "E_UNKNOWN_CONSTANT";
    case ParseErrorCode::UnknownAtom: return "E_UNKNOWN_ATOM";
    case ParseErrorCode::ShapeMismatch: return "E_SHAPE";
    case ParseErrorCode::NonpositiveConstant: return "E_NONPOSITIVE_CONSTANT";
  }
  return "E_UNKNOWN";
}

ParseError::ParseError(ParseErrorCode code, std::string message, std::string pointer, int line, int column)
    : Error(std::string(to_string(code)) + ": " + message),
      code_(code),
      pointer_(std::move(pointer)),
      line_(line),
      column_(column) {}

ProblemDocument parse_problem_document(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte);
    throw ParseError(ParseErrorCode::Syntax,
                     "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what(), "", line,
                     col);
  }
  if (!doc.is_object()) fail(ParseErrorCode::Schema, "", "document must be a JSON object");

  const json& version = member(doc, "version", "");
  if (!version.is_number_integer() || version.get<int>() != 1)
    fail(ParseErrorCode::UnsupportedVersion, "/version", "unsupported version " + version.dump() + " (expected 1)");

  VarTable vars;
  std::vector<Expression> declared;
  const json& jv = member(doc, "variables", "");
  if (!jv.is_array()) fail(ParseErrorCode::Schema, "/variables", "expected an array");
  for (std::size_t i = 0; i < jv.size(); ++i) {
    const std::string ptr = "/variables/" + std::to_string(i);
    const json& v = jv[i];
    if (!v.is_object()) fail(ParseErrorCode::Schema, ptr, "expected an object");
    const json& name = member(v, "name", ptr);
    if (!name.is_string() || name.get<std::string>().empty())
      fail(ParseErrorCode::Schema, ptr + "/name", "expected a non-empty string");
    if (auto pos = v.find("pos"); pos != v.end() && !(pos->is_boolean() && pos->get<bool>()))
      fail(ParseErrorCode::NotPositive, ptr + "/pos", "all variables must be positive");
    Shape shape;
    if (auto s = v.find("shape"); s != v.end()) {
      if (!s->is_array() || s->size() != 2) fail(ParseErrorCode::Schema, ptr + "/shape", "expected [rows, cols]");
      shape = Shape{as_index((*s)[0], ptr + "/shape/0"), as_index((*s)[1], ptr + "/shape/1")};
      if (shape.size() == 0) fail(ParseErrorCode::ShapeMismatch, ptr + "/shape", "shape must be nonempty");
    }
    const std::string n = name.get<std::string>();
    if (vars.count(n)) fail(ParseErrorCode::DuplicateVariable, ptr + "/name", "duplicate variable '" + n + "'");
    Expression e = variable(n, shape);
    vars.emplace(n, e);
    declared.push_back(e);
  }

  ConstTable consts;
  if (auto jc = doc.find("constants"); jc != doc.end()) {
    if (!jc->is_object()) fail(ParseErrorCode::Schema, "/constants", "expected an object of name: value");
    for (auto it = jc->begin(); it != jc->end(); ++it) {
      const std::string ptr = "/constants/" + it.key();
      Matrix m = parse_matrix(it.value(), ptr);
      make_constant(m, ptr);
      consts.emplace(it.key(), std::move(m));
    }
  }

  ExpressionParser parser(vars, consts);
  const json& jo = member(doc, "objective", "");
  if (!jo.is_object()) fail(ParseErrorCode::Schema, "/objective", "expected an object");
  const json& sense = member(jo, "sense", "/objective");
  Sense s;
  if (sense == "minimize") {
    s = Sense::Minimize;
  } else if (sense == "maximize") {
    s = Sense::Maximize;
  } else {
    fail(ParseErrorCode::Schema, "/objective/sense", "sense must be \"minimize\" or \"maximize\"");
  }
  Expression objective = parser.parse(member(jo, "expr", "/objective"), "/objective/expr");
  if (!objective.shape().is_scalar())
    fail(ParseErrorCode::ShapeMismatch, "/objective/expr", "objective must be scalar, got " + objective.shape().str());

  std::vector<Constraint> constraints;
  if (auto jc = doc.find("constraints"); jc != doc.end()) {
    if (!jc->is_array()) fail(ParseErrorCode::Schema, "/constraints", "expected an array");
    for (std::size_t i = 0; i < jc->size(); ++i) {
      const std::string ptr = "/constraints/" + std::to_string(i);
      const json& c = (*jc)[i];
      if (!c.is_object()) fail(ParseErrorCode::Schema, ptr, "expected an object");
      const json& type = member(c, "type", ptr);
      Expression lhs = parser.parse(member(c, "lhs", ptr), ptr + "/lhs");
      Expression rhs = parser.parse(member(c, "rhs", ptr), ptr + "/rhs");
      if (lhs.shape() != rhs.shape())
        fail(ParseErrorCode::ShapeMismatch, ptr,
             "constraint sides have shapes " + lhs.shape().str() + " and " + rhs.shape().str());
      if (type == "leq") {
        constraints.emplace_back(ConstraintKind::LessEq, lhs, rhs);
      } else if (type == "geq") {
        constraints.emplace_back(ConstraintKind::LessEq, rhs, lhs);
      } else if (type == "eq") {
        constraints.emplace_back(ConstraintKind::Eq, lhs, rhs);
      } else {
        fail(ParseErrorCode::Schema, ptr + "/type", "type must be \"leq\", \"geq\" or \"eq\"");
      }
    }
  }
  return ProblemDocument{1, std::move(declared), Problem(s, std::move(objective), std::move(constraints))};
}

Problem parse_problem_file(std::string_view text) { return parse_problem_document(text).problem; }

ProblemDocument load_problem_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem_document(ss.str());
}

std::string serialize_problem(const Problem& problem, const std::vector<Expression>* declared) {
  return problem_json(problem, declared ? *declared : problem.variables(), 1).dump(2) + "\n";
}

std::string serialize_document(const ProblemDocument& doc) {
  return problem_json(doc.problem, doc.variables, doc.version).dump(2) + "\n";
}

}  // namespace llcp
