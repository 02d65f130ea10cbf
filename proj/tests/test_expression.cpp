#include <catch_amalgamated.hpp>

#include <cmath>

#include "llcp/error.hpp"
#include "llcp/expression.hpp"
#include "llcp/problem.hpp"
#include "support.hpp"

using namespace llcp;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST_CASE("variables and constants", "[expression]") {
  Expression x = variable("x");
  CHECK(x.is_variable());
  CHECK(x.shape() == kScalar);
  Expression big = variable("X", {3, 3});
  CHECK(big.shape() == Shape{3, 3});
  CHECK_THROWS_AS(variable(""), ConstructionError);
  CHECK_THROWS_AS(variable("z", {0, 2}), ConstructionError);

  CHECK(constant(1.9).value()(0, 0) == 1.9);
  CHECK(constant(1.0).is_constant());
  CHECK_THROWS_AS(constant(-1.0), DomainError);
  CHECK_THROWS_AS(constant(0.0), DomainError);
  CHECK_THROWS_AS(constant(std::nan("")), DomainError);
  Matrix m(2, 2);
  m << 1, 2, -3, 4;
  try {
    constant(m);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK_THAT(std::string(e.what()), ContainsSubstring("(1,0)"));
  }
}

TEST_CASE("apply checks signatures", "[expression]") {
  Expression x = variable("x"), y = variable("y");
  Expression xy = apply("mul", {x, y});
  CHECK(xy.shape() == kScalar);
  CHECK(to_string(xy) == "mul(x, y)");
  CHECK_THROWS_AS(apply("add", {x}), SignatureError);
  CHECK_THROWS_AS(apply("mul", {x, y, x}), SignatureError);
  CHECK_THROWS_AS(apply("frobnicate", {x}), LookupError);
  CHECK_THROWS_AS(apply("pow", {x}), SignatureError);
  CHECK_THROWS_AS(apply("mul", {variable("A", {2, 3}), variable("B", {3, 2})}), SignatureError);
  CHECK_THROWS_AS(pf_eigenvalue(variable("R", {2, 3})), SignatureError);
  CHECK_THROWS_AS(pnorm(variable("v", {3, 1}), 0.5), SignatureError);
  CHECK(pf_eigenvalue(variable("X", {3, 3})).shape() == kScalar);
  CHECK(matmul(variable("A", {2, 3}), variable("B", {3, 4})).shape() == Shape{2, 4});
  CHECK(slice(variable("S", {4, 4}), 1, 3, 0, 4).shape() == Shape{2, 4});
  CHECK(to_string(pow(x, 2)) == "pow[2](x)");
}

TEST_CASE("evaluate reference values", "[expression]") {
  Expression x = variable("x"), y = variable("y");
  CHECK(evaluate(x * y, {{"x", scalar(3)}, {"y", scalar(4)}})(0, 0) == 12.0);
  CHECK_THAT(evaluate(x * y, {{"x", scalar(11.780089932635645)}, {"y", scalar(4.143454698868564)}})(0, 0),
             WithinRel(48.81026898447343, 1e-12));
  Expression m = variable("M", {2, 2});
  Matrix mv(2, 2);
  mv << 1, 2, 3, 4;
  CHECK_THAT(evaluate(pf_eigenvalue(m), {{"M", mv}})(0, 0), WithinRel(5.372281323269014, 1e-10));
}

TEST_CASE("evaluate errors", "[expression]") {
  Expression x = variable("x"), y = variable("y");
  CHECK_THROWS_AS(evaluate(x * y, {{"x", scalar(1)}}), LookupError);
  try {
    evaluate(x * log(y), {{"x", scalar(2)}, {"y", scalar(0.5)}});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK_THAT(std::string(e.what()), ContainsSubstring("log"));
    CHECK_THAT(std::string(e.what()), ContainsSubstring("mul[1]"));
  }
  CHECK_THROWS_AS(evaluate(x, {{"x", Matrix::Constant(2, 1, 1.0)}}), Error);
}

TEST_CASE("leaves evaluate to themselves exactly", "[expression][property]") {
  testing::Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    Matrix v = testing::random_positive(rng, 2, 3, 1e-3, 1e3);
    CHECK(evaluate(constant(v), {}) == v);
    CHECK(evaluate(variable("v", {2, 3}), {{"v", v}}) == v);
  }
}

TEST_CASE("monomial homogeneity", "[expression][property]") {
  testing::Rng rng(22);
  Expression x = variable("x");
  for (int i = 0; i < 100; ++i) {
    double a = testing::uniform(rng, -3, 3), t = testing::log_uniform(rng, 0.1, 10), v = testing::log_uniform(rng, 0.1, 10);
    double base = evaluate(pow(x, a), {{"x", scalar(v)}})(0, 0);
    double scaled = evaluate(pow(x, a), {{"x", scalar(t * v)}})(0, 0);
    CHECK_THAT(scaled, WithinRel(std::pow(t, a) * base, 1e-12));
  }
}

TEST_CASE("shared subtrees evaluate identically", "[expression][property]") {
  Expression x = variable("x"), y = variable("y");
  Expression shared = exp(x / y) + pow(y, 0.5);
  Expression tree = apply("div", {shared, shared});
  CHECK(tree.children()[0].node() == tree.children()[1].node());
  testing::Rng rng(23);
  for (int i = 0; i < 50; ++i) {
    Assignment a{{"x", scalar(testing::log_uniform(rng, 0.1, 5))}, {"y", scalar(testing::log_uniform(rng, 0.1, 5))}};
    CHECK(evaluate(tree, a)(0, 0) == 1.0);
    CHECK(evaluate(shared * 1.0, a) == evaluate(shared, a));
  }
}

TEST_CASE("variables, substitute and structural equality", "[expression]") {
  Expression x = variable("x"), y = variable("y"), z = variable("z");
  Expression e = x * y + exp(y / x);
  auto vars = variables(e);
  REQUIRE(vars.size() == 2);
  CHECK(vars[0].name() == "x");
  CHECK(vars[1].name() == "y");

  Expression rebuilt = variable("x") * variable("y") + exp(variable("y") / variable("x"));
  CHECK(structurally_equal(e, rebuilt));
  CHECK_FALSE(structurally_equal(e, x * y + exp(x / y)));

  Expression sub = substitute(e, {{"y", z}});
  CHECK(to_string(sub) == "add(mul(x, z), exp(div(z, x)))");
  CHECK_THROWS(substitute(e, {{"y", variable("w", {2, 1})}}));
}

TEST_CASE("problems reject inconsistent construction", "[expression]") {
  Expression x = variable("x");
  CHECK_THROWS_AS(Problem(Sense::Minimize, variable("v", {2, 1})), ConstructionError);
  CHECK_THROWS_AS(Problem(Sense::Minimize, x * variable("x")), ConstructionError);
  CHECK_THROWS(variable("v", {2, 1}) <= variable("w", {3, 1}));
  Constraint c = x <= 2.0;
  CHECK_THROWS_AS(Problem(Sense::Minimize, x, {c, c}), ConstructionError);
  Problem p(Sense::Minimize, x * variable("y"), {x >= 2.0});
  CHECK(p.variables().size() == 2);
  CHECK(p.constraints()[0].lhs().is_constant());
}
