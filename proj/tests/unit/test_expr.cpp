#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "ndde/error.hpp"
#include "ndde/expr.hpp"

using namespace ndde;

TEST_CASE("parse builds the expected tree") {
  const Expr e = parse("0.5*cos(t)+1");
  CHECK(e.root().op == Op::Add);
  CHECK(e.root().lhs->op == Op::Mul);
  CHECK(e.root().lhs->rhs->op == Op::Cos);
  CHECK(e.root().lhs->rhs->lhs->op == Op::Var);
  CHECK(e.root().rhs->value == 1.0);
  CHECK(print(e) == print(parse("(0.5 * cos(t)) + 1")));
}

TEST_CASE("parse handles nested exponentials") {
  const Expr e = parse("exp(-t+1+0.5*cos(t))");
  CHECK(e.root().op == Op::Exp);
  for (double t : {0.0, 0.7, 3.0, 12.5}) {
    CHECK(e(t) == doctest::Approx(std::exp(-t + 1 + 0.5 * std::cos(t))).epsilon(1e-15));
  }
}

TEST_CASE("syntax errors carry the byte offset") {
  try {
    parse("sin(");
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.offset() == 4);
    CHECK(err.kind() == ParseError::Kind::Syntax);
  }
  CHECK_THROWS_AS(parse("foo(t)"), ParseError);
  CHECK_THROWS_AS(parse("sin(t, t)"), ParseError);
  CHECK_THROWS_AS(parse("t^t"), ParseError);
  CHECK_THROWS_AS(parse("1 +"), ParseError);
  CHECK_THROWS_AS(parse("(t"), ParseError);
  CHECK_THROWS_AS(parse("t)"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("unknown identifiers report their position") {
  try {
    parse("2*cos(x)");
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.kind() == ParseError::Kind::UnknownIdentifier);
    CHECK(err.offset() == 6);
  }
}

TEST_CASE("evaluation") {
  CHECK(eval(parse("cos(2*t)+2"), 0.0) == 3.0);
  CHECK(eval(parse("exp(-t)"), 0.0) == 1.0);
  CHECK(eval(parse("2^3"), 0.0) == 8.0);
  CHECK(eval(parse("-2^2"), 0.0) == -4.0);
  CHECK(eval(parse("abs(t)"), -2.5) == 2.5);
  CHECK(eval(parse("sqrt(t)"), 9.0) == 3.0);

  // Independent evaluation in extended precision.
  const long double t = std::exp(static_cast<long double>(std::numbers::pi));
  const long double want = 2.0L * std::cos(std::log(t)) + 2.05L;
  CHECK(eval(parse("2*cos(log(t))+2.05"), static_cast<double>(t)) ==
        doctest::Approx(static_cast<double>(want)).epsilon(1e-12));
  CHECK(static_cast<double>(want) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(eval(parse("log(t)"), 0.0), DomainError);
  CHECK_THROWS_AS(eval(parse("sqrt(t)"), -1.0), DomainError);
  CHECK_THROWS_AS(eval(parse("1/t"), 0.0), DomainError);
  CHECK_THROWS_AS(eval(parse("exp(t)"), 1000.0), DomainError);
}

TEST_CASE("derivatives") {
  const Expr d1 = differentiate(parse("0.5*cos(t)+1"));
  const Expr d2 = differentiate(parse("exp(-t)"));
  for (double t = -3.0; t <= 3.0; t += 0.25) {
    CHECK(d1(t) == doctest::Approx(-0.5 * std::sin(t)).epsilon(1e-14));
    CHECK(d2(t) == doctest::Approx(-std::exp(-t)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(differentiate(parse("abs(t)")), DifferentiationError);
  CHECK(as_constant(differentiate(parse("pi/2"))) == 0.0);
}

TEST_CASE("derivatives agree with central differences on every fixture expression") {
  const std::vector<std::string> texts = {
      "1/4",          "1/2",        "2",   "0.5*cos(t)+1+exp(-t+1+0.5*cos(t))",
      "exp(-t)",      "pi/2",       "0.75*sin(4*t)+1.25",
      "0.1",          "0.01",       "0.25", "0.05",
      "0.15",         "1.1",        "2*cos(log(t))+2.05",
      "0.02",         "2*pi",       "3",   "sin(t)+1.5",
      "1/3",          "cos(2*t)+2", "cos(2*t+1/2)+3/2", "1/4"};
  const double h = 1e-5;
  for (const auto& text : texts) {
    const Expr e = parse(text);
    const Expr d = differentiate(e);
    for (double t = 1.0; t <= 20.0; t += 0.37) {
      const double fd = (e(t + h) - e(t - h)) / (2 * h);
      CHECK_MESSAGE(std::abs(d(t) - fd) <= 1e-6, text << " at t=" << t);
    }
  }
}

TEST_CASE("constant folding") {
  CHECK(as_constant(parse("0.25")) == 0.25);
  CHECK(*as_constant(parse("pi/2")) == doctest::Approx(std::numbers::pi / 2));
  CHECK_FALSE(as_constant(parse("exp(-t)")).has_value());
  CHECK(as_constant(parse("t-t")).has_value() == false);
}

TEST_CASE("printing round-trips") {
  for (const char* text : {"0.5*cos(t)+1", "-t^2/3", "exp(-t+1+0.5*cos(t))", "sqrt(abs(t))-1e-3",
                           "2*cos(log(t))+2.05", "1/3"}) {
    const Expr e = parse(text);
    const Expr back = parse(print(e));
    CHECK(print(back) == print(e));
    for (double t : {0.3, 1.7, 4.0}) CHECK(back(t) == e(t));
  }
}
