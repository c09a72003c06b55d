#include <doctest.h>

#include "bundlekit/error.hpp"
#include "bundlekit/expr_matrix.hpp"
#include "support.hpp"

using namespace bundlekit;
using namespace bundlekit::expr;

namespace {

const std::vector<std::string> kXY{"x", "y"};

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("grammar fixture") {
  const auto cases = testing::grammar_cases(BUNDLEKIT_TEST_DATA "/grammar_cases.txt");
  REQUIRE(cases.size() == 100);
  const EvalContext ctx{{"x", 0.7}, {"y", -1.3}};
  for (const auto& c : cases) {
    CAPTURE(c.text);
    if (c.valid) {
      const double want = std::stod(c.expected);
      CHECK(eval(parse(c.text, kXY), ctx) == doctest::Approx(want).epsilon(1e-14));
    } else {
      const auto k = kind_of([&] { parse(c.text, kXY); });
      CHECK(to_string(k) == c.expected);
    }
  }
}

TEST_CASE("precedence and associativity") {
  CHECK(eval(parse("2^3^2", {}), {}) == 512.0);
  CHECK(eval(parse("-2^2", {}), {}) == -4.0);
  CHECK(eval(parse("8/4/2", {}), {}) == 1.0);
  CHECK(eval(parse("1-2-3", {}), {}) == -4.0);
}

TEST_CASE("syntax errors carry the byte offset") {
  try {
    parse("1 + * 2", {});
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SyntaxError);
    REQUIRE(e.offset());
    CHECK(*e.offset() == 4);
  }
}

TEST_CASE("nesting depth is bounded") {
  std::string deep;
  for (int i = 0; i < 100; ++i) deep += "(";
  deep += "1";
  for (int i = 0; i < 100; ++i) deep += ")";
  CHECK(eval(parse(deep, {}), {}) == 1.0);  // parentheses add no tree depth
  std::string tall = "x";
  for (int i = 0; i < kMaxDepth + 2; ++i) tall = "sin(" + tall + ")";
  CHECK(kind_of([&] { parse(tall, {"x"}); }) == ErrorKind::SyntaxError);
}

TEST_CASE("evaluation domain errors") {
  CHECK(kind_of([] { eval(parse("ln(0 - 1)", {}), {}); }) == ErrorKind::EvalDomainError);
  CHECK(kind_of([] { eval(parse("1/(1 - 1)", {}), {}); }) == ErrorKind::EvalDomainError);
  CHECK(kind_of([] { eval(parse("sqrt(0 - 2)", {}), {}); }) == ErrorKind::EvalDomainError);
  CHECK(kind_of([] { eval(parse("(0 - 2)^0.5", {}), {}); }) == ErrorKind::EvalDomainError);
  CHECK(kind_of([] { eval(parse("exp(1000)", {}), {}); }) == ErrorKind::EvalDomainError);
  CHECK(kind_of([] { eval(parse("x + 1", {"x"}), {}); }) == ErrorKind::MissingVariable);
}

TEST_CASE("print then parse gives the same tree") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 60; ++k) {
    const Expr e = testing::random_expr(rng, 4);
    const Expr back = parse(print(e), kXY);
    CAPTURE(print(e));
    CHECK(structurally_equal(e, back));
  }
  for (const char* s : {"-x^2", "(-x)^2", "x - (y - 1)", "x/(y*2)", "2^-x", "-(x + y)", "atan2(y, -x)"}) {
    const Expr e = parse(s, kXY);
    CAPTURE(s);
    CHECK(structurally_equal(e, parse(print(e), kXY)));
  }
}

TEST_CASE("derivatives of the elementary functions") {
  const EvalContext at{{"x", 0.4}, {"y", 1.1}};
  const struct {
    const char* f;
    const char* df;  // d/dx written by hand
  } rows[] = {
      {"sin(x)", "cos(x)"},
      {"cos(x)", "-sin(x)"},
      {"tan(x)", "1/cos(x)^2"},
      {"exp(2*x)", "2*exp(2*x)"},
      {"ln(x)", "1/x"},
      {"sqrt(x)", "0.5/sqrt(x)"},
      {"atan2(y, x)", "-y/(x^2 + y^2)"},
      {"atan2(x, y)", "y/(x^2 + y^2)"},
      {"abs(x - 1)", "-1"},
      {"x^y", "y*x^(y - 1)"},
      {"y^x", "ln(y)*y^x"},
      {"x^3", "3*x^2"},
  };
  for (const auto& r : rows) {
    CAPTURE(r.f);
    CHECK(eval(deriv(parse(r.f, kXY), "x"), at) == doctest::Approx(eval(parse(r.df, kXY), at)).epsilon(1e-13));
  }
  CHECK(deriv(parse("y^2", kXY), "x").is_lit(0.0));
}

TEST_CASE("substitution is simultaneous") {
  const Expr e = parse("x + 2*y", kXY);
  const Expr s = substitute(e, {{"x", Expr::var("y")}, {"y", Expr::var("x")}});
  CHECK(eval(s, {{"x", 1.0}, {"y", 10.0}}) == 12.0);
}

TEST_CASE("compiled programs agree with the tree walker") {
  std::mt19937_64 rng(9);
  std::vector<Expr> outs;
  for (int k = 0; k < 12; ++k) outs.push_back(testing::random_expr(rng, 4));
  const Program p(outs, kXY);
  const std::vector<double> in{0.3, -0.6};
  const auto got = p(in);
  for (std::size_t k = 0; k < outs.size(); ++k) {
    CHECK(got[k] == doctest::Approx(eval(outs[k], {{"x", 0.3}, {"y", -0.6}})).epsilon(1e-15));
  }
  CHECK(kind_of([] { Program({parse("x + y", {"x", "y"})}, {"x"}); }) == ErrorKind::MissingVariable);
}

TEST_CASE("expression matrices") {
  ExprMatrix m(2, 2);
  m.at(0, 0) = {parse("x", kXY), Expr(0.0)};
  m.at(0, 1) = {Expr(0.0), parse("y", kXY)};
  m.at(1, 0) = {Expr(1.0), Expr(0.0)};
  const auto v = m.eval({{"x", 2.0}, {"y", 3.0}});
  CHECK(v(0, 1) == std::complex<double>(0, 3));
  CHECK(m.adjoint().eval({{"x", 2.0}, {"y", 3.0}})(1, 0) == std::complex<double>(0, -3));
  const auto p = ExprMatrix::phase(parse("x", kXY)).eval({{"x", 0.5}, {"y", 0.0}});
  CHECK(std::abs(p(0, 0) - std::polar(1.0, 0.5)) < 1e-15);
  CHECK(m.deriv("y").eval({{"x", 0.0}, {"y", 0.0}})(0, 1) == std::complex<double>(0, 1));
}
