#include <string>

#include <gtest/gtest.h>

#include "stlagc/parser.hpp"

using namespace stlagc;

TEST(Parser, AlwaysRelativeBall) {
  auto phi = parse_formula("G[0,10] (norm2(x1 - x2) <= 3)");
  EXPECT_EQ(phi.op, TemporalOp::always);
  EXPECT_EQ(phi.outer.lo, 0.0);
  EXPECT_EQ(phi.outer.hi, 10.0);
  ASSERT_EQ(phi.body.literals().size(), 1u);
  const auto& lit = phi.body.literals()[0];
  EXPECT_FALSE(lit.negated);
  EXPECT_EQ(lit.predicate.family(), PredicateFamily::norm_ball);
  EXPECT_EQ(phi.agents, (std::vector<int>{1, 2}));
  std::vector<double> y{4.0, 1.0};
  EXPECT_NEAR(phi.body.value(y, Conjunction::exact), 0.0, 1e-8);
}

TEST(Parser, EventuallyAlwaysIntervals) {
  auto phi = parse_formula("F[0,5] G[10,20] (norm2(x1 - 23) <= 0.5)");
  EXPECT_EQ(phi.op, TemporalOp::eventually_always);
  EXPECT_EQ(phi.outer.lo, 0.0);
  EXPECT_EQ(phi.outer.hi, 5.0);
  EXPECT_EQ(phi.inner.lo, 10.0);
  EXPECT_EQ(phi.inner.hi, 20.0);
  EXPECT_EQ(phi.window_end(), 25.0);
}

TEST(Parser, ReversedIntervalRejected) { EXPECT_THROW(parse_formula("G[5,2] (x1 <= 0)"), ParseError); }

TEST(Parser, LinearBothDirections) {
  auto le = parse_formula("G[0,1] (2 * x1 - 1 <= 3)");
  auto ge = parse_formula("G[0,1] (x1 >= 3)");
  std::vector<double> y{1.0};
  EXPECT_DOUBLE_EQ(le.body.value(y, Conjunction::exact), 2.0);
  EXPECT_DOUBLE_EQ(ge.body.value(y, Conjunction::exact), -2.0);
}

TEST(Parser, NegationFlipsSign) {
  auto phi = parse_formula("G[0,1] (not (x1 <= 3))");
  ASSERT_TRUE(phi.body.literals()[0].negated);
  std::vector<double> y{1.0};
  EXPECT_DOUBLE_EQ(phi.body.value(y, Conjunction::exact), -2.0);
}

TEST(Parser, ComponentsAndVectors) {
  auto phi = parse_formula("F[0,40] G[0,20] (norm2([x3_1 - 14, x3_2 - 7]) <= 0.1)", {{3, 3}});
  EXPECT_EQ(phi.body.support().size(), 2u);
  std::vector<double> y{14.0, 7.0};
  EXPECT_NEAR(phi.body.value(y, Conjunction::exact), 0.1, 1e-8);
}

TEST(Parser, WholeAgentVectorUsesDimensions) {
  auto phi = parse_formula("G[0,1] (norm2(x1 - x2) <= 1)", {{1, 2}, {2, 2}});
  EXPECT_EQ(phi.body.dimension(), 4u);
}

TEST(Parser, Sqnorm) {
  auto phi = parse_formula("G[0,1] (sqnorm(x1 - 5) <= 10)");
  EXPECT_EQ(phi.body.literals()[0].predicate.family(), PredicateFamily::concave_quadratic);
  std::vector<double> y{3.0};
  EXPECT_DOUBLE_EQ(phi.body.value(y, Conjunction::exact), 6.0);
}

TEST(Parser, Conjunction) {
  auto phi = parse_formula("G[0,1] (x1 <= 1 and x2 >= 0 and norm2(x1 - x2) <= 2)");
  EXPECT_EQ(phi.body.literals().size(), 3u);
}

namespace {

ParseError parse_error(const std::string& text) {
  try {
    parse_formula(text);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for " << text;
  return ParseError(ParseError::Kind::syntax, 0, "");
}

}  // namespace

TEST(ParserErrors, Disjunction) { EXPECT_EQ(parse_error("G[0,1] (x1 <= 1 or x2 <= 1)").kind(), ParseError::Kind::semantic); }

TEST(ParserErrors, NestingOutsideFragment) {
  EXPECT_EQ(parse_error("G[0,1] F[0,2] (x1 <= 1)").kind(), ParseError::Kind::semantic);
  EXPECT_EQ(parse_error("F[0,1] G[0,2] F[0,1] (x1 <= 1)").kind(), ParseError::Kind::semantic);
}

TEST(ParserErrors, NormLowerBound) { EXPECT_EQ(parse_error("G[0,1] (norm2(x1) >= 1)").kind(), ParseError::Kind::semantic); }

TEST(ParserErrors, UnknownSymbolPosition) {
  auto e = parse_error("G[0,1] (y1 <= 1)");
  EXPECT_EQ(e.kind(), ParseError::Kind::syntax);
  EXPECT_EQ(e.position(), 8u);
}

TEST(ParserErrors, IndexOutOfRange) {
  EXPECT_THROW(parse_formula("G[0,1] (x1_2 <= 1)"), ParseError);
  EXPECT_NO_THROW(parse_formula("G[0,1] (x1_2 <= 1)", {{1, 2}}));
}

TEST(ParserErrors, ConstantPredicate) { EXPECT_THROW(parse_formula("G[0,1] (3 <= 4)"), ParseError); }

TEST(ParserErrors, TrailingInput) { EXPECT_THROW(parse_formula("G[0,1] (x1 <= 1) x2"), ParseError); }

TEST(ParserErrors, MissingBody) { EXPECT_THROW(parse_formula("G[0,1]"), ParseError); }
