#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stlagc/parser.hpp"
#include "stlagc/stl.hpp"

using namespace stlagc;

namespace {

std::vector<StateRef> scalar(int agent) { return {{agent, 0}}; }

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

double eval(const Predicate& p, std::initializer_list<double> y) {
  std::vector<double> v(y);
  return p.value(v);
}

TemporalFormula formula(TemporalOp op, Interval outer, Interval inner, BooleanFormula body) {
  TemporalFormula phi;
  phi.op = op;
  phi.outer = outer;
  phi.inner = inner;
  phi.body = std::move(body);
  phi.agents = phi.body.agents();
  return phi;
}

BooleanFormula identity_body() {
  Eigen::RowVectorXd w(1);
  w << 1.0;
  return BooleanFormula({{Predicate::linear(scalar(1), w, 0.0), false}});
}

}  // namespace

TEST(Predicate, NormBallBoundaryIsZero) {
  Eigen::MatrixXd S(1, 2);
  S << 1.0, -1.0;
  auto p = Predicate::norm_ball({{1, 0}, {2, 0}}, S, vec({0.0}), 3.0);
  EXPECT_NEAR(eval(p, {5.0, 2.0}), 0.0, 1e-15);
}

TEST(Predicate, LinearArithmetic) {
  Eigen::RowVectorXd w(1);
  w << 1.0;
  auto p = Predicate::linear(scalar(1), w, -5.0);
  EXPECT_DOUBLE_EQ(eval(p, {8.0}), 3.0);
}

TEST(Predicate, NormBallAtCenter) {
  auto p = Predicate::norm_ball({{1, 0}, {1, 1}}, Eigen::MatrixXd::Identity(2, 2), vec({20.0, 80.0}), 10.0);
  EXPECT_DOUBLE_EQ(eval(p, {20.0, 80.0}), 10.0);
}

TEST(Predicate, DimensionMismatchThrows) {
  Eigen::RowVectorXd w(2);
  w << 1.0, 2.0;
  EXPECT_THROW(Predicate::linear(scalar(1), w, 0.0), DimensionError);
}

TEST(Conjunction, SmoothTwoEqualLiterals) {
  Eigen::RowVectorXd w(1);
  w << 1.0;
  BooleanFormula body({{Predicate::linear(scalar(1), w, 0.0), false}, {Predicate::linear(scalar(2), w, 0.0), false}});
  std::vector<double> y{3.0, 3.0};
  EXPECT_NEAR(body.value(y, Conjunction::smooth), 3.0 - std::log(2.0), 1e-12);
  EXPECT_NEAR(body.value(y, Conjunction::smooth), 2.3069, 1e-4);
}

TEST(Conjunction, SingleLiteralSmoothIsItself) {
  Eigen::RowVectorXd w(1);
  w << 1.0;
  BooleanFormula body({{Predicate::linear(scalar(1), w, 0.0), false}});
  std::vector<double> y{7.0};
  EXPECT_DOUBLE_EQ(body.value(y, Conjunction::smooth), 7.0);
}

TEST(Conjunction, ExactIsMin) {
  Eigen::RowVectorXd w(1);
  w << 1.0;
  BooleanFormula body({{Predicate::linear(scalar(1), w, 0.0), false}, {Predicate::linear(scalar(2), w, 0.0), false}});
  std::vector<double> y{1.0, 4.0};
  EXPECT_DOUBLE_EQ(body.value(y, Conjunction::exact), 1.0);
}

TEST(Conjunction, SmoothMinLargeValuesDoNotOverflow) {
  std::vector<double> v{-800.0, -790.0};
  EXPECT_TRUE(std::isfinite(smooth_min(v)));
  EXPECT_NEAR(smooth_min(v), -800.0 - std::log1p(std::exp(-10.0)), 1e-9);
}

TEST(Gradient, LinearIsConstant) {
  Eigen::RowVectorXd w(2);
  w << 2.0, 0.0;
  BooleanFormula body({{Predicate::linear({{1, 0}, {1, 1}}, w, 1.0), false}});
  std::vector<double> y{-3.0, 17.0};
  auto g = grad_boolean_robust(body, y).gradient;
  EXPECT_DOUBLE_EQ(g[0], 2.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(Gradient, ConcaveQuadratic) {
  auto p = Predicate::concave_quadratic(scalar(1), Eigen::MatrixXd::Identity(1, 1), vec({5.0}),
                                        Eigen::MatrixXd::Identity(1, 1), 10.0);
  BooleanFormula body({{p, false}});
  std::vector<double> y{3.0};
  EXPECT_DOUBLE_EQ(body.value(y, Conjunction::smooth), 6.0);
  EXPECT_NEAR(grad_boolean_robust(body, y).gradient[0], 4.0, 1e-12);
}

TEST(Gradient, MatchesCentralDifferences) {
  auto phi = parse_formula("G[0,1] (norm2([x1_1 - x2_1, x1_2 - x2_2]) <= 3 and x1_1 + 2 * x2_2 >= -4 and sqnorm(x2 - [1, 1]) <= 9)",
                           {{1, 2}, {2, 2}});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int s = 0; s < 100; ++s) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = n(rng);
    auto f = [&](const Eigen::VectorXd& v) {
      return phi.body.value(std::span<const double>(v.data(), 4), Conjunction::smooth);
    };
    const Eigen::VectorXd fd = oracle::central_gradient(f, x);
    const Eigen::VectorXd g = grad_boolean_robust(phi.body, std::span<const double>(x.data(), 4)).gradient;
    EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, fd.norm())) << "sample " << s;
  }
}

TEST(Gradient, BlocksSplitByAgent) {
  auto phi = parse_formula("G[0,1] (norm2(x1 - x2) <= 3)");
  std::vector<double> y{0.0, 1.0};
  auto rep = grad_boolean_robust(phi.body, y);
  ASSERT_EQ(rep.blocks.size(), 2u);
  EXPECT_EQ(rep.blocks[0].first, 1);
  EXPECT_EQ(rep.blocks[1].first, 2);
  EXPECT_NEAR(rep.blocks[0].second[0], 1.0, 1e-6);
  EXPECT_NEAR(rep.blocks[1].second[0], -1.0, 1e-6);
  EXPECT_FALSE(rep.degenerate());
}

TEST(Temporal, ConstantSignal) {
  auto phi = formula(TemporalOp::always, {0, 8}, {}, identity_body());
  std::vector<double> rho(801, 3.0);
  EXPECT_DOUBLE_EQ(temporal_robustness(phi, rho, 0.01, 0.0), 3.0);
}

TEST(Temporal, RampEventually) {
  auto phi = parse_formula("F[0,8] (x1 - 5 >= 0)");
  Signal sig{0.0, 0.01, {}};
  for (int k = 0; k <= 1000; ++k) sig.samples.push_back(vec({k * 0.01}));
  EXPECT_NEAR(eval_temporal_robust(phi, sig, 0.0), 3.0, 0.01);
}

TEST(Temporal, WitnessTimes) {
  auto g = formula(TemporalOp::always, {1, 3}, {}, identity_body());
  auto f = formula(TemporalOp::eventually, {1, 3}, {}, identity_body());
  std::vector<double> rho{5, 4, 2, 6, 3, 9};
  auto wg = temporal_witness(g, rho, 1.0, 0.0);
  auto wf = temporal_witness(f, rho, 1.0, 0.0);
  EXPECT_EQ(wg.value, 2.0);
  EXPECT_EQ(wg.t, 2.0);
  EXPECT_EQ(wf.value, 6.0);
  EXPECT_EQ(wf.t, 3.0);
}

TEST(Temporal, EventuallyAlwaysMatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    std::vector<double> rho(400);
    for (auto& v : rho) v = n(rng);
    auto phi = formula(TemporalOp::eventually_always, {0.5, 1.7}, {0.2, 1.1}, identity_body());
    const double lib = temporal_robustness(phi, rho, 0.01, 0.0);
    EXPECT_DOUBLE_EQ(lib, oracle::temporal(oracle::Op::FG, 0.5, 1.7, 0.2, 1.1, rho, 0.01));
  }
}

TEST(Temporal, SatisfactionSign) {
  auto phi = parse_formula("G[0,2] (norm2(x1) <= 1)");
  Signal sig{0.0, 0.1, {}};
  for (int k = 0; k <= 20; ++k) sig.samples.push_back(vec({0.5 * std::sin(k * 0.1)}));
  EXPECT_GT(eval_temporal_robust(phi, sig, 0.0), 0.0);
  sig.samples[7] = vec({1.5});
  EXPECT_LT(eval_temporal_robust(phi, sig, 0.0), 0.0);
}

TEST(Temporal, ShortSignalThrows) {
  auto phi = formula(TemporalOp::always, {0, 8}, {}, identity_body());
  std::vector<double> rho(50, 1.0);
  EXPECT_THROW(temporal_robustness(phi, rho, 0.1, 0.0), PreconditionError);
}

TEST(Optimum, SingleBall) {
  auto phi = parse_formula("G[0,1] (norm2(x1 - 4) <= 10)");
  EXPECT_NEAR(rho_opt(phi.body).value, 10.0, 1e-8);
}

TEST(Optimum, QuadraticVertex) {
  auto phi = parse_formula("G[0,1] (sqnorm(x1 - 5) <= 10)");
  auto opt = rho_opt(phi.body);
  EXPECT_NEAR(opt.value, 10.0, 1e-12);
  EXPECT_NEAR(opt.argmax[0], 5.0, 1e-12);
}

TEST(Optimum, SmoothConjunctionAgainstGridSearch) {
  auto phi = parse_formula("G[0,1] (norm2(x1) <= 1 and norm2(x1 - 1) <= 1)");
  double best = -1e300;
  for (int k = -20000; k <= 30000; ++k) {
    const double x = k * 1e-4;
    best = std::max(best, phi.body.value(std::span<const double>(&x, 1), Conjunction::smooth));
  }
  EXPECT_NEAR(rho_opt(phi.body).value, best, 1e-7);
  EXPECT_NEAR(best, 0.5 - std::log(2.0), 1e-7);
}

TEST(Optimum, UnboundedBodyRejected) {
  auto phi = parse_formula("G[0,1] (x1 >= 2)");
  EXPECT_THROW(rho_opt(phi.body), PreconditionError);
}

TEST(Analysis, NegatedBallNotConcave) {
  auto phi = parse_formula("G[0,1] (not norm2(x1) <= 1 and norm2(x1) <= 3)");
  EXPECT_FALSE(analyze(phi.body).concave);
}

TEST(Analysis, RelativeTaskWellPosedModuloInvariance) {
  auto phi = parse_formula("G[0,1] (norm2(x1 - x2) <= 1)");
  auto a = analyze(phi.body);
  EXPECT_TRUE(a.well_posed);
  EXPECT_FALSE(a.well_posed_strict);
}
