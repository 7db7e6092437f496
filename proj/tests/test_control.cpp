#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "stlagc/control.hpp"
#include "stlagc/parser.hpp"
#include "stlagc/scenario.hpp"

using namespace stlagc;

namespace {

MultiAgentSystem integrators(int n) {
  std::vector<Agent> agents;
  for (int i = 1; i <= n; ++i) {
    Agent a;
    a.id = i;
    a.dynamics = SingleIntegrator{1, Eigen::MatrixXd::Zero(1, 0)};
    a.x0 = Eigen::VectorXd::Zero(1);
    agents.push_back(a);
  }
  return MultiAgentSystem(std::move(agents));
}

}  // namespace

TEST(Controller, HandEvaluatedScalarChain) {
  auto sys = integrators(1);
  Task task{1, parse_formula("G[0,1] (sqnorm(x1 - 5) <= 10)"), FunnelParams{4.0, 4.0, 0.0, 9.0, 0.5, 0.0}};
  FunnelController ctrl(sys, {task});
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 3.0);
  ControlWorkspace ws;
  Eigen::VectorXd u;
  ctrl.evaluate(0.0, x, u, ws);
  EXPECT_NEAR(ws.error[0].e_hat, -0.75, 1e-15);
  EXPECT_NEAR(ws.error[0].epsilon, -std::log(3.0), 1e-12);
  EXPECT_NEAR(ws.error[0].jacobian, 1.0 / 0.75, 1e-12);
  EXPECT_NEAR(u[0], -4.0 * (1.0 / 0.75) * -std::log(3.0), 1e-12);
  EXPECT_NEAR(u[0], 5.859, 1e-3);
}

TEST(Controller, ZeroAtFunnelMidpoint) {
  auto sys = integrators(2);
  auto phi1 = parse_formula("G[0,1] (norm2(x1 - x2) <= 3)");
  auto phi2 = parse_formula("G[0,1] (norm2(x2 - 1) <= 3)");
  Eigen::VectorXd x(2);
  x << 0.0, 0.0;
  std::vector<double> y1{0.0, 0.0};
  std::vector<double> y2{0.0};
  const double r1 = phi1.body.value(y1, Conjunction::smooth);
  const double r2 = phi2.body.value(y2, Conjunction::smooth);
  // rho_max - gamma / 2 = rho places e_hat at -0.5
  FunnelParams f1{2.0, 2.0, 0.0, r1 + 1.0, 0.1, 0.0};
  FunnelParams f2{2.0, 2.0, 0.0, r2 + 1.0, 0.1, 0.0};
  FunnelController ctrl(sys, {{1, phi1, f1}, {2, phi2, f2}});
  const Eigen::VectorXd u = ctrl.control_input(0.0, x);
  EXPECT_NEAR(u[0], 0.0, 1e-12);
  EXPECT_NEAR(u[1], 0.0, 1e-12);
}

TEST(Controller, RobotCouplingStructure) {
  auto sys = build_robot_network();
  std::vector<Task> tasks;
  const auto texts = robot_network_tasks();
  for (int i = 1; i <= 5; ++i) {
    auto phi = parse_formula(texts[static_cast<std::size_t>(i - 1)], sys.dimensions());
    tasks.push_back({i, phi, FunnelParams{50.0, 50.0, 0.0, 1.0, 0.1, 0.0}});
  }
  FunnelController ctrl(sys, tasks);
  const Eigen::VectorXd x = sys.initial_state();
  ControlWorkspace ws;
  Eigen::VectorXd u;
  ctrl.evaluate(0.0, x, u, ws);
  // agent 2 input is driven by tasks 1 and 2 only: dropping task 3 leaves it unchanged
  std::vector<Task> without3 = tasks;
  without3[2].funnel = FunnelParams{2.0 * (1.0 - ws.rho[2]), 2.0 * (1.0 - ws.rho[2]), 0.0, 1.0, 0.1, 0.0};
  FunnelController ctrl2(sys, without3);
  const Eigen::VectorXd u2 = ctrl2.control_input(0.0, x);
  EXPECT_LE((u.segment(3, 3) - u2.segment(3, 3)).norm(), 1e-12);
  EXPECT_GT((u.segment(6, 3) - u2.segment(6, 3)).norm(), 0.0);
}

TEST(Controller, LocalityToCluster) {
  auto sys = build_robot_network();
  std::vector<Task> tasks;
  const auto texts = robot_network_tasks();
  for (int i = 1; i <= 5; ++i)
    tasks.push_back({i, parse_formula(texts[static_cast<std::size_t>(i - 1)], sys.dimensions()),
                     FunnelParams{60.0, 60.0, 0.0, 1.0, 0.1, 0.0}});
  FunnelController ctrl(sys, tasks);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 0.5);
  for (int s = 0; s < 20; ++s) {
    Eigen::VectorXd x = sys.initial_state();
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += n(rng);
    const Eigen::VectorXd u = ctrl.control_input(0.0, x);
    Eigen::VectorXd moved = x;
    moved.segment(9, 6) += Eigen::VectorXd::Constant(6, 0.37);
    const Eigen::VectorXd v = ctrl.control_input(0.0, moved);
    EXPECT_TRUE((u.segment(0, 9).array() == v.segment(0, 9).array()).all());
  }
}

TEST(Controller, UnknownAgentRejected) {
  auto sys = integrators(1);
  Task task{1, parse_formula("G[0,1] (norm2(x1 - x2) <= 1)"), FunnelParams{}};
  EXPECT_THROW(FunnelController(sys, {task}), PreconditionError);
}

TEST(Assumptions, WellPosedBallsPass) {
  auto sys = integrators(2);
  std::vector<TemporalFormula> f{parse_formula("F[0,5] (norm2(x1 - 1) <= 1)"), parse_formula("F[0,5] (norm2(x2 - x1) <= 1)")};
  auto topo = build_topology(f, sys.interconnection(), {{1, 2}});
  auto rep = validate_assumptions(sys, f, topo, {1.0, 1.0});
  EXPECT_TRUE(rep.pass());
}

TEST(Assumptions, TaskCycleFails) {
  auto sys = integrators(2);
  std::vector<TemporalFormula> f{parse_formula("F[0,5] (norm2(x1 - x2) <= 1)"), parse_formula("F[0,5] (norm2(x2 - x1) <= 1)")};
  auto topo = build_topology(f, sys.interconnection(), {{1, 2}});
  auto rep = validate_assumptions(sys, f, topo, {1.0, 1.0});
  EXPECT_FALSE(rep.pass());
  bool found = false;
  for (const auto& c : rep.checks) found = found || (c.name == "task_graph_acyclic" && !c.pass);
  EXPECT_TRUE(found);
}

TEST(Assumptions, LinearOnlyBodyNotWellPosed) {
  auto sys = integrators(1);
  std::vector<TemporalFormula> f{parse_formula("F[0,5] (x1 >= 1)")};
  auto topo = build_topology(f, sys.interconnection(), {});
  auto rep = validate_assumptions(sys, f, topo, {1.0});
  bool found = false;
  for (const auto& c : rep.checks) found = found || (c.name == "well_posed" && !c.pass);
  EXPECT_TRUE(found);
}

TEST(Assumptions, TasksMustStayInCluster) {
  auto sys = integrators(2);
  ClusterPartition p = maximal_clusters(Digraph(2));
  Task t{1, parse_formula("F[0,5] (norm2(x1 - x2) <= 1)"), FunnelParams{}};
  EXPECT_THROW(check_tasks_within_clusters({t}, p), PreconditionError);
}
