#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stlagc/parser.hpp"
#include "stlagc/plant.hpp"
#include "stlagc/scenario.hpp"
#include "stlagc/topology.hpp"

using namespace stlagc;

namespace {

std::vector<TemporalFormula> parse_all(const std::vector<std::string>& texts, const AgentDimensions& dims = {}) {
  std::vector<TemporalFormula> out;
  for (const auto& t : texts) out.push_back(parse_formula(t, dims));
  return out;
}

std::vector<TemporalFormula> example_tasks() {
  return parse_all({"G[0,10] (norm2(x1 - x2) <= 3)", "F[0,5] (norm2(x2 - 1) <= 1)", "G[0,5] (norm2(x3) <= 1)"});
}

}  // namespace

TEST(TaskGraph, CollaborativeTaskAddsEdge) {
  auto g = build_task_graph(example_tasks());
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{1, 2}}));
}

TEST(TaskGraph, NonCollaborativeIsEmpty) {
  auto g = build_task_graph(parse_all({"G[0,1] (x1 <= 1)", "G[0,1] (x2 <= 1)"}));
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(TaskGraph, ChainOfCollaborations) {
  auto g = build_task_graph(parse_all({"G[0,10] (norm2(x1 - x2) <= 3)", "F[0,5] (norm2(x2 - x3) <= 1)",
                                       "G[0,5] (norm2(x3) <= 1)"}));
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{1, 2}, {2, 3}}));
}

TEST(Clusters, Example) {
  auto p = maximal_clusters(build_task_graph(example_tasks()));
  EXPECT_EQ(p.clusters, (std::vector<std::vector<int>>{{1, 2}, {3}}));
}

TEST(Clusters, EmptyGraphSingletons) {
  auto p = maximal_clusters(Digraph(4));
  EXPECT_EQ(p.size(), 4u);
}

TEST(Clusters, RobotNetwork) {
  const auto sys = build_robot_network();
  auto formulas = parse_all(robot_network_tasks(), sys.dimensions());
  auto p = maximal_clusters(build_task_graph(formulas));
  EXPECT_EQ(p.clusters, (std::vector<std::vector<int>>{{1, 2, 3}, {4, 5}}));
  auto q = cluster_interconnection(p, sys.interconnection());
  EXPECT_FALSE(q.acyclic);
  EXPECT_TRUE(q.graph.has_edge(1, 2));
  EXPECT_TRUE(q.graph.has_edge(2, 1));
}

TEST(ClusterGraph, SingleEdgeAcyclic) {
  ClusterPartition p = maximal_clusters(Digraph(2));
  Digraph ic(2);
  ic.add_edge(1, 2);
  auto q = cluster_interconnection(p, ic);
  EXPECT_TRUE(q.acyclic);
  EXPECT_TRUE(q.cycle.empty());
}

TEST(ClusterGraph, RoomRingCyclic) {
  const auto sys = build_room_building(10);
  auto formulas = parse_all(room_building_tasks(10));
  auto t = build_topology(formulas, sys.interconnection(), {});
  EXPECT_FALSE(t.clusters.acyclic);
  EXPECT_GE(t.clusters.cycle.size(), 2u);
}

TEST(Assumptions, CommunicationCoversTasks) {
  Digraph ic(3);
  CommunicationGraph comm{{1, 2}};
  auto r = check_assumptions(build_topology(example_tasks(), ic, comm));
  EXPECT_TRUE(r.task_within_communication);
  EXPECT_TRUE(r.pass());
}

TEST(Assumptions, MissingCommunicationListed) {
  auto r = check_assumptions(build_topology(example_tasks(), Digraph(3), {}));
  EXPECT_FALSE(r.task_within_communication);
  EXPECT_EQ(r.missing_communication, (std::vector<Edge>{{1, 2}}));
}

TEST(Assumptions, TwoCycleInTaskGraph) {
  auto f = parse_all({"G[0,1] (norm2(x1 - x2) <= 1)", "G[0,1] (norm2(x2 - x1) <= 1)"});
  auto r = check_assumptions(build_topology(f, Digraph(2), {{1, 2}}));
  EXPECT_FALSE(r.task_acyclic);
  EXPECT_EQ(r.task_cycle.size(), 2u);
}

TEST(Assumptions, AdversarialInsideCluster) {
  Digraph ic(3);
  ic.add_edge(2, 1);
  auto r = check_assumptions(build_topology(example_tasks(), ic, {{1, 2}}));
  EXPECT_FALSE(r.adversarial_outside_cluster);
  EXPECT_EQ(r.adversarial_in_cluster, (std::vector<Edge>{{2, 1}}));
}

TEST(Digraph, SelfLoopIsCycle) {
  Digraph g(3);
  g.add_edge(2, 2);
  auto c = find_cycle(g);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, std::vector<int>{2});
}

TEST(Digraph, CycleAgreesWithKahn) {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 200; ++s) {
    std::uniform_int_distribution<int> size(1, 12);
    const int n = size(rng);
    std::uniform_int_distribution<int> v(1, n);
    std::uniform_int_distribution<int> m(0, 2 * n);
    Digraph g(n);
    std::vector<std::pair<int, int>> edges;
    const int count = m(rng);
    for (int k = 0; k < count; ++k) {
      const int a = v(rng);
      const int b = v(rng);
      if (!g.has_edge(a, b)) {
        g.add_edge(a, b);
        edges.emplace_back(a, b);
      }
    }
    auto cycle = find_cycle(g);
    ASSERT_EQ(!cycle.has_value(), oracle::acyclic_kahn(n, edges)) << "graph " << s;
    if (cycle) {
      for (std::size_t k = 0; k < cycle->size(); ++k)
        EXPECT_TRUE(g.has_edge((*cycle)[k], (*cycle)[(k + 1) % cycle->size()]));
    }
  }
}

TEST(Clusters, PartitionMatchesUnionFind) {
  std::mt19937_64 rng(9);
  for (int s = 0; s < 100; ++s) {
    const int n = 15;
    std::uniform_int_distribution<int> v(1, n);
    Digraph g(n);
    std::vector<std::pair<int, int>> edges;
    for (int k = 0; k < 10; ++k) {
      const int a = v(rng);
      const int b = v(rng);
      if (a != b && !g.has_edge(a, b)) {
        g.add_edge(a, b);
        edges.emplace_back(a, b);
      }
    }
    auto p = maximal_clusters(g);
    auto label = oracle::components(n, edges);
    for (int a = 1; a <= n; ++a)
      for (int b = 1; b <= n; ++b)
        EXPECT_EQ(p.cluster(a) == p.cluster(b), label[static_cast<std::size_t>(a)] == label[static_cast<std::size_t>(b)]);
  }
}

TEST(ClusterGraph, QuotientSoundness) {
  std::mt19937_64 rng(21);
  for (int s = 0; s < 50; ++s) {
    const int n = 12;
    std::uniform_int_distribution<int> v(1, n);
    Digraph task(n);
    Digraph ic(n);
    for (int k = 0; k < 6; ++k) {
      const int a = v(rng);
      const int b = v(rng);
      if (a != b) task.add_edge(a, b);
    }
    for (int k = 0; k < 10; ++k) {
      const int a = v(rng);
      const int b = v(rng);
      if (a != b) ic.add_edge(a, b);
    }
    auto p = maximal_clusters(task);
    auto q = cluster_interconnection(p, ic);
    for (const auto& [cj, ci] : q.graph.edges()) {
      bool found = false;
      for (const auto& [j, i] : ic.edges()) found = found || (p.cluster(j) + 1 == cj && p.cluster(i) + 1 == ci);
      EXPECT_TRUE(found);
    }
    for (const auto& [j, i] : ic.edges())
      if (p.cluster(j) != p.cluster(i)) {
        EXPECT_TRUE(q.graph.has_edge(p.cluster(j) + 1, p.cluster(i) + 1));
      }
  }
}
