#pragma once

// Task dependency, interconnection and communication graphs; maximal
// dependency clusters and the cluster interconnection (quotient) graph.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stlagc/errors.hpp"
#include "stlagc/stl.hpp"

namespace stlagc {

using Edge = std::pair<int, int>;

/// Directed graph on vertices 1..n with sorted adjacency lists.
class Digraph {
 public:
  Digraph() = default;
  explicit Digraph(int n) : out_(static_cast<std::size_t>(std::max(n, 0))) {}

  int size() const noexcept { return static_cast<int>(out_.size()); }

  void add_edge(int from, int to) {
    check(from);
    check(to);
    auto& succ = out_[static_cast<std::size_t>(from - 1)];
    auto it = std::lower_bound(succ.begin(), succ.end(), to);
    if (it == succ.end() || *it != to) succ.insert(it, to);
  }

  bool has_edge(int from, int to) const {
    if (from < 1 || from > size()) return false;
    const auto& succ = out_[static_cast<std::size_t>(from - 1)];
    return std::binary_search(succ.begin(), succ.end(), to);
  }

  const std::vector<int>& successors(int v) const {
    check(v);
    return out_[static_cast<std::size_t>(v - 1)];
  }

  std::vector<int> predecessors(int v) const {
    check(v);
    std::vector<int> in;
    for (int u = 1; u <= size(); ++u)
      if (has_edge(u, v)) in.push_back(u);
    return in;
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> all;
    for (int u = 1; u <= size(); ++u)
      for (int v : out_[static_cast<std::size_t>(u - 1)]) all.emplace_back(u, v);
    return all;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& succ : out_) n += succ.size();
    return n;
  }

  /// In-degree of every vertex, index v-1.
  std::vector<int> in_degrees() const {
    std::vector<int> deg(out_.size(), 0);
    for (const auto& succ : out_)
      for (int v : succ) ++deg[static_cast<std::size_t>(v - 1)];
    return deg;
  }

 private:
  void check(int v) const {
    if (v < 1 || v > size())
      throw PreconditionError("vertex " + std::to_string(v) + " outside 1.." + std::to_string(size()));
  }

  std::vector<std::vector<int>> out_;
};

/// Edge (i, j) for every agent j other than i that the task of agent i reads.
/// `formulas[i-1]` is the task of agent i.
inline Digraph build_task_graph(const std::vector<TemporalFormula>& formulas) {
  const int n = static_cast<int>(formulas.size());
  Digraph g(n);
  for (int i = 1; i <= n; ++i) {
    for (int j : formulas[static_cast<std::size_t>(i - 1)].agents) {
      if (j < 1 || j > n)
        throw PreconditionError("task of agent " + std::to_string(i) + " references unknown agent " +
                                std::to_string(j));
      if (j != i) g.add_edge(i, j);
    }
  }
  return g;
}

/// Maximal dependency clusters: components of the undirected task graph,
/// ordered by smallest member, members ascending.
struct ClusterPartition {
  std::vector<std::vector<int>> clusters;
  std::vector<int> cluster_of;  // cluster_of[v-1] is the 0-based cluster of agent v

  std::size_t size() const noexcept { return clusters.size(); }
  int cluster(int agent) const { return cluster_of.at(static_cast<std::size_t>(agent - 1)); }
};

inline ClusterPartition maximal_clusters(const Digraph& task) {
  const int n = task.size();
  std::vector<std::vector<int>> undirected(static_cast<std::size_t>(n));
  for (const auto& [u, v] : task.edges()) {
    undirected[static_cast<std::size_t>(u - 1)].push_back(v);
    undirected[static_cast<std::size_t>(v - 1)].push_back(u);
  }
  ClusterPartition p;
  p.cluster_of.assign(static_cast<std::size_t>(n), -1);
  for (int s = 1; s <= n; ++s) {
    if (p.cluster_of[static_cast<std::size_t>(s - 1)] >= 0) continue;
    const int id = static_cast<int>(p.clusters.size());
    std::vector<int> members{s};
    p.cluster_of[static_cast<std::size_t>(s - 1)] = id;
    for (std::size_t k = 0; k < members.size(); ++k) {
      for (int v : undirected[static_cast<std::size_t>(members[k] - 1)]) {
        if (p.cluster_of[static_cast<std::size_t>(v - 1)] >= 0) continue;
        p.cluster_of[static_cast<std::size_t>(v - 1)] = id;
        members.push_back(v);
      }
    }
    std::sort(members.begin(), members.end());
    p.clusters.push_back(std::move(members));
  }
  return p;
}

/// Some directed cycle of `g` of minimal length among those closed by a DFS
/// back edge, as a vertex sequence (first vertex not repeated).
inline std::optional<std::vector<int>> find_cycle(const Digraph& g) {
  const int n = g.size();
  enum Color : unsigned char { white, grey, black };
  std::vector<Color> color(static_cast<std::size_t>(n), white);
  std::vector<int> depth(static_cast<std::size_t>(n), 0);
  std::optional<std::vector<int>> best;
  std::vector<int> path;
  std::vector<std::pair<int, std::size_t>> stack;  // vertex, next successor slot
  for (int root = 1; root <= n; ++root) {
    if (color[static_cast<std::size_t>(root - 1)] != white) continue;
    stack.emplace_back(root, 0);
    path.push_back(root);
    color[static_cast<std::size_t>(root - 1)] = grey;
    while (!stack.empty()) {
      auto& [u, slot] = stack.back();
      const auto& succ = g.successors(u);
      if (slot == succ.size()) {
        color[static_cast<std::size_t>(u - 1)] = black;
        stack.pop_back();
        path.pop_back();
        continue;
      }
      const int v = succ[slot++];
      const auto vi = static_cast<std::size_t>(v - 1);
      if (color[vi] == grey) {
        const auto start = static_cast<std::size_t>(depth[vi]);
        if (!best || path.size() - start < best->size()) best = std::vector<int>(path.begin() + static_cast<std::ptrdiff_t>(start), path.end());
      } else if (color[vi] == white) {
        color[vi] = grey;
        depth[vi] = static_cast<int>(path.size());
        path.push_back(v);
        stack.emplace_back(v, 0);
      }
    }
  }
  return best;
}

/// Quotient of the interconnection graph by the partition (vertex k+1 is
/// cluster k), self-edges dropped.
struct ClusterGraph {
  Digraph graph;
  bool acyclic = true;
  std::vector<int> cycle;  // 1-based cluster indices, empty when acyclic
};

inline ClusterGraph cluster_interconnection(const ClusterPartition& partition, const Digraph& interconnection) {
  if (static_cast<int>(partition.cluster_of.size()) != interconnection.size())
    throw PreconditionError("partition does not cover every vertex of the interconnection graph");
  ClusterGraph out;
  out.graph = Digraph(static_cast<int>(partition.size()));
  for (const auto& [j, i] : interconnection.edges()) {
    const int cj = partition.cluster(j);
    const int ci = partition.cluster(i);
    if (cj != ci) out.graph.add_edge(cj + 1, ci + 1);
  }
  if (auto c = find_cycle(out.graph)) {
    out.acyclic = false;
    out.cycle = std::move(*c);
  }
  return out;
}

/// Undirected communication graph stored as normalized pairs (min, max).
using CommunicationGraph = std::set<Edge>;

inline Edge undirected_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Everything the composition results need to know about the graphs.
struct CompositionTopology {
  Digraph task;
  /// Edge (j, i) when j is an adversarial neighbor of i.
  Digraph interconnection;
  CommunicationGraph communication;
  ClusterPartition partition;
  ClusterGraph clusters;

  int agent_count() const noexcept { return task.size(); }

  /// Adversarial neighbors of agent i, ascending.
  std::vector<int> adversarial_neighbors(int i) const { return interconnection.predecessors(i); }
};

inline CompositionTopology build_topology(const std::vector<TemporalFormula>& formulas, Digraph interconnection,
                                          CommunicationGraph communication) {
  if (interconnection.size() != static_cast<int>(formulas.size()))
    throw PreconditionError("interconnection graph and task list disagree on the number of agents");
  for (const auto& [u, v] : interconnection.edges())
    if (u == v) throw PreconditionError("agent " + std::to_string(u) + " listed as its own adversarial neighbor");
  CompositionTopology t;
  t.task = build_task_graph(formulas);
  t.interconnection = std::move(interconnection);
  t.communication = std::move(communication);
  t.partition = maximal_clusters(t.task);
  t.clusters = cluster_interconnection(t.partition, t.interconnection);
  return t;
}

struct TopologyReport {
  bool task_within_communication = true;     // task graph contained in the communication graph
  std::vector<Edge> missing_communication;   // task edges without a communication link
  bool task_acyclic = true;                  // task dependency graph is a DAG
  std::vector<int> task_cycle;
  bool adversarial_outside_cluster = true;   // no adversarial neighbor is a cluster co-member
  std::vector<Edge> adversarial_in_cluster;  // (j, i): j adversarial to i, same cluster
  std::vector<int> initial_agents;           // no adversarial neighbors
  std::vector<int> initial_clusters;         // 1-based, no incoming quotient edges

  bool pass() const noexcept { return task_within_communication && task_acyclic && adversarial_outside_cluster; }
};

inline TopologyReport check_assumptions(const CompositionTopology& t) {
  TopologyReport r;
  for (const auto& [i, j] : t.task.edges()) {
    if (!t.communication.count(undirected_edge(i, j))) {
      r.task_within_communication = false;
      r.missing_communication.emplace_back(i, j);
    }
  }
  if (auto c = find_cycle(t.task)) {
    r.task_acyclic = false;
    r.task_cycle = std::move(*c);
  }
  for (const auto& [j, i] : t.interconnection.edges()) {
    if (t.partition.cluster(i) == t.partition.cluster(j)) {
      r.adversarial_outside_cluster = false;
      r.adversarial_in_cluster.emplace_back(j, i);
    }
  }
  const auto deg = t.interconnection.in_degrees();
  for (int v = 1; v <= t.interconnection.size(); ++v)
    if (deg[static_cast<std::size_t>(v - 1)] == 0) r.initial_agents.push_back(v);
  const auto qdeg = t.clusters.graph.in_degrees();
  for (int k = 1; k <= t.clusters.graph.size(); ++k)
    if (qdeg[static_cast<std::size_t>(k - 1)] == 0) r.initial_clusters.push_back(k);
  return r;
}

}  // namespace stlagc
