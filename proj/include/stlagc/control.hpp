#pragma once

// Closed-form funnel controller
//
//   u_i = -g_i(x_i)^T  sum_{j in cluster} d rho_j / d x_i  J_j  eps_j
//
// and validators for the hypotheses it relies on.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stlagc/errors.hpp"
#include "stlagc/funnel.hpp"
#include "stlagc/plant.hpp"
#include "stlagc/stl.hpp"
#include "stlagc/topology.hpp"

namespace stlagc {

/// Task of one agent together with its funnel.
struct Task {
  int owner = 0;
  TemporalFormula formula;
  FunnelParams funnel;
};

/// Scratch buffers and per-task outputs of one controller evaluation.
struct ControlWorkspace {
  std::vector<double> y;
  std::vector<double> grad;
  Eigen::VectorXd v;
  std::vector<double> rho;  // smooth body robustness per task
  std::vector<ErrorState> error;
  std::vector<char> degenerate;  // own-agent gradient block below the floor
};

class FunnelController {
 public:
  FunnelController(const MultiAgentSystem& sys, std::vector<Task> tasks) : sys_(&sys), tasks_(std::move(tasks)) {
    positions_.reserve(tasks_.size());
    own_.reserve(tasks_.size());
    for (const auto& task : tasks_) {
      std::vector<Eigen::Index> pos;
      std::vector<int> own;
      for (std::size_t k = 0; k < task.formula.body.support().size(); ++k) {
        const auto& ref = task.formula.body.support()[k];
        if (ref.agent < 1 || ref.agent > sys.size())
          throw PreconditionError("task of agent " + std::to_string(task.owner) + " references unknown agent " +
                                  std::to_string(ref.agent));
        if (ref.index < 0 || ref.index >= sys.state_dim(ref.agent))
          throw DimensionError("task of agent " + std::to_string(task.owner) + " reads state index " +
                               std::to_string(ref.index + 1) + " of agent " + std::to_string(ref.agent));
        pos.push_back(sys.state_offset(ref.agent) + ref.index);
        if (ref.agent == task.owner) own.push_back(static_cast<int>(k));
      }
      positions_.push_back(std::move(pos));
      own_.push_back(std::move(own));
    }
  }

  const std::vector<Task>& tasks() const noexcept { return tasks_; }
  const MultiAgentSystem& system() const noexcept { return *sys_; }

  /// Global positions of the support entries of task k.
  const std::vector<Eigen::Index>& positions(std::size_t k) const { return positions_[k]; }

  /// Smooth body robustness of task k at stacked state x.
  double body_value(std::size_t k, const Eigen::VectorXd& x, std::vector<double>& y) const {
    gather(k, x, y);
    return tasks_[k].formula.body.value(y, Conjunction::smooth);
  }

  /// Stacked input for every agent at (t, x); per-task quantities land in ws.
  void evaluate(double t, const Eigen::VectorXd& x, Eigen::VectorXd& u, ControlWorkspace& ws) const {
    const auto n = sys_->state_dim();
    if (x.size() != n) throw DimensionError("controller: state dimension mismatch");
    ws.v.setZero(n);
    ws.rho.resize(tasks_.size());
    ws.error.resize(tasks_.size());
    ws.degenerate.assign(tasks_.size(), 0);
    for (std::size_t k = 0; k < tasks_.size(); ++k) {
      gather(k, x, ws.y);
      ws.grad.resize(ws.y.size());
      const double rho = tasks_[k].formula.body.value_and_gradient(ws.y, ws.grad);
      const ErrorState es = error_chain(rho, tasks_[k].funnel, t);
      ws.rho[k] = rho;
      ws.error[k] = es;
      double own_sq = 0.0;
      for (int idx : own_[k]) own_sq += ws.grad[static_cast<std::size_t>(idx)] * ws.grad[static_cast<std::size_t>(idx)];
      ws.degenerate[k] = std::sqrt(own_sq) < kGradientFloor;
      const double gain = es.jacobian * es.epsilon;
      const auto& pos = positions_[k];
      for (std::size_t j = 0; j < pos.size(); ++j) ws.v[pos[j]] += ws.grad[j] * gain;
    }
    u.resize(sys_->input_dim());
    for (int id = 1; id <= sys_->size(); ++id) {
      double* ui = u.data() + sys_->input_offset(id);
      sys_->input_transpose(id, x.data(), ws.v.data() + sys_->state_offset(id), ui);
      for (int m = 0; m < sys_->input_dim(id); ++m) ui[m] = -ui[m];
    }
  }

  Eigen::VectorXd control_input(double t, const Eigen::VectorXd& x) const {
    ControlWorkspace ws;
    Eigen::VectorXd u;
    evaluate(t, x, u, ws);
    return u;
  }

 private:
  void gather(std::size_t k, const Eigen::VectorXd& x, std::vector<double>& y) const {
    const auto& pos = positions_[k];
    y.resize(pos.size());
    for (std::size_t j = 0; j < pos.size(); ++j) y[j] = x[pos[j]];
  }

  const MultiAgentSystem* sys_;
  std::vector<Task> tasks_;
  std::vector<std::vector<Eigen::Index>> positions_;
  std::vector<std::vector<int>> own_;
};

/// Task of agent k occupies slot k-1; every cluster member's task must stay
/// inside its cluster.
inline void check_tasks_within_clusters(const std::vector<Task>& tasks, const ClusterPartition& partition) {
  for (const auto& task : tasks) {
    const int c = partition.cluster(task.owner);
    for (int j : task.formula.agents)
      if (partition.cluster(j) != c)
        throw PreconditionError("task of agent " + std::to_string(task.owner) + " spans clusters (agent " +
                                std::to_string(j) + ")");
  }
}

struct AssumptionCheck {
  std::string name;
  int agent = 0;
  bool pass = true;
  bool warning_only = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  std::vector<std::string> warnings;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass || c.warning_only; });
  }
};

/// Concavity / well-posedness of every body, positive rho_opt with a nonzero
/// own-agent gradient, g g^T positive definite on sampled states, and an
/// acyclic task graph.
inline AssumptionReport validate_assumptions(const MultiAgentSystem& sys, const std::vector<TemporalFormula>& formulas,
                                             const CompositionTopology& topo, const std::vector<double>& rho_opt,
                                             int samples = 100, unsigned seed = 7) {
  AssumptionReport rep;
  const Eigen::VectorXd x0 = sys.initial_state();
  for (std::size_t k = 0; k < formulas.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    const auto& body = formulas[k].body;
    const BodyAnalysis info = analyze(body);
    rep.checks.push_back({"concave_predicates", id, info.concave, false, info.concave ? "" : info.detail});
    std::string wp = info.well_posed_strict ? "bounded superlevel sets"
                                            : info.well_posed ? "bounded modulo directions the body ignores" : info.detail;
    rep.checks.push_back({"well_posed", id, info.well_posed, false, wp});
    const double opt = k < rho_opt.size() ? rho_opt[k] : std::nan("");
    rep.checks.push_back({"rho_opt_positive", id, opt > 0.0, false, "rho_opt = " + std::to_string(opt)});

    std::vector<double> y;
    for (const auto& ref : body.support()) y.push_back(x0[sys.state_offset(ref.agent) + ref.index]);
    const GradientReport g = grad_boolean_robust(body, y);
    bool own_ok = false;
    for (const auto& [agent, block] : g.blocks)
      if (agent == id) own_ok = block.norm() >= kGradientFloor;
    AssumptionCheck own{"own_gradient_nonzero", id, own_ok, true,
                        own_ok ? "" : "d rho / d x_i vanishes at x(0)"};
    if (!own_ok) rep.warnings.push_back("agent " + std::to_string(id) + ": own gradient block vanishes at x(0)");
    rep.checks.push_back(own);
  }

  std::mt19937_64 rng(seed);
  for (const auto& a : sys.agents()) {
    const int n = state_dim(a.dynamics);
    double worst = std::numeric_limits<double>::infinity();
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    for (int s = 0; s <= samples; ++s) {
      Eigen::VectorXd x = a.x0;
      if (s > 0) {
        for (int i = 0; i < n; ++i) x[i] += noise(rng);
        if (std::holds_alternative<OmniRobot>(a.dynamics)) x[2] = angle(rng);
      }
      const Eigen::MatrixXd g = input_matrix(a.dynamics, x);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g * g.transpose(), Eigen::EigenvaluesOnly);
      worst = std::min(worst, eig.eigenvalues().minCoeff());
    }
    rep.checks.push_back({"input_gain_positive_definite", a.id, worst > 0.0, false,
                          "min eigenvalue of g g^T = " + std::to_string(worst)});
  }

  const TopologyReport t = check_assumptions(topo);
  std::string cycle;
  for (int v : t.task_cycle) cycle += (cycle.empty() ? "" : " -> ") + std::to_string(v);
  rep.checks.push_back({"task_graph_acyclic", 0, t.task_acyclic, false, t.task_acyclic ? "" : "cycle " + cycle});
  return rep;
}

}  // namespace stlagc
