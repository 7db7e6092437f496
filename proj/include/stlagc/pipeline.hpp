#pragma once

// End-to-end pipeline behind the CLI: design, certify, simulate, monitor.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stlagc/contracts.hpp"
#include "stlagc/control.hpp"
#include "stlagc/funnel.hpp"
#include "stlagc/parser.hpp"
#include "stlagc/scenario.hpp"
#include "stlagc/sim.hpp"
#include "stlagc/topology.hpp"

namespace stlagc {

/// Robustness tolerance of the run exit criterion.
inline constexpr double kRobustnessTolerance = 1e-6;

struct Design {
  std::vector<TemporalFormula> formulas;
  CompositionTopology topology;
  TopologyReport topology_report;
  std::vector<double> rho0;     // smooth body robustness at x(0)
  std::vector<double> rho_opt;  // maximum of the smooth body robustness
  std::vector<FunnelDesign> funnels;
  std::vector<Task> tasks;
  AssumptionReport assumptions;
  std::vector<Contract> contracts;
  CompositionCertificate certificate;
  std::vector<std::string> errors;

  bool designed() const { return errors.empty() && tasks.size() == formulas.size(); }
  bool pass() const { return designed() && topology_report.pass() && assumptions.pass() && certificate.pass(); }
};

inline Design prepare(const Scenario& sc) {
  Design d;
  const auto& sys = sc.system;
  const auto dims = sys.dimensions();
  for (std::size_t k = 0; k < sc.tasks.size(); ++k) {
    try {
      d.formulas.push_back(parse_formula(sc.tasks[k].formula, dims));
    } catch (const ParseError& e) {
      throw ScenarioError("/tasks/" + std::to_string(k) + "/formula", e.what());
    }
    for (const auto& ref : d.formulas.back().body.support())
      if (ref.agent > sys.size())
        throw ScenarioError("/tasks/" + std::to_string(k) + "/formula",
                            "references unknown agent " + std::to_string(ref.agent));
  }
  d.topology = build_topology(d.formulas, sys.interconnection(), sc.communication);
  d.topology_report = check_assumptions(d.topology);

  const Eigen::VectorXd x0 = sys.initial_state();
  const std::size_t n = d.formulas.size();
  d.rho0.resize(n);
  d.rho_opt.assign(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> y;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& body = d.formulas[k].body;
    y.clear();
    for (const auto& ref : body.support()) y.push_back(x0[sys.state_offset(ref.agent) + ref.index]);
    d.rho0[k] = body.value(y, Conjunction::smooth);
    try {
      d.rho_opt[k] = rho_opt(body).value;
    } catch (const Error& e) {
      d.errors.push_back("agent " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  d.assumptions = validate_assumptions(sys, d.formulas, d.topology, d.rho_opt);

  for (std::size_t k = 0; k < n && d.errors.empty(); ++k) {
    try {
      d.funnels.push_back(
          design_funnel_detailed(d.formulas[k], d.rho0[k], d.rho_opt[k], std::nullopt, sc.tasks[k].overrides));
    } catch (const DesignError& e) {
      d.errors.push_back("agent " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  if (!d.errors.empty()) return d;
  for (std::size_t k = 0; k < n; ++k)
    d.tasks.push_back({static_cast<int>(k) + 1, d.formulas[k], d.funnels[k].params});
  check_tasks_within_clusters(d.tasks, d.topology.partition);
  d.contracts = encode_contracts(d.tasks, d.topology);
  d.certificate = check_composition(d.contracts, d.topology, d.rho0);
  return d;
}

struct RunOptions {
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<int> stride;
  std::optional<double> eps;
  std::optional<double> delta;
};

struct TaskOutcome {
  int agent = 0;
  double robustness = 0.0;  // exact-mode rho^phi(x, 0) on the recorded grid
  double r = 0.0;
  double witness_t = 0.0;
  bool satisfied = false;
};

struct Evaluation {
  std::vector<TaskOutcome> outcomes;
  std::vector<Verdict> weak;
  std::vector<Verdict> strong;
  std::vector<Verdict> expanded;  // weak verdicts on eps-expanded assumptions
  bool global_guarantee = false;
  CompositionCertificate certificate;
  double eps = 0.0;
  double delta = 0.0;

  bool pass() const {
    auto ok = [](const std::vector<Verdict>& vs) {
      return std::all_of(vs.begin(), vs.end(), [](const Verdict& v) { return v.satisfied; });
    };
    const bool tasks_ok =
        std::all_of(outcomes.begin(), outcomes.end(), [](const TaskOutcome& o) { return o.satisfied; });
    return tasks_ok && certificate.pass() && ok(weak) && ok(strong) && ok(expanded);
  }
};

struct RunResult {
  Design design;
  Trajectory trajectory;
  Evaluation evaluation;
  double wall_seconds = 0.0;

  bool pass() const { return evaluation.pass() && trajectory.clamp_events == 0; }
};

inline double default_eps(const Design& d) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : d.tasks) m = std::min(m, t.funnel.gamma_inf);
  return 0.05 * m;
}

/// 10 integration steps, rounded up to a whole number of recorded steps.
inline double default_delta(double dt, double recorded_dt) {
  const double want = 10.0 * dt;
  const double steps = std::max(1.0, std::ceil(want / recorded_dt - 1e-9));
  return steps * recorded_dt;
}

inline void require_coverage(const Design& d, double horizon) {
  for (const auto& t : d.tasks)
    if (t.formula.window_end() > horizon + 1e-9)
      throw PreconditionError("horizon " + std::to_string(horizon) + " is shorter than the window of the task of agent " +
                              std::to_string(t.owner) + " (needs " + std::to_string(t.formula.window_end()) + ")");
}

/// Smooth body robustness of every task, recomputed from the recorded states.
inline RobustnessTrace smooth_trace(const Design& d, const MultiAgentSystem& sys, const Trajectory& traj) {
  RobustnessTrace tr;
  tr.t0 = traj.t.empty() ? 0.0 : traj.t.front();
  tr.dt = traj.dt;
  tr.rho.assign(d.tasks.size(), std::vector<double>(traj.samples()));
  std::vector<double> y;
  for (std::size_t j = 0; j < d.tasks.size(); ++j) {
    const auto& body = d.tasks[j].formula.body;
    for (std::size_t k = 0; k < traj.samples(); ++k) {
      y.clear();
      for (const auto& ref : body.support()) y.push_back(traj.x[k][sys.state_offset(ref.agent) + ref.index]);
      tr.rho[j][k] = body.value(y, Conjunction::smooth);
    }
  }
  return tr;
}

/// Monitors and task robustness on a recorded trajectory.
inline Evaluation evaluate(const Design& d, const MultiAgentSystem& sys, const Trajectory& traj, double eps,
                           double delta) {
  Evaluation ev;
  ev.eps = eps;
  ev.delta = delta;
  require_coverage(d, traj.t.empty() ? 0.0 : traj.t.back());
  std::vector<double> body(traj.samples());
  std::vector<double> y;
  for (const auto& task : d.tasks) {
    const auto& phi = task.formula;
    for (std::size_t k = 0; k < traj.samples(); ++k) {
      y.clear();
      for (const auto& ref : phi.body.support()) y.push_back(traj.x[k][sys.state_offset(ref.agent) + ref.index]);
      body[k] = phi.body.value(y, Conjunction::exact);
    }
    const Witness w = temporal_witness(phi, body, traj.dt, 0.0, traj.t.front());
    ev.outcomes.push_back(
        {task.owner, w.value, task.funnel.r, w.t, w.value >= task.funnel.r - kRobustnessTolerance});
  }
  const RobustnessTrace tr = smooth_trace(d, sys, traj);
  for (const auto& c : d.contracts) {
    ev.weak.push_back(monitor_weak(tr, c));
    if (!d.topology.clusters.acyclic) {
      ev.strong.push_back(monitor_uniform_strong(tr, c, delta));
      ev.expanded.push_back(monitor_weak(tr, expand_assumptions(c, eps)));
    }
  }
  ev.global_guarantee = global_guarantee_holds(tr, d.contracts);
  ev.certificate = d.certificate;
  add_monitor_conditions(ev.certificate, ev.weak, ev.strong, ev.expanded);
  return ev;
}

inline RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  res.design = prepare(sc);
  if (!res.design.designed()) {
    std::string msg = "funnel design failed:";
    for (const auto& e : res.design.errors) msg += " " + e + ";";
    throw DesignError(msg);
  }
  SimConfig cfg = sc.sim;
  if (opt.dt) cfg.dt = *opt.dt;
  if (opt.horizon) cfg.horizon = *opt.horizon;
  if (opt.stride) cfg.record_stride = *opt.stride;
  require_coverage(res.design, cfg.horizon);
  FunnelController ctrl(sc.system, res.design.tasks);
  res.trajectory = integrate(ctrl, sc.system.initial_state(), cfg);
  const double eps = opt.eps ? *opt.eps : default_eps(res.design);
  const double delta = opt.delta ? *opt.delta : default_delta(cfg.dt, res.trajectory.dt);
  res.evaluation = evaluate(res.design, sc.system, res.trajectory, eps, delta);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

/// Rebuilds a trajectory from a trace CSV: states and inputs from their
/// columns, body robustness recomputed from the states.
inline Trajectory trajectory_from_csv(const Design& d, const MultiAgentSystem& sys, const CsvTable& table) {
  Trajectory traj;
  traj.t = table.column("t");
  if (traj.t.size() < 2) throw PreconditionError("trace has fewer than two samples");
  traj.dt = traj.t[1] - traj.t[0];
  if (!(traj.dt > 0.0)) throw ScenarioError("/t", "time column is not increasing");
  for (std::size_t k = 0; k < traj.t.size(); ++k)
    if (std::abs(traj.t[k] - (traj.t[0] + static_cast<double>(k) * traj.dt)) > 1e-9 * std::max(1.0, traj.t[k]))
      throw ScenarioError("/t", "time grid is not uniform at row " + std::to_string(k + 2));
  traj.state_labels = detail::state_labels(sys, false);
  traj.input_labels = detail::state_labels(sys, true);
  std::vector<const std::vector<double>*> xs;
  std::vector<const std::vector<double>*> us;
  for (const auto& [a, i] : traj.state_labels)
    xs.push_back(&table.column("x_" + std::to_string(a) + "_" + std::to_string(i)));
  for (const auto& [a, i] : traj.input_labels)
    us.push_back(&table.column("u_" + std::to_string(a) + "_" + std::to_string(i)));
  for (const auto& task : d.tasks) {
    traj.task_agents.push_back(task.owner);
    traj.funnels.push_back(task.funnel);
  }
  std::vector<double> y;
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(xs.size()));
    Eigen::VectorXd u(static_cast<Eigen::Index>(us.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) x[static_cast<Eigen::Index>(i)] = (*xs[i])[k];
    for (std::size_t i = 0; i < us.size(); ++i) u[static_cast<Eigen::Index>(i)] = (*us[i])[k];
    Eigen::VectorXd rho(static_cast<Eigen::Index>(d.tasks.size()));
    for (std::size_t j = 0; j < d.tasks.size(); ++j) {
      const auto& body = d.tasks[j].formula.body;
      y.clear();
      for (const auto& ref : body.support()) y.push_back(x[sys.state_offset(ref.agent) + ref.index]);
      rho[static_cast<Eigen::Index>(j)] = body.value(y, Conjunction::smooth);
    }
    traj.x.push_back(std::move(x));
    traj.u.push_back(std::move(u));
    traj.rho.push_back(std::move(rho));
  }
  return traj;
}

// ---- JSON reports -------------------------------------------------------

inline json to_json(const FunnelParams& p) {
  return {{"gamma0", p.gamma0}, {"gamma_inf", p.gamma_inf}, {"l", p.l},
          {"rho_max", p.rho_max}, {"r", p.r}, {"t_star", p.t_star}};
}

inline json to_json(const Verdict& v) {
  json j{{"agent", v.agent}, {"satisfied", v.satisfied}, {"margin", v.margin}};
  if (v.first_violation) j["first_violation"] = {{"t", v.first_violation->t}, {"kind", v.first_violation->kind}};
  else j["first_violation"] = nullptr;
  return j;
}

inline json to_json(const CompositionCertificate& c) {
  json conds = json::array();
  for (const auto& k : c.conditions) conds.push_back({{"name", k.name}, {"pass", k.pass}, {"detail", k.detail}});
  return {{"theorem_used", theorem_name(c.theorem_used)}, {"conditions", conds}};
}

inline json design_json(const Design& d) {
  json out = json::array();
  for (std::size_t k = 0; k < d.funnels.size(); ++k) {
    json j{{"agent", k + 1}, {"rho0", d.rho0[k]}, {"rho_opt", d.rho_opt[k]},
           {"funnel", to_json(d.funnels[k].params)}, {"saturated", d.funnels[k].saturated}};
    if (!d.funnels[k].notes.empty()) j["notes"] = d.funnels[k].notes;
    out.push_back(std::move(j));
  }
  return out;
}

inline json check_json(const Scenario& sc, const Design& d) {
  json j;
  j["scenario"] = sc.name;
  j["agents"] = sc.system.size();
  j["clusters"] = d.topology.partition.clusters;
  j["cluster_graph"] = {{"acyclic", d.topology.clusters.acyclic}, {"cycle", d.topology.clusters.cycle}};
  const auto& t = d.topology_report;
  json edges = json::array();
  for (const auto& [a, b] : t.missing_communication) edges.push_back({a, b});
  json inside = json::array();
  for (const auto& [a, b] : t.adversarial_in_cluster) inside.push_back({a, b});
  j["topology"] = {{"task_within_communication", {{"pass", t.task_within_communication}, {"missing", edges}}},
                   {"task_graph_acyclic", {{"pass", t.task_acyclic}, {"cycle", t.task_cycle}}},
                   {"adversarial_outside_cluster", {{"pass", t.adversarial_outside_cluster}, {"pairs", inside}}},
                   {"initial_agents", t.initial_agents},
                   {"initial_clusters", t.initial_clusters}};
  json checks = json::array();
  for (const auto& c : d.assumptions.checks)
    if (!c.pass) checks.push_back({{"name", c.name}, {"agent", c.agent}, {"pass", c.pass},
                                   {"warning_only", c.warning_only}, {"detail", c.detail}});
  j["assumptions"] = {{"pass", d.assumptions.pass()}, {"checked", d.assumptions.checks.size()}, {"failures", checks}};
  j["errors"] = d.errors;
  j["funnels"] = design_json(d);
  if (d.designed()) j["certificate"] = to_json(d.certificate);
  j["pass"] = d.pass();
  return j;
}

/// Deterministic verdict document (no timings).
inline json verdict_json(const Scenario& sc, const Evaluation& ev) {
  json j;
  j["scenario"] = sc.name;
  j["eps"] = ev.eps;
  j["delta"] = ev.delta;
  json tasks = json::array();
  for (const auto& o : ev.outcomes)
    tasks.push_back({{"agent", o.agent}, {"robustness", o.robustness}, {"r", o.r}, {"witness_t", o.witness_t},
                     {"satisfied", o.satisfied}});
  j["tasks"] = tasks;
  auto list = [](const std::vector<Verdict>& vs) {
    json a = json::array();
    for (const auto& v : vs) a.push_back(to_json(v));
    return a;
  };
  j["contracts"] = {{"weak", list(ev.weak)}, {"uniform_strong", list(ev.strong)}, {"expanded_weak", list(ev.expanded)}};
  j["global_guarantee"] = ev.global_guarantee;
  j["certificate"] = to_json(ev.certificate);
  j["pass"] = ev.pass();
  return j;
}

}  // namespace stlagc
