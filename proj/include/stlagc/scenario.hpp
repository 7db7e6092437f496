#pragma once

// Scenario documents (JSON, schema 1) and the two built-in case studies.

#include <fstream>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "stlagc/errors.hpp"
#include "stlagc/funnel.hpp"
#include "stlagc/plant.hpp"
#include "stlagc/sim.hpp"
#include "stlagc/topology.hpp"

namespace stlagc {

using json = nlohmann::json;

struct TaskSpec {
  int agent = 0;
  std::string formula;
  FunnelOverrides overrides;
};

struct Scenario {
  std::string name;
  MultiAgentSystem system;
  CommunicationGraph communication;
  std::vector<TaskSpec> tasks;  // tasks[i-1] belongs to agent i
  SimConfig sim;
  std::string csv_out;
  std::string verdict_out;
};

namespace detail {

inline std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
inline std::string child(const std::string& ptr, std::size_t idx) { return ptr + "/" + std::to_string(idx); }

inline double number_at(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw ScenarioError(ptr, "expected a number");
  return j.get<double>();
}

inline int integer_at(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) throw ScenarioError(ptr, "expected an integer");
  return j.get<int>();
}

inline Eigen::VectorXd vector_at(const json& j, const std::string& ptr) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ScenarioError(ptr, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = number_at(j[k], child(ptr, k));
  return v;
}

/// Array of rows; a bare number is a 1 x 1 matrix, a flat array a column.
inline Eigen::MatrixXd matrix_at(const json& j, const std::string& ptr) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array()) throw ScenarioError(ptr, "expected a matrix (array of rows)");
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  if (!j[0].is_array()) return vector_at(j, ptr);
  const auto rows = j.size();
  const auto cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ScenarioError(child(ptr, r), "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number_at(j[r][c], child(child(ptr, r), c));
  }
  return m;
}

inline double param(const json& params, const char* key, double fallback, const std::string& ptr) {
  if (!params.contains(key)) return fallback;
  return number_at(params[key], child(ptr, key));
}

inline const json& require(const json& j, const char* key, const std::string& ptr) {
  if (!j.is_object() || !j.contains(key)) throw ScenarioError(child(ptr, key), "required field missing");
  return j[key];
}

inline std::string task_key(int agent) { return std::to_string(agent); }

}  // namespace detail

/// Task texts of the room ring: rooms 1 and 2 steer to 23 and 29 degrees while
/// staying close to their same-parity neighbors, inner rooms keep close to
/// room i+2, and rooms N-1, N track 23 and 29.
inline std::vector<std::string> room_building_tasks(int N) {
  if (N < 4) throw PreconditionError("room building tasks need N >= 4");
  std::vector<std::string> tasks;
  const std::string op = "F[0,5] G[10,20] ";
  auto x = [](int i) { return "x" + std::to_string(i); };
  tasks.push_back(op + "(norm2(x1 - " + x(N - 1) + ") <= 2 and norm2(x1 - x3) <= 2 and norm2(x1 - 23) <= 0.5)");
  tasks.push_back(op + "(norm2(x2 - " + x(N) + ") <= 2 and norm2(x2 - x4) <= 2 and norm2(x2 - 29) <= 0.5)");
  for (int i = 3; i <= N - 2; ++i) tasks.push_back(op + "(norm2(" + x(i) + " - " + x(i + 2) + ") <= 2)");
  tasks.push_back(op + "(norm2(" + x(N - 1) + " - 23) <= 0.5)");
  tasks.push_back(op + "(norm2(" + x(N) + " - 29) <= 0.5)");
  return tasks;
}

/// Task texts of the five-robot network (angles compared in degrees).
inline std::vector<std::string> robot_network_tasks() {
  const std::string op = "F[0,40] G[0,20] ";
  const std::string deg = "57.295779513082323";
  auto gap = [](int i, int j) {
    const auto a = std::to_string(i);
    const auto b = std::to_string(j);
    return "norm2([x" + a + "_1 - x" + b + "_1, x" + a + "_2 - x" + b + "_2]) <= 1";
  };
  return {
      op + "(" + gap(1, 2) + " and " + gap(1, 3) + ")",
      op + "(" + gap(2, 3) + " and norm2(" + deg + " * (x2_3 - x3_3)) <= 7.5)",
      op + "(norm2([x3_1 - 14, x3_2 - 7]) <= 0.1 and norm2(" + deg + " * x3_3) <= 7.5)",
      op + "(norm2([x4_1 - 14, x4_2 - 7.5]) <= 0.1 and norm2(" + deg + " * x4_3) <= 7.5)",
      op + "(" + gap(5, 4) + ")",
  };
}

namespace detail {

inline json agent_json(const Agent& a) {
  json j;
  j["id"] = a.id;
  j["x0"] = std::vector<double>(a.x0.data(), a.x0.data() + a.x0.size());
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, RoomNode>) {
          j["family"] = "room_node";
          j["params"] = {{"alpha", f.alpha}, {"alpha_e", f.alpha_e}, {"alpha_h", f.alpha_h}, {"T_h", f.T_h},
                         {"T_e", f.T_e}};
        } else if constexpr (std::is_same_v<F, OmniRobot>) {
          j["family"] = "omni_robot";
          j["params"] = {{"R", f.R}, {"L", f.L}, {"k", f.k}, {"reg", f.reg}};
        }
      },
      a.dynamics);
  return j;
}

inline json system_json(const MultiAgentSystem& sys, const std::vector<std::string>& tasks) {
  json doc;
  doc["agents"] = json::array();
  doc["interconnection"] = json::object();
  for (const auto& a : sys.agents()) {
    doc["agents"].push_back(agent_json(a));
    if (!a.neighbors.empty()) doc["interconnection"][task_key(a.id)] = a.neighbors;
  }
  doc["tasks"] = json::array();
  for (std::size_t k = 0; k < tasks.size(); ++k) doc["tasks"].push_back({{"agent", k + 1}, {"formula", tasks[k]}});
  return doc;
}

/// Communication links along every task dependency.
inline json task_links(const std::vector<TemporalFormula>& formulas) {
  std::set<Edge> links;
  for (const auto& [i, j] : build_task_graph(formulas).edges()) links.insert(undirected_edge(i, j));
  json out = json::array();
  for (const auto& [a, b] : links) out.push_back({a, b});
  return out;
}

}  // namespace detail

/// Replaces a "builtin" reference by the generated plant, graphs and tasks;
/// explicit fields of the document win (agents and tasks are merged by id).
inline json expand_builtin(const json& doc) {
  if (!doc.contains("builtin")) return doc;
  const std::string ptr = "/builtin";
  if (!doc["builtin"].is_string()) throw ScenarioError(ptr, "expected a string");
  const std::string kind = doc["builtin"].get<std::string>();
  const json params = doc.value("builtin_params", json::object());
  json gen;
  MultiAgentSystem sys;
  std::vector<std::string> tasks;
  if (kind == "room_building") {
    const int N = params.contains("N") ? detail::integer_at(params["N"], "/builtin_params/N") : 1000;
    RoomNode node;
    node.alpha = detail::param(params, "alpha", node.alpha, "/builtin_params");
    node.alpha_e = detail::param(params, "alpha_e", node.alpha_e, "/builtin_params");
    node.alpha_h = detail::param(params, "alpha_h", node.alpha_h, "/builtin_params");
    node.T_h = detail::param(params, "T_h", node.T_h, "/builtin_params");
    node.T_e = detail::param(params, "T_e", node.T_e, "/builtin_params");
    try {
      sys = build_room_building(N, node);
      tasks = room_building_tasks(N);
    } catch (const Error& e) {
      throw ScenarioError("/builtin_params/N", e.what());
    }
  } else if (kind == "robot_network") {
    OmniRobot robot;
    robot.R = detail::param(params, "R", robot.R, "/builtin_params");
    robot.L = detail::param(params, "L", robot.L, "/builtin_params");
    robot.k = detail::param(params, "k", robot.k, "/builtin_params");
    robot.reg = detail::param(params, "reg", robot.reg, "/builtin_params");
    sys = build_robot_network(robot);
    tasks = robot_network_tasks();
  } else {
    throw ScenarioError(ptr, "unknown builtin '" + kind + "' (expected room_building or robot_network)");
  }
  gen = detail::system_json(sys, tasks);
  std::vector<TemporalFormula> formulas;
  const auto dims = sys.dimensions();
  for (const auto& t : tasks) formulas.push_back(parse_formula(t, dims));
  gen["communication"] = detail::task_links(formulas);

  json out = doc;
  out.erase("builtin");
  out.erase("builtin_params");
  for (const char* key : {"agents", "tasks"}) {
    const char* id = std::string(key) == "agents" ? "id" : "agent";
    json merged = gen[key];
    if (doc.contains(key)) {
      if (!doc[key].is_array()) throw ScenarioError(std::string("/") + key, "expected an array");
      for (std::size_t k = 0; k < doc[key].size(); ++k) {
        const json& entry = doc[key][k];
        const std::string eptr = std::string("/") + key + "/" + std::to_string(k);
        const int target = detail::integer_at(detail::require(entry, id, eptr), eptr + "/" + id);
        if (target < 1 || target > static_cast<int>(merged.size()))
          throw ScenarioError(eptr + "/" + id, "no such agent in the builtin");
        merged[static_cast<std::size_t>(target - 1)].merge_patch(entry);
      }
    }
    out[key] = merged;
  }
  for (const char* key : {"interconnection", "communication"})
    if (!doc.contains(key)) out[key] = gen[key];
  return out;
}

inline FunnelOverrides parse_overrides(const json& j, const std::string& ptr) {
  FunnelOverrides o;
  if (!j.is_object()) throw ScenarioError(ptr, "expected an object");
  auto opt = [&](const char* key, std::optional<double>& dst) {
    if (j.contains(key) && !j[key].is_null()) dst = detail::number_at(j[key], detail::child(ptr, key));
  };
  opt("gamma0", o.gamma0);
  opt("gamma_inf", o.gamma_inf);
  opt("l", o.l);
  opt("rho_max", o.rho_max);
  opt("r", o.r);
  opt("t_star", o.t_star);
  for (const auto& [key, value] : j.items())
    if (key != "gamma0" && key != "gamma_inf" && key != "l" && key != "rho_max" && key != "r" && key != "t_star")
      throw ScenarioError(detail::child(ptr, key), "unknown funnel parameter");
  return o;
}

inline Scenario load_scenario(const json& input) {
  if (!input.is_object()) throw ScenarioError("", "scenario must be a JSON object");
  if (!input.contains("schema")) throw ScenarioError("/schema", "required field missing");
  if (!input["schema"].is_number_integer() || input["schema"].get<int>() != 1)
    throw ScenarioError("/schema", "unsupported schema version (expected 1)");
  const json doc = expand_builtin(input);
  Scenario sc;
  sc.name = doc.value("name", std::string("scenario"));

  const json& agents = detail::require(doc, "agents", "");
  if (!agents.is_array() || agents.empty()) throw ScenarioError("/agents", "expected a nonempty array");
  const int n = static_cast<int>(agents.size());

  std::map<int, std::vector<int>> neighbors;
  if (doc.contains("interconnection")) {
    const json& ic = doc["interconnection"];
    if (!ic.is_object()) throw ScenarioError("/interconnection", "expected an object {agent: [neighbors]}");
    for (const auto& [key, list] : ic.items()) {
      const std::string ptr = "/interconnection/" + key;
      int i = 0;
      try {
        std::size_t used = 0;
        i = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ScenarioError(ptr, "agent keys must be integers");
      }
      if (i < 1 || i > n) throw ScenarioError(ptr, "unknown agent " + key);
      if (!list.is_array()) throw ScenarioError(ptr, "expected an array of agent ids");
      for (std::size_t k = 0; k < list.size(); ++k) {
        const int j = detail::integer_at(list[k], detail::child(ptr, k));
        if (j < 1 || j > n) throw ScenarioError(detail::child(ptr, k), "unknown agent " + std::to_string(j));
        if (j == i) throw ScenarioError(detail::child(ptr, k), "agent cannot be its own adversarial neighbor");
        neighbors[i].push_back(j);
      }
    }
  }

  // first pass: dimensions
  std::vector<int> dims(static_cast<std::size_t>(n), 0);
  std::vector<Agent> list(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const std::string ptr = "/agents/" + std::to_string(k);
    const json& a = agents[k];
    const int id = detail::integer_at(detail::require(a, "id", ptr), ptr + "/id");
    if (id < 1 || id > n) throw ScenarioError(ptr + "/id", "agent ids must be 1..N");
    if (seen[static_cast<std::size_t>(id - 1)]) throw ScenarioError(ptr + "/id", "duplicate agent id");
    seen[static_cast<std::size_t>(id - 1)] = 1;
    const std::string family = detail::require(a, "family", ptr).get<std::string>();
    const json params = a.value("params", json::object());
    const std::string pp = ptr + "/params";
    Agent& ag = list[static_cast<std::size_t>(id - 1)];
    ag.id = id;
    ag.x0 = detail::vector_at(detail::require(a, "x0", ptr), ptr + "/x0");
    ag.neighbors = neighbors[id];
    if (family == "linear") {
      LinearDynamics f;
      f.A = detail::matrix_at(detail::require(params, "A", pp), pp + "/A");
      const auto dim = f.A.rows();
      f.B = params.contains("B") ? detail::matrix_at(params["B"], pp + "/B") : Eigen::MatrixXd::Identity(dim, dim);
      f.c = params.contains("c") ? detail::vector_at(params["c"], pp + "/c") : Eigen::VectorXd::Zero(dim);
      if (params.contains("D")) f.D = detail::matrix_at(params["D"], pp + "/D");
      ag.dynamics = f;
    } else if (family == "single_integrator") {
      SingleIntegrator f;
      f.dim = params.contains("dim") ? detail::integer_at(params["dim"], pp + "/dim")
                                     : static_cast<int>(ag.x0.size());
      if (params.contains("D")) f.D = detail::matrix_at(params["D"], pp + "/D");
      ag.dynamics = f;
    } else if (family == "room_node") {
      RoomNode f;
      f.alpha = detail::param(params, "alpha", f.alpha, pp);
      f.alpha_e = detail::param(params, "alpha_e", f.alpha_e, pp);
      f.alpha_h = detail::param(params, "alpha_h", f.alpha_h, pp);
      f.T_h = detail::param(params, "T_h", f.T_h, pp);
      f.T_e = detail::param(params, "T_e", f.T_e, pp);
      ag.dynamics = f;
    } else if (family == "omni_robot") {
      OmniRobot f;
      f.R = detail::param(params, "R", f.R, pp);
      f.L = detail::param(params, "L", f.L, pp);
      f.k = detail::param(params, "k", f.k, pp);
      f.reg = detail::param(params, "reg", f.reg, pp);
      ag.dynamics = f;
    } else {
      throw ScenarioError(ptr + "/family", "unknown family '" + family +
                                               "' (expected linear, single_integrator, room_node or omni_robot)");
    }
    dims[static_cast<std::size_t>(id - 1)] = state_dim(ag.dynamics);
    if (ag.x0.size() != dims[static_cast<std::size_t>(id - 1)])
      throw ScenarioError(ptr + "/x0", "expected " + std::to_string(dims[static_cast<std::size_t>(id - 1)]) +
                                           " entries");
  }
  // coupling matrices default to zero columns for every neighbor entry
  for (auto& ag : list) {
    int wdim = 0;
    for (int j : ag.neighbors) wdim += dims[static_cast<std::size_t>(j - 1)];
    const int n_i = state_dim(ag.dynamics);
    if (auto* f = std::get_if<LinearDynamics>(&ag.dynamics); f && f->D.size() == 0) f->D = Eigen::MatrixXd::Zero(n_i, wdim);
    if (auto* f = std::get_if<SingleIntegrator>(&ag.dynamics); f && f->D.size() == 0) f->D = Eigen::MatrixXd::Zero(n_i, wdim);
  }
  try {
    sc.system = MultiAgentSystem(std::move(list));
  } catch (const Error& e) {
    throw ScenarioError("/agents", e.what());
  }

  if (doc.contains("communication")) {
    const json& cm = doc["communication"];
    if (!cm.is_array()) throw ScenarioError("/communication", "expected an array of [i, j] pairs");
    for (std::size_t k = 0; k < cm.size(); ++k) {
      const std::string ptr = "/communication/" + std::to_string(k);
      if (!cm[k].is_array() || cm[k].size() != 2) throw ScenarioError(ptr, "expected a pair [i, j]");
      const int a = detail::integer_at(cm[k][0], ptr + "/0");
      const int b = detail::integer_at(cm[k][1], ptr + "/1");
      if (a < 1 || a > n || b < 1 || b > n) throw ScenarioError(ptr, "unknown agent");
      sc.communication.insert(undirected_edge(a, b));
    }
  }

  const json& tasks = detail::require(doc, "tasks", "");
  if (!tasks.is_array()) throw ScenarioError("/tasks", "expected an array");
  sc.tasks.resize(static_cast<std::size_t>(n));
  std::vector<char> has(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const std::string ptr = "/tasks/" + std::to_string(k);
    const int id = detail::integer_at(detail::require(tasks[k], "agent", ptr), ptr + "/agent");
    if (id < 1 || id > n) throw ScenarioError(ptr + "/agent", "unknown agent");
    if (has[static_cast<std::size_t>(id - 1)]) throw ScenarioError(ptr + "/agent", "agent already has a task");
    has[static_cast<std::size_t>(id - 1)] = 1;
    TaskSpec& t = sc.tasks[static_cast<std::size_t>(id - 1)];
    t.agent = id;
    const json& f = detail::require(tasks[k], "formula", ptr);
    if (!f.is_string()) throw ScenarioError(ptr + "/formula", "expected a string");
    t.formula = f.get<std::string>();
    if (tasks[k].contains("funnel")) t.overrides = parse_overrides(tasks[k]["funnel"], ptr + "/funnel");
  }
  for (int i = 1; i <= n; ++i)
    if (!has[static_cast<std::size_t>(i - 1)]) throw ScenarioError("/tasks", "agent " + std::to_string(i) + " has no task");

  if (doc.contains("sim")) {
    const json& s = doc["sim"];
    if (!s.is_object()) throw ScenarioError("/sim", "expected an object");
    sc.sim.dt = detail::param(s, "dt", sc.sim.dt, "/sim");
    sc.sim.horizon = detail::param(s, "horizon", sc.sim.horizon, "/sim");
    if (s.contains("record_stride")) sc.sim.record_stride = detail::integer_at(s["record_stride"], "/sim/record_stride");
    if (s.contains("input_bounds")) {
      const auto b = detail::vector_at(s["input_bounds"], "/sim/input_bounds");
      if (b.size() != 2 || !(b[0] < b[1])) throw ScenarioError("/sim/input_bounds", "expected [lower, upper]");
      sc.sim.input_bounds = std::make_pair(b[0], b[1]);
    }
  }
  if (doc.contains("outputs")) {
    const json& o = doc["outputs"];
    sc.csv_out = o.value("csv", std::string());
    sc.verdict_out = o.value("verdict", std::string());
  }
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ScenarioError("", "cannot open scenario file " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ScenarioError("", std::string("invalid JSON: ") + e.what());
  }
  return load_scenario(doc);
}

}  // namespace stlagc
