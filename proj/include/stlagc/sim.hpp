#pragma once

// Fixed-step RK4 integration of the closed loop, trajectory storage and the
// CSV trace format.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stlagc/contracts.hpp"
#include "stlagc/control.hpp"
#include "stlagc/errors.hpp"
#include "stlagc/funnel.hpp"

namespace stlagc {

struct SimConfig {
  double dt = 0.005;
  double horizon = 1.0;
  int record_stride = 1;
  /// Optional saturation of every input entry (clip-and-warn).
  std::optional<std::pair<double, double>> input_bounds;
  double divergence_bound = 1e9;
  /// Clamp events kept in the log; all of them are counted.
  std::size_t max_logged_events = 1000;
};

struct SimEvent {
  double t = 0.0;
  int agent = 0;  // task owner
  std::string kind;
  double e_hat = 0.0;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> rho;  // smooth body robustness per task
  std::vector<int> task_agents;      // owner of each task column
  std::vector<FunnelParams> funnels;
  std::vector<std::pair<int, int>> state_labels;  // (agent, 1-based index) per state entry
  std::vector<std::pair<int, int>> input_labels;
  std::vector<SimEvent> events;
  std::size_t clamp_events = 0;
  std::size_t clipped_inputs = 0;
  double dt = 0.0;  // spacing of the recorded grid

  std::size_t samples() const noexcept { return t.size(); }
};

namespace detail {

inline std::vector<std::pair<int, int>> state_labels(const MultiAgentSystem& sys, bool inputs) {
  std::vector<std::pair<int, int>> out;
  for (int id = 1; id <= sys.size(); ++id) {
    const int n = inputs ? sys.input_dim(id) : sys.state_dim(id);
    for (int k = 1; k <= n; ++k) out.emplace_back(id, k);
  }
  return out;
}

}  // namespace detail

/// Classical Runge-Kutta of order four with fixed step; the controller is
/// evaluated at every stage with the stage time.
inline Trajectory integrate(const FunnelController& ctrl, const Eigen::VectorXd& x0, const SimConfig& cfg) {
  const MultiAgentSystem& sys = ctrl.system();
  if (!(cfg.dt > 0.0)) throw PreconditionError("dt must be positive");
  if (!(cfg.horizon >= 0.0)) throw PreconditionError("horizon must be nonnegative");
  if (cfg.record_stride < 1) throw PreconditionError("record_stride must be at least 1");
  if (x0.size() != sys.state_dim()) throw DimensionError("x0 dimension does not match the system");
  const double exact_steps = cfg.horizon / cfg.dt;
  const auto steps = static_cast<std::size_t>(std::llround(exact_steps));
  if (std::abs(exact_steps - static_cast<double>(steps)) > 1e-6 * std::max(1.0, exact_steps))
    throw PreconditionError("horizon is not a multiple of dt");
  const auto stride = static_cast<std::size_t>(cfg.record_stride);
  if (steps % stride != 0) throw PreconditionError("number of steps is not a multiple of record_stride");

  const auto& tasks = ctrl.tasks();
  Trajectory traj;
  traj.dt = cfg.dt * static_cast<double>(stride);
  for (const auto& task : tasks) {
    traj.task_agents.push_back(task.owner);
    traj.funnels.push_back(task.funnel);
  }
  traj.state_labels = detail::state_labels(sys, false);
  traj.input_labels = detail::state_labels(sys, true);
  const std::size_t records = steps / stride + 1;
  traj.t.reserve(records);
  traj.x.reserve(records);
  traj.u.reserve(records);
  traj.rho.reserve(records);

  ControlWorkspace ws;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd u(sys.input_dim());

  // initial containment
  ctrl.evaluate(0.0, x, u, ws);
  {
    std::string outside;
    std::size_t bad = 0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      const double lo = funnel_lower(tasks[k].funnel, 0.0);
      if (!(lo < ws.rho[k] && ws.rho[k] < tasks[k].funnel.rho_max) && ++bad <= 10)
        outside += " agent " + std::to_string(tasks[k].owner) + " (rho=" + std::to_string(ws.rho[k]) + ", funnel (" +
                   std::to_string(lo) + ", " + std::to_string(tasks[k].funnel.rho_max) + "))";
    }
    if (bad > 0) throw PreconditionError("initial state outside the funnel for" + outside);
  }

  auto clip = [&](Eigen::VectorXd& v) {
    if (!cfg.input_bounds) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double c = std::clamp(v[i], cfg.input_bounds->first, cfg.input_bounds->second);
      if (c != v[i]) {
        ++traj.clipped_inputs;
        v[i] = c;
      }
    }
  };
  auto note_clamps = [&](double t) {
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      if (!ws.error[k].clamped) continue;
      ++traj.clamp_events;
      if (traj.events.size() < cfg.max_logged_events)
        traj.events.push_back({t, tasks[k].owner, "clamp", ws.error[k].e_hat});
    }
  };
  auto record = [&](double t, const Eigen::VectorXd& uu) {
    traj.t.push_back(t);
    traj.x.push_back(x);
    traj.u.push_back(uu);
    traj.rho.push_back(Eigen::Map<const Eigen::VectorXd>(ws.rho.data(), static_cast<Eigen::Index>(ws.rho.size())));
  };

  Eigen::VectorXd k1, k2, k3, k4, xs, us(sys.input_dim());
  const double h = cfg.dt;
  for (std::size_t step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) * h;
    if (step > 0) ctrl.evaluate(t, x, u, ws);
    note_clamps(t);
    clip(u);
    if (step % stride == 0) record(t, u);

    sys.derivative(x, u, k1);
    xs = x + 0.5 * h * k1;
    ctrl.evaluate(t + 0.5 * h, xs, us, ws);
    note_clamps(t + 0.5 * h);
    clip(us);
    sys.derivative(xs, us, k2);
    xs = x + 0.5 * h * k2;
    ctrl.evaluate(t + 0.5 * h, xs, us, ws);
    note_clamps(t + 0.5 * h);
    clip(us);
    sys.derivative(xs, us, k3);
    xs = x + h * k3;
    ctrl.evaluate(t + h, xs, us, ws);
    note_clamps(t + h);
    clip(us);
    sys.derivative(xs, us, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!x.allFinite() || x.norm() > cfg.divergence_bound)
      throw DivergenceError(step + 1, "state diverged at step " + std::to_string(step + 1) +
                                          " (t=" + std::to_string(static_cast<double>(step + 1) * h) + ")");
  }
  const double tf = static_cast<double>(steps) * h;
  ctrl.evaluate(tf, x, u, ws);
  note_clamps(tf);
  clip(u);
  record(tf, u);
  return traj;
}

/// Every `stride`-th sample, endpoints included.
inline Trajectory resample(const Trajectory& traj, int stride) {
  if (stride < 1) throw PreconditionError("stride must be at least 1");
  const auto s = static_cast<std::size_t>(stride);
  if (traj.samples() == 0 || (traj.samples() - 1) % s != 0)
    throw PreconditionError("stride does not divide the number of steps");
  Trajectory out = traj;
  out.t.clear();
  out.x.clear();
  out.u.clear();
  out.rho.clear();
  for (std::size_t k = 0; k < traj.samples(); k += s) {
    out.t.push_back(traj.t[k]);
    out.x.push_back(traj.x[k]);
    out.u.push_back(traj.u[k]);
    out.rho.push_back(traj.rho[k]);
  }
  out.dt = traj.dt * static_cast<double>(stride);
  return out;
}

/// Body robustness of each agent's task from the trajectory columns; task k
/// must belong to agent k+1.
inline RobustnessTrace robustness_trace(const Trajectory& traj) {
  RobustnessTrace tr;
  tr.t0 = traj.t.empty() ? 0.0 : traj.t.front();
  tr.dt = traj.dt;
  tr.rho.assign(traj.task_agents.size(), std::vector<double>(traj.samples()));
  for (std::size_t j = 0; j < traj.task_agents.size(); ++j) {
    if (traj.task_agents[j] != static_cast<int>(j) + 1)
      throw PreconditionError("robustness trace expects task k to belong to agent k");
    for (std::size_t k = 0; k < traj.samples(); ++k) tr.rho[j][k] = traj.rho[k][static_cast<Eigen::Index>(j)];
  }
  return tr;
}

/// Shortest decimal with 17 significant digits; round-trips every double.
inline std::string format_number(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

inline void write_csv(std::ostream& os, const Trajectory& traj) {
  os << "t";
  for (const auto& [a, i] : traj.state_labels) os << ",x_" << a << '_' << i;
  for (const auto& [a, i] : traj.input_labels) os << ",u_" << a << '_' << i;
  for (int a : traj.task_agents) os << ",rho_" << a;
  for (int a : traj.task_agents) os << ",lower_" << a;
  for (int a : traj.task_agents) os << ",upper_" << a;
  os << '\n';
  std::string line;
  for (std::size_t k = 0; k < traj.samples(); ++k) {
    line = format_number(traj.t[k]);
    auto put = [&](double v) {
      line += ',';
      line += format_number(v);
    };
    for (Eigen::Index i = 0; i < traj.x[k].size(); ++i) put(traj.x[k][i]);
    for (Eigen::Index i = 0; i < traj.u[k].size(); ++i) put(traj.u[k][i]);
    for (Eigen::Index i = 0; i < traj.rho[k].size(); ++i) put(traj.rho[k][i]);
    for (const auto& f : traj.funnels) put(funnel_lower(f, traj.t[k]));
    for (const auto& f : traj.funnels) put(funnel_upper(f));
    line += '\n';
    os << line;
  }
}

inline void export_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_csv(os, traj);
  if (!os) throw Error("failed writing " + path);
}

/// Column-major numeric table read back from a trace CSV.
struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  }

  const std::vector<double>& column(const std::string& name) const {
    auto k = find(name);
    if (!k) throw ScenarioError("/" + name, "column missing from trace");
    return columns[*k];
  }
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw ScenarioError("/", "empty trace file");
  std::stringstream header(line);
  for (std::string name; std::getline(header, name, ',');) {
    while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
    while (!name.empty() && name.front() == ' ') name.erase(name.begin());
    table.names.push_back(name);
  }
  table.columns.resize(table.names.size());
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::size_t col = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end && col < table.names.size()) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto [q, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw ScenarioError("/row/" + std::to_string(row), "malformed number");
      table.columns[col++].push_back(v);
      p = q;
      while (p < end && (*p == ' ' || *p == '\r')) ++p;
      if (p < end && *p == ',') ++p;
      else break;
    }
    if (col != table.names.size())
      throw ScenarioError("/row/" + std::to_string(row), "expected " + std::to_string(table.names.size()) + " fields");
  }
  return table;
}

inline CsvTable import_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_csv(is);
}

}  // namespace stlagc
