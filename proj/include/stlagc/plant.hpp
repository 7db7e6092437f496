#pragma once

// Agent dynamics  x_i' = f_i(x_i) + g_i(x_i) u_i + h_i(w_i)  for a closed set of
// families, their interconnection, cluster product systems and the two
// reference plants (room-temperature ring, omni-directional robots).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "stlagc/errors.hpp"
#include "stlagc/parser.hpp"
#include "stlagc/topology.hpp"

namespace stlagc {

/// x' = A x + B u + D w + c
struct LinearDynamics {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd D;  // may have zero columns
  Eigen::VectorXd c;
};

/// x' = u + D w
struct SingleIntegrator {
  int dim = 1;
  Eigen::MatrixXd D;  // may have zero columns
};

/// Room temperature T with valve input nu and heat exchange to both neighbors:
/// T' = (-2 alpha - alpha_e) T + alpha_e T_e + alpha_h (T_h - T) nu + alpha sum(w)
struct RoomNode {
  double alpha = 0.05;
  double alpha_e = 0.008;
  double alpha_h = 0.0036;
  double T_h = 50.0;
  double T_e = -1.0;
};

/// State [p1, p2, theta], wheel rates u:
/// x' = A(theta) (B^T)^-1 R u - sum_j k [p - p_j; 0] / (||p - p_j|| + reg)
struct OmniRobot {
  double R = 0.02;
  double L = 0.2;
  double k = 0.1;
  double reg = 1e-5;

  Eigen::Matrix3d geometry() const {
    const double c = std::cos(std::numbers::pi / 6.0);
    const double s = std::sin(std::numbers::pi / 6.0);
    Eigen::Matrix3d B;
    B << 0.0, c, -c, -1.0, s, -s, L, L, L;
    return B;
  }

  /// (B^T)^-1 R
  Eigen::Matrix3d wheel_map() const { return geometry().transpose().inverse() * R; }
};

using Dynamics = std::variant<LinearDynamics, SingleIntegrator, RoomNode, OmniRobot>;

inline std::string family_name(const Dynamics& d) {
  switch (d.index()) {
    case 0: return "linear";
    case 1: return "single_integrator";
    case 2: return "room_node";
    default: return "omni_robot";
  }
}

struct Agent {
  int id = 0;
  Dynamics dynamics;
  Eigen::VectorXd x0;
  std::vector<int> neighbors;  // adversarial neighbors, ascending
};

inline int state_dim(const Dynamics& d) {
  return std::visit(
      [](const auto& f) -> int {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearDynamics>) return static_cast<int>(f.A.rows());
        else if constexpr (std::is_same_v<F, SingleIntegrator>) return f.dim;
        else if constexpr (std::is_same_v<F, RoomNode>) return 1;
        else return 3;
      },
      d);
}

inline int input_dim(const Dynamics& d) {
  return std::visit(
      [](const auto& f) -> int {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearDynamics>) return static_cast<int>(f.B.cols());
        else if constexpr (std::is_same_v<F, SingleIntegrator>) return f.dim;
        else if constexpr (std::is_same_v<F, RoomNode>) return 1;
        else return 3;
      },
      d);
}

namespace detail {

/// Location of one neighbor state inside a stacked vector.
struct Slot {
  Eigen::Index offset = 0;
  int dim = 0;
};

/// dx = f(x) + g(x) u + h(x, w), neighbor states read from `base` at `slots`.
inline void flow(const Dynamics& d, const double* x, const double* u, const double* base, std::span<const Slot> slots,
                 double* dx) {
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearDynamics>) {
          const auto n = f.A.rows();
          Eigen::Map<Eigen::VectorXd> out(dx, n);
          out = f.A * Eigen::Map<const Eigen::VectorXd>(x, n) + f.c;
          if (f.B.cols() > 0) out += f.B * Eigen::Map<const Eigen::VectorXd>(u, f.B.cols());
          Eigen::Index col = 0;
          for (const auto& s : slots) {
            out += f.D.middleCols(col, s.dim) * Eigen::Map<const Eigen::VectorXd>(base + s.offset, s.dim);
            col += s.dim;
          }
        } else if constexpr (std::is_same_v<F, SingleIntegrator>) {
          for (int k = 0; k < f.dim; ++k) dx[k] = u[k];
          Eigen::Map<Eigen::VectorXd> out(dx, f.dim);
          Eigen::Index col = 0;
          for (const auto& s : slots) {
            out += f.D.middleCols(col, s.dim) * Eigen::Map<const Eigen::VectorXd>(base + s.offset, s.dim);
            col += s.dim;
          }
        } else if constexpr (std::is_same_v<F, RoomNode>) {
          double w = 0.0;
          for (const auto& s : slots) w += base[s.offset];
          dx[0] = (-2.0 * f.alpha - f.alpha_e) * x[0] + f.alpha_e * f.T_e + f.alpha_h * (f.T_h - x[0]) * u[0] +
                  f.alpha * w;
        } else {
          const Eigen::Matrix3d M = f.wheel_map();
          const double c = std::cos(x[2]);
          const double s = std::sin(x[2]);
          const Eigen::Vector3d v = M * Eigen::Map<const Eigen::Vector3d>(u);
          dx[0] = c * v[0] - s * v[1];
          dx[1] = s * v[0] + c * v[1];
          dx[2] = v[2];
          for (const auto& sl : slots) {
            const double d0 = x[0] - base[sl.offset];
            const double d1 = x[1] - base[sl.offset + 1];
            const double scale = f.k / (std::hypot(d0, d1) + f.reg);
            dx[0] -= scale * d0;
            dx[1] -= scale * d1;
          }
        }
      },
      d);
}

/// out = g(x)^T v
inline void input_transpose(const Dynamics& d, const double* x, const double* v, double* out) {
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearDynamics>) {
          Eigen::Map<Eigen::VectorXd>(out, f.B.cols()) =
              f.B.transpose() * Eigen::Map<const Eigen::VectorXd>(v, f.B.rows());
        } else if constexpr (std::is_same_v<F, SingleIntegrator>) {
          std::copy(v, v + f.dim, out);
        } else if constexpr (std::is_same_v<F, RoomNode>) {
          out[0] = f.alpha_h * (f.T_h - x[0]) * v[0];
        } else {
          const double c = std::cos(x[2]);
          const double s = std::sin(x[2]);
          // A(theta)^T v
          const Eigen::Vector3d rv(c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]);
          Eigen::Map<Eigen::Vector3d> o(out);
          o = f.wheel_map().transpose() * rv;
        }
      },
      d);
}

}  // namespace detail

/// g(x) as a dense matrix.
inline Eigen::MatrixXd input_matrix(const Dynamics& d, const Eigen::VectorXd& x) {
  if (x.size() != state_dim(d)) throw DimensionError("input_matrix: state dimension mismatch");
  return std::visit(
      [&](const auto& f) -> Eigen::MatrixXd {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearDynamics>) return f.B;
        else if constexpr (std::is_same_v<F, SingleIntegrator>) return Eigen::MatrixXd::Identity(f.dim, f.dim);
        else if constexpr (std::is_same_v<F, RoomNode>) return Eigen::MatrixXd::Constant(1, 1, f.alpha_h * (f.T_h - x[0]));
        else {
          Eigen::Matrix3d A;
          A << std::cos(x[2]), -std::sin(x[2]), 0.0, std::sin(x[2]), std::cos(x[2]), 0.0, 0.0, 0.0, 1.0;
          return A * f.wheel_map();
        }
      },
      d);
}

/// f(x) + g(x) u + h(w) for one agent; w stacks the neighbor states.
inline Eigen::VectorXd eval_dynamics(const Agent& a, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& w, std::span<const int> neighbor_dims) {
  const int n = stlagc::state_dim(a.dynamics);
  if (x.size() != n) throw DimensionError("eval_dynamics: state has " + std::to_string(x.size()) + " entries, expected " + std::to_string(n));
  if (u.size() != stlagc::input_dim(a.dynamics)) throw DimensionError("eval_dynamics: input dimension mismatch");
  std::vector<detail::Slot> slots;
  Eigen::Index off = 0;
  for (int dim : neighbor_dims) {
    slots.push_back({off, dim});
    off += dim;
  }
  if (off != w.size()) throw DimensionError("eval_dynamics: internal input dimension mismatch");
  Eigen::VectorXd dx(n);
  detail::flow(a.dynamics, x.data(), u.data(), w.data(), slots, dx.data());
  return dx;
}

/// Interconnection of agents 1..N; internal input w_i stacks the states of
/// the adversarial neighbors in ascending id order.
class MultiAgentSystem {
 public:
  MultiAgentSystem() = default;

  explicit MultiAgentSystem(std::vector<Agent> agents) : agents_(std::move(agents)) {
    std::sort(agents_.begin(), agents_.end(), [](const Agent& a, const Agent& b) { return a.id < b.id; });
    const int n = static_cast<int>(agents_.size());
    for (int k = 0; k < n; ++k)
      if (agents_[static_cast<std::size_t>(k)].id != k + 1)
        throw PreconditionError("agent ids must be 1..N without gaps");
    x_offset_.resize(static_cast<std::size_t>(n) + 1, 0);
    u_offset_.resize(static_cast<std::size_t>(n) + 1, 0);
    for (int k = 0; k < n; ++k) {
      const auto& a = agents_[static_cast<std::size_t>(k)];
      x_offset_[static_cast<std::size_t>(k) + 1] = x_offset_[static_cast<std::size_t>(k)] + stlagc::state_dim(a.dynamics);
      u_offset_[static_cast<std::size_t>(k) + 1] = u_offset_[static_cast<std::size_t>(k)] + stlagc::input_dim(a.dynamics);
      if (a.x0.size() != stlagc::state_dim(a.dynamics))
        throw DimensionError("agent " + std::to_string(a.id) + ": x0 has " + std::to_string(a.x0.size()) +
                             " entries, state dimension is " + std::to_string(stlagc::state_dim(a.dynamics)));
    }
    slots_.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      auto& a = agents_[static_cast<std::size_t>(k)];
      std::sort(a.neighbors.begin(), a.neighbors.end());
      a.neighbors.erase(std::unique(a.neighbors.begin(), a.neighbors.end()), a.neighbors.end());
      int wdim = 0;
      for (int j : a.neighbors) {
        if (j < 1 || j > n) throw PreconditionError("agent " + std::to_string(a.id) + ": unknown neighbor " + std::to_string(j));
        if (j == a.id) throw PreconditionError("agent " + std::to_string(a.id) + " listed as its own neighbor");
        slots_[static_cast<std::size_t>(k)].push_back({state_offset(j), state_dim(j)});
        wdim += state_dim(j);
      }
      check_coupling(a, wdim);
    }
  }

  int size() const noexcept { return static_cast<int>(agents_.size()); }
  const Agent& agent(int id) const { return agents_.at(static_cast<std::size_t>(id - 1)); }
  const std::vector<Agent>& agents() const noexcept { return agents_; }

  Eigen::Index state_dim() const noexcept { return x_offset_.empty() ? 0 : x_offset_.back(); }
  Eigen::Index input_dim() const noexcept { return u_offset_.empty() ? 0 : u_offset_.back(); }
  Eigen::Index state_offset(int id) const { return x_offset_.at(static_cast<std::size_t>(id - 1)); }
  Eigen::Index input_offset(int id) const { return u_offset_.at(static_cast<std::size_t>(id - 1)); }
  int state_dim(int id) const { return stlagc::state_dim(agent(id).dynamics); }
  int input_dim(int id) const { return stlagc::input_dim(agent(id).dynamics); }

  AgentDimensions dimensions() const {
    AgentDimensions dims;
    for (const auto& a : agents_) dims[a.id] = stlagc::state_dim(a.dynamics);
    return dims;
  }

  Eigen::VectorXd initial_state() const {
    Eigen::VectorXd x(state_dim());
    for (const auto& a : agents_) x.segment(state_offset(a.id), a.x0.size()) = a.x0;
    return x;
  }

  /// Edge (j, i) for every adversarial neighbor j of i.
  Digraph interconnection() const {
    Digraph g(size());
    for (const auto& a : agents_)
      for (int j : a.neighbors) g.add_edge(j, a.id);
    return g;
  }

  /// Derivative of agent `id` written to dx (length state_dim(id)).
  void agent_derivative(int id, const double* x, const double* u, double* dx) const {
    const auto k = static_cast<std::size_t>(id - 1);
    detail::flow(agents_[k].dynamics, x + x_offset_[k], u + u_offset_[k], x, slots_[k], dx);
  }

  void derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& dx) const {
    if (x.size() != state_dim() || u.size() != input_dim()) throw DimensionError("system derivative: dimension mismatch");
    dx.resize(state_dim());
    for (int id = 1; id <= size(); ++id)
      agent_derivative(id, x.data(), u.data(), dx.data() + x_offset_[static_cast<std::size_t>(id - 1)]);
  }

  Eigen::VectorXd derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    Eigen::VectorXd dx;
    derivative(x, u, dx);
    return dx;
  }

  /// u_i = g_i(x_i)^T v_i, v_i of length state_dim(id).
  void input_transpose(int id, const double* x, const double* v, double* out) const {
    const auto k = static_cast<std::size_t>(id - 1);
    detail::input_transpose(agents_[k].dynamics, x + x_offset_[k], v, out);
  }

 private:
  static void check_coupling(const Agent& a, int wdim) {
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, LinearDynamics>) {
            const auto n = f.A.rows();
            if (f.A.cols() != n || f.B.rows() != n || f.c.size() != n)
              throw DimensionError("agent " + std::to_string(a.id) + ": inconsistent linear dynamics");
            if (f.D.cols() != wdim || (wdim > 0 && f.D.rows() != n))
              throw DimensionError("agent " + std::to_string(a.id) + ": D must have " + std::to_string(wdim) + " columns");
          } else if constexpr (std::is_same_v<F, SingleIntegrator>) {
            if (f.D.cols() != wdim || (wdim > 0 && f.D.rows() != f.dim))
              throw DimensionError("agent " + std::to_string(a.id) + ": D must have " + std::to_string(wdim) + " columns");
          } else if constexpr (std::is_same_v<F, OmniRobot>) {
            if (wdim != 3 * static_cast<int>(a.neighbors.size()))
              throw DimensionError("agent " + std::to_string(a.id) + ": omni robots couple to omni robots only");
          } else {
            if (wdim != static_cast<int>(a.neighbors.size()))
              throw DimensionError("agent " + std::to_string(a.id) + ": rooms couple to scalar neighbors only");
          }
        },
        a.dynamics);
  }

  std::vector<Agent> agents_;
  std::vector<Eigen::Index> x_offset_;
  std::vector<Eigen::Index> u_offset_;
  std::vector<std::vector<detail::Slot>> slots_;
};

/// Product system of one cluster, members ascending.
class ClusterSystem {
 public:
  ClusterSystem(const MultiAgentSystem& sys, std::vector<int> members) : sys_(&sys), members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
      throw PreconditionError("cluster lists an agent twice");
    Eigen::Index xo = 0;
    Eigen::Index uo = 0;
    for (int id : members_) {
      if (id < 1 || id > sys.size()) throw PreconditionError("cluster member " + std::to_string(id) + " is not an agent");
      x_offset_.push_back(xo);
      u_offset_.push_back(uo);
      xo += sys.state_dim(id);
      uo += sys.input_dim(id);
    }
    n_ = xo;
    m_ = uo;
  }

  const std::vector<int>& members() const noexcept { return members_; }
  Eigen::Index state_dim() const noexcept { return n_; }
  Eigen::Index input_dim() const noexcept { return m_; }

  /// Cooperative neighbors of member i: the other members.
  std::vector<int> cooperative(int i) const {
    std::vector<int> z;
    for (int id : members_)
      if (id != i) z.push_back(id);
    return z;
  }

  Eigen::VectorXd stack(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(n_);
    for (std::size_t k = 0; k < members_.size(); ++k)
      out.segment(x_offset_[k], sys_->state_dim(members_[k])) =
          x.segment(sys_->state_offset(members_[k]), sys_->state_dim(members_[k]));
    return out;
  }

  /// Block-diagonal g of the cluster.
  Eigen::MatrixXd input_matrix(const Eigen::VectorXd& xbar) const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_, m_);
    for (std::size_t k = 0; k < members_.size(); ++k) {
      const int id = members_[k];
      g.block(x_offset_[k], u_offset_[k], sys_->state_dim(id), sys_->input_dim(id)) =
          stlagc::input_matrix(sys_->agent(id).dynamics, xbar.segment(x_offset_[k], sys_->state_dim(id)));
    }
    return g;
  }

  /// Cluster derivative given the full stacked state (for couplings from
  /// outside the cluster) and the stacked cluster input.
  Eigen::VectorXd derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& ubar) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(sys_->input_dim());
    for (std::size_t k = 0; k < members_.size(); ++k)
      u.segment(sys_->input_offset(members_[k]), sys_->input_dim(members_[k])) =
          ubar.segment(u_offset_[k], sys_->input_dim(members_[k]));
    Eigen::VectorXd out(n_);
    for (std::size_t k = 0; k < members_.size(); ++k)
      sys_->agent_derivative(members_[k], x.data(), u.data(), out.data() + x_offset_[k]);
    return out;
  }

 private:
  const MultiAgentSystem* sys_;
  std::vector<int> members_;
  std::vector<Eigen::Index> x_offset_;
  std::vector<Eigen::Index> u_offset_;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
};

inline ClusterSystem assemble_cluster(const MultiAgentSystem& sys, std::vector<int> members) {
  return ClusterSystem(sys, std::move(members));
}

/// Ring of N rooms; room i exchanges heat with rooms i-1 and i+1 (cyclically).
inline MultiAgentSystem build_room_building(int N, const RoomNode& params = {}) {
  if (N < 3) throw PreconditionError("room building needs at least 3 rooms");
  std::vector<Agent> agents;
  agents.reserve(static_cast<std::size_t>(N));
  for (int i = 1; i <= N; ++i) {
    Agent a;
    a.id = i;
    a.dynamics = params;
    double T0 = i % 2 == 1 ? 25.0 : 31.0;
    if (i == 1) T0 = 19.0;
    if (i == 2) T0 = 25.0;
    a.x0 = Eigen::VectorXd::Constant(1, T0);
    a.neighbors = {i == 1 ? N : i - 1, i == N ? 1 : i + 1};
    agents.push_back(std::move(a));
  }
  return MultiAgentSystem(std::move(agents));
}

/// Five omni-directional robots with their collision-avoidance couplings.
inline MultiAgentSystem build_robot_network(const OmniRobot& params = {}) {
  const double pi = std::numbers::pi;
  const std::vector<Eigen::Vector3d> x0 = {
      {2.0, 2.0, -pi / 4.0}, {4.0, 0.0, 0.0}, {6.0, 2.0, pi / 4.0}, {8.0, 0.0, 0.0}, {10.0, 2.0, -pi / 4.0}};
  const std::vector<std::vector<int>> neighbors = {{}, {4}, {4, 5}, {2, 3}, {3}};
  std::vector<Agent> agents;
  for (int i = 1; i <= 5; ++i) {
    Agent a;
    a.id = i;
    a.dynamics = params;
    a.x0 = x0[static_cast<std::size_t>(i - 1)];
    a.neighbors = neighbors[static_cast<std::size_t>(i - 1)];
    agents.push_back(std::move(a));
  }
  return MultiAgentSystem(std::move(agents));
}

}  // namespace stlagc
