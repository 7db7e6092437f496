#pragma once

// Reference implementations written independently of the library: plain
// loops, closed forms and finite differences. Tests compare against these.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double min_of(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = lo; k <= hi; ++k) m = std::min(m, v[k]);
  return m;
}

inline double max_of(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = lo; k <= hi; ++k) m = std::max(m, v[k]);
  return m;
}

// index range [lo, hi] of grid points k*dt inside [a, b]
inline std::pair<std::size_t, std::size_t> grid_range(double a, double b, double dt) {
  const auto lo = static_cast<std::size_t>(std::ceil(a / dt - 1e-9));
  const auto hi = static_cast<std::size_t>(std::floor(b / dt + 1e-9));
  return {lo, hi};
}

enum class Op { G, F, FG };

/// Robustness at t = 0 of G / F / FG on samples rho[k] = body(k dt), by brute force.
inline double temporal(Op op, double a, double b, double c, double d, const std::vector<double>& rho, double dt) {
  const auto [lo, hi] = grid_range(a, b, dt);
  if (op == Op::G) return min_of(rho, lo, hi);
  if (op == Op::F) return max_of(rho, lo, hi);
  const auto [ilo, ihi] = grid_range(c, d, dt);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = lo; k <= hi; ++k) best = std::max(best, min_of(rho, k + ilo, k + ihi));
  return best;
}

/// Acyclicity by repeatedly removing sources.
inline bool acyclic_kahn(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> indeg(static_cast<std::size_t>(n) + 1, 0);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n) + 1);
  for (auto [u, v] : edges) {
    out[static_cast<std::size_t>(u)].push_back(v);
    ++indeg[static_cast<std::size_t>(v)];
  }
  std::vector<int> ready;
  for (int v = 1; v <= n; ++v)
    if (indeg[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  int removed = 0;
  while (!ready.empty()) {
    const int u = ready.back();
    ready.pop_back();
    ++removed;
    for (int v : out[static_cast<std::size_t>(u)])
      if (--indeg[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  }
  return removed == n;
}

/// Connected components of the undirected version, labelled by smallest member.
inline std::vector<int> components(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(static_cast<std::size_t>(n) + 1);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int v) {
    return parent[static_cast<std::size_t>(v)] == v ? v : parent[static_cast<std::size_t>(v)] = root(parent[static_cast<std::size_t>(v)]);
  };
  for (auto [u, v] : edges) {
    const int a = root(u);
    const int b = root(v);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<int> label(static_cast<std::size_t>(n) + 1);
  for (int v = 1; v <= n; ++v) label[static_cast<std::size_t>(v)] = root(v);
  return label;
}

/// Central differences with step h.
inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                        double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

struct Funnel {
  double gamma0, gamma_inf, l, rho_max, r, t_star;
};

inline double gamma_at(const Funnel& p, double t) {
  return (p.gamma0 - p.gamma_inf) * std::exp(-p.l * t) + p.gamma_inf;
}

/// Every membership a funnel design must satisfy, rechecked from scratch.
/// `window` is the admissible t* interval of the task.
inline std::vector<std::string> funnel_memberships(const Funnel& p, double window_lo, double window_hi, double rho0,
                                                   double rho_opt, bool saturated, double margin = 1e-12) {
  std::vector<std::string> bad;
  auto need = [&](bool ok, const char* what) {
    if (!ok) bad.emplace_back(what);
  };
  need(p.t_star >= window_lo - margin && p.t_star <= window_hi + margin, "t_star");
  need(p.r > 0.0 && p.r < rho_opt, "r");
  need(p.r < p.rho_max - margin, "r below rho_max");
  if (saturated) {
    need(p.rho_max > rho_opt - margin, "rho_max (saturated)");
  } else {
    need(p.rho_max > std::max(0.0, rho0) + margin && p.rho_max < rho_opt - margin, "rho_max");
  }
  need(p.gamma0 > p.rho_max - rho0 + margin, "gamma0 lower");
  if (p.t_star == 0.0) need(p.gamma0 <= p.rho_max - p.r + margin, "gamma0 upper");
  need(p.gamma_inf > margin && p.gamma_inf <= std::min(p.gamma0, p.rho_max - p.r) + margin, "gamma_inf");
  need(p.l >= 0.0, "l sign");
  const double slack = 1e-12 * std::max(1.0, std::abs(p.rho_max));
  if (-p.gamma0 + p.rho_max < p.r - slack && p.t_star > 0.0) {
    const double l = -std::log((p.r + p.gamma_inf - p.rho_max) / (-p.gamma0 + p.gamma_inf)) / p.t_star;
    need(std::abs(p.l - l) <= 1e-9 * std::max(1.0, l), "l value");
  }
  need(-gamma_at(p, p.t_star) + p.rho_max >= p.r - slack, "reach r at t_star");
  need(p.rho_max - p.gamma0 < rho0 && rho0 < p.rho_max, "initial containment");
  return bad;
}

/// Weak satisfaction on a grid: whenever assumptions held at every sample up
/// to k, the guarantee holds at k.
inline bool weak(const std::vector<bool>& a, const std::vector<bool>& g) {
  bool a_so_far = true;
  for (std::size_t k = 0; k < g.size(); ++k) {
    a_so_far = a_so_far && a[k];
    if (a_so_far && !g[k]) return false;
  }
  return true;
}

/// Uniform strong satisfaction with a shift of d samples.
inline bool uniform_strong(const std::vector<bool>& a, const std::vector<bool>& g, std::size_t d) {
  const std::size_t n = g.size();
  bool a_so_far = true;
  for (std::size_t k = 0; k < n && a_so_far; ++k) {
    a_so_far = a[k];
    if (!a_so_far) break;
    for (std::size_t j = 0; j <= std::min(k + d, n - 1); ++j)
      if (!g[j]) return false;
  }
  return true;
}

}  // namespace oracle
