#pragma once

// Exponential performance funnels, their design for an STL task, and the
// error transformation used by the controller.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stlagc/errors.hpp"
#include "stlagc/stl.hpp"

namespace stlagc {

/// Funnel  -gamma(t) + rho_max < rho(x(t)) < rho_max  with
/// gamma(t) = (gamma0 - gamma_inf) exp(-l t) + gamma_inf.
struct FunnelParams {
  double gamma0 = 1.0;
  double gamma_inf = 1.0;
  double l = 0.0;
  double rho_max = 1.0;
  double r = 0.0;
  double t_star = 0.0;

  friend bool operator==(const FunnelParams&, const FunnelParams&) = default;
};

inline double gamma(const FunnelParams& p, double t) {
  return (p.gamma0 - p.gamma_inf) * std::exp(-p.l * t) + p.gamma_inf;
}

inline double gamma_dot(const FunnelParams& p, double t) {
  return -p.l * (p.gamma0 - p.gamma_inf) * std::exp(-p.l * t);
}

inline double alpha(const FunnelParams& p, double t) { return -gamma_dot(p, t) / gamma(p, t); }

inline double funnel_lower(const FunnelParams& p, double t) { return p.rho_max - gamma(p, t); }
inline double funnel_upper(const FunnelParams& p) { return p.rho_max; }

/// Clamp distance of the modulated error from the ends of (-1, 0).
inline constexpr double kClampMargin = 1e-9;

struct ErrorState {
  double e = 0.0;         // rho - rho_max
  double e_hat = -0.5;    // e / gamma, clamped into (-1, 0)
  double epsilon = 0.0;   // ln(-(e_hat + 1) / e_hat)
  double jacobian = 0.0;  // -1 / (gamma e_hat (1 + e_hat))
  double alpha = 0.0;     // -gamma_dot / gamma
  bool clamped = false;
};

inline ErrorState error_chain(double rho, const FunnelParams& p, double t) {
  ErrorState s;
  const double g = gamma(p, t);
  s.e = rho - p.rho_max;
  double eh = s.e / g;
  const double lo = -1.0 + kClampMargin;
  const double hi = -kClampMargin;
  if (!(eh >= lo && eh <= hi)) {
    s.clamped = true;
    eh = std::isnan(eh) ? -0.5 : std::clamp(eh, lo, hi);
  }
  s.e_hat = eh;
  s.epsilon = std::log(-(eh + 1.0) / eh);
  s.jacobian = -1.0 / (g * eh * (1.0 + eh));
  s.alpha = alpha(p, t);
  return s;
}

/// Parameter picks that replace the design defaults.
struct FunnelOverrides {
  std::optional<double> gamma0;
  std::optional<double> gamma_inf;
  std::optional<double> l;
  std::optional<double> rho_max;
  std::optional<double> r;
  std::optional<double> t_star;
};

/// Margin used for the strict inequalities of the admissible intervals.
inline constexpr double kDesignMargin = 1e-12;

struct FunnelDesign {
  FunnelParams params;
  /// The task starts at its optimum, so rho_max cannot sit strictly between
  /// rho(x0) and rho_opt; the funnel is instead centered on rho_opt.
  bool saturated = false;
  std::vector<std::string> notes;
};

/// Admissible window for the critical time t* of a task.
inline Interval critical_time_window(const TemporalFormula& phi) {
  switch (phi.op) {
    case TemporalOp::always:
      return {phi.outer.lo, phi.outer.lo};
    case TemporalOp::eventually:
      return {phi.outer.lo, phi.outer.hi};
    case TemporalOp::eventually_always:
      return {phi.outer.lo + phi.inner.lo, phi.outer.hi + phi.inner.lo};
  }
  return {};
}

inline bool starts_at_optimum(double rho_x0, double rho_opt) {
  return rho_x0 >= rho_opt - 1e-6 * std::max(1.0, std::abs(rho_opt));
}

/// Every membership a design must satisfy; empty when the parameters pass.
inline std::vector<std::string> design_violations(const TemporalFormula& phi, double rho_x0, double rho_opt,
                                                  const FunnelParams& p, bool saturated) {
  std::vector<std::string> bad;
  const double m = kDesignMargin;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  };
  const Interval window = critical_time_window(phi);
  need(p.t_star >= window.lo - m && p.t_star <= window.hi + m,
       "t_star=" + std::to_string(p.t_star) + " outside [" + std::to_string(window.lo) + ", " +
           std::to_string(window.hi) + "]");
  need(p.r > m, "r must be positive");
  need(p.r < p.rho_max - m, "r must be below rho_max");
  if (saturated) {
    need(p.rho_max - p.gamma_inf < rho_opt - m, "funnel region must contain values below rho_opt");
  } else {
    need(p.rho_max > std::max(0.0, rho_x0) + m, "rho_max must exceed max(0, rho(x0))");
    need(p.rho_max < rho_opt - m, "rho_max must be below rho_opt");
  }
  need(p.gamma0 > p.rho_max - rho_x0 + m, "gamma0 must exceed rho_max - rho(x0)");
  if (!(p.t_star > 0.0)) need(p.gamma0 <= p.rho_max - p.r + m, "gamma0 must not exceed rho_max - r when t_star = 0");
  need(p.gamma_inf > m, "gamma_inf must be positive");
  need(p.gamma_inf <= std::min(p.gamma0, p.rho_max - p.r) + m, "gamma_inf must not exceed min(gamma0, rho_max - r)");
  need(p.l >= 0.0, "l must be nonnegative");
  const double slack = 1e-12 * std::max(1.0, std::abs(p.rho_max));
  if (-p.gamma0 + p.rho_max < p.r - slack && p.t_star > 0.0) {
    const double l = -std::log((p.r + p.gamma_inf - p.rho_max) / (-p.gamma0 + p.gamma_inf)) / p.t_star;
    need(std::abs(p.l - l) <= 1e-9 * std::max(1.0, l), "l must equal " + std::to_string(l));
  }
  need(-gamma(p, p.t_star) + p.rho_max >= p.r - slack, "funnel does not reach r by t_star");
  need(funnel_lower(p, 0.0) < rho_x0 && rho_x0 < p.rho_max, "rho(x0) not strictly inside the funnel at t = 0");
  return bad;
}

/// Chooses funnel parameters for task `phi` from rho(x0), rho_opt and the
/// target robustness r (default 0.05 rho_opt). Overrides replace individual
/// defaults and are then checked like any other pick.
inline FunnelDesign design_funnel_detailed(const TemporalFormula& phi, double rho_x0, double rho_opt,
                                           std::optional<double> r_target = std::nullopt,
                                           const FunnelOverrides& o = {}) {
  if (!(rho_opt > 0.0)) throw DesignError("rho_opt = " + std::to_string(rho_opt) + " is not positive");
  FunnelDesign d;
  FunnelParams& p = d.params;
  p.r = o.r ? *o.r : r_target ? *r_target : 0.05 * rho_opt;
  if (!(p.r > 0.0 && p.r < rho_opt))
    throw DesignError("r = " + std::to_string(p.r) + " outside (0, rho_opt = " + std::to_string(rho_opt) + ")");

  const Interval window = critical_time_window(phi);
  d.saturated = starts_at_optimum(rho_x0, rho_opt);

  if (o.t_star) {
    p.t_star = *o.t_star;
  } else if (phi.op == TemporalOp::eventually) {
    p.t_star = window.hi;
  } else {
    p.t_star = window.lo;
    // a zero critical time needs rho(x0) > r; otherwise use the latest admissible one
    if (!(p.t_star > 0.0) && !(rho_x0 > p.r) && !d.saturated && window.hi > 0.0) {
      p.t_star = window.hi;
      d.notes.push_back("t_star moved to " + std::to_string(p.t_star) + " since rho(x0) <= r");
    }
  }
  if (p.t_star < window.lo - kDesignMargin || p.t_star > window.hi + kDesignMargin)
    throw DesignError("t_star = " + std::to_string(p.t_star) + " outside [" + std::to_string(window.lo) + ", " +
                      std::to_string(window.hi) + "]");

  if (d.saturated) {
    p.rho_max = o.rho_max ? *o.rho_max : 2.0 * rho_opt - p.r;
    p.gamma0 = o.gamma0 ? *o.gamma0 : p.rho_max - p.r;
    p.gamma_inf = o.gamma_inf ? *o.gamma_inf : std::min(p.gamma0, p.rho_max - p.r);
    p.l = o.l ? *o.l : 0.0;
    d.notes.push_back("rho(x0) is at rho_opt; funnel centered on rho_opt");
  } else {
    const double floor0 = std::max(0.0, rho_x0);
    p.rho_max = o.rho_max ? *o.rho_max : floor0 + 0.9 * (rho_opt - floor0);
    if (!o.rho_max && !(p.r < p.rho_max)) {
      p.rho_max = 0.5 * (std::max(p.r, floor0) + rho_opt);
      d.notes.push_back("rho_max raised to " + std::to_string(p.rho_max) + " to stay above r");
    }
    if (!(p.r < p.rho_max))
      throw DesignError("r = " + std::to_string(p.r) + " is not below rho_max = " + std::to_string(p.rho_max));
    if (o.gamma0) {
      p.gamma0 = *o.gamma0;
    } else if (p.t_star > 0.0) {
      p.gamma0 = 1.2 * (p.rho_max - rho_x0);
    } else {
      const double lo = p.rho_max - rho_x0;
      const double hi = p.rho_max - p.r;
      if (!(lo < hi))
        throw DesignError("t_star = 0 needs rho(x0) > r; interval (" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "] for gamma0 is empty");
      p.gamma0 = 0.5 * (lo + hi);
    }
    p.gamma_inf = o.gamma_inf ? *o.gamma_inf : 0.5 * std::min(p.gamma0, p.rho_max - p.r);
    if (-p.gamma0 + p.rho_max >= p.r - 1e-12 * std::max(1.0, std::abs(p.rho_max))) {
      p.l = o.l ? *o.l : 0.0;
    } else {
      if (!(p.t_star > 0.0)) throw DesignError("funnel cannot reach r at t_star = 0");
      const double num = p.r + p.gamma_inf - p.rho_max;
      const double den = -p.gamma0 + p.gamma_inf;
      if (!(num < 0.0 && den < 0.0))
        throw DesignError("gamma_inf must be strictly below rho_max - r and gamma0 for a finite decay rate");
      const double l = -std::log(num / den) / p.t_star;
      if (o.l && std::abs(*o.l - l) > 1e-9 * std::max(1.0, l))
        throw DesignError("l = " + std::to_string(*o.l) + " conflicts with the decay rate " + std::to_string(l) +
                          " fixed by the other parameters");
      p.l = l;
    }
  }

  auto bad = design_violations(phi, rho_x0, rho_opt, p, d.saturated);
  if (!bad.empty()) {
    std::string msg = "funnel design rejected:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw DesignError(msg);
  }
  return d;
}

inline FunnelParams design_funnel(const TemporalFormula& phi, double rho_x0, double rho_opt,
                                  std::optional<double> r_target = std::nullopt, const FunnelOverrides& o = {}) {
  return design_funnel_detailed(phi, rho_x0, rho_opt, r_target, o).params;
}

}  // namespace stlagc
