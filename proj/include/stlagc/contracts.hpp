#pragma once

// Assume-guarantee contracts built from task funnels, trajectory monitors for
// weak and uniform-strong satisfaction, and the composition certificate.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stlagc/control.hpp"
#include "stlagc/errors.hpp"
#include "stlagc/funnel.hpp"
#include "stlagc/topology.hpp"

namespace stlagc {

/// Funnel on the body robustness of agent `agent`'s task, widened by
/// `expansion` on both sides.
struct FunnelClaim {
  int agent = 0;
  FunnelParams funnel;
  std::string body;  // task text identifying the body
  std::vector<int> involved;
  double expansion = 0.0;

  double lower(double t) const { return funnel_lower(funnel, t) - expansion; }
  double upper() const { return funnel.rho_max + expansion; }
  bool holds(double rho, double t) const { return lower(t) < rho && rho < upper(); }
  double distance(double rho, double t) const { return std::min(rho - lower(t), upper() - rho); }

  bool same_funnel(const FunnelClaim& o) const {
    return agent == o.agent && funnel == o.funnel && body == o.body && involved == o.involved &&
           expansion == o.expansion;
  }
};

struct Contract {
  int agent = 0;
  std::vector<FunnelClaim> assumptions;  // ascending neighbor id
  FunnelClaim guarantee;
};

/// One contract per agent: assumptions are the adversarial neighbors' task
/// funnels, the guarantee is the agent's own task funnel.
inline std::vector<Contract> encode_contracts(const std::vector<Task>& tasks, const CompositionTopology& topo) {
  const int n = topo.agent_count();
  if (static_cast<int>(tasks.size()) != n) throw PreconditionError("encode_contracts: one task per agent required");
  std::vector<FunnelClaim> claims(static_cast<std::size_t>(n));
  for (const auto& task : tasks) {
    if (task.owner < 1 || task.owner > n) throw PreconditionError("task owner outside 1..N");
    auto& c = claims[static_cast<std::size_t>(task.owner - 1)];
    c.agent = task.owner;
    c.funnel = task.funnel;
    c.body = task.formula.text;
    c.involved = task.formula.agents;
  }
  std::vector<Contract> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    Contract c;
    c.agent = i;
    c.guarantee = claims[static_cast<std::size_t>(i - 1)];
    if (c.guarantee.agent != i) throw PreconditionError("missing funnel for agent " + std::to_string(i));
    for (int j : topo.adversarial_neighbors(i)) c.assumptions.push_back(claims[static_cast<std::size_t>(j - 1)]);
    out.push_back(std::move(c));
  }
  return out;
}

inline Contract expand_assumptions(Contract c, double eps) {
  if (eps < 0.0) throw PreconditionError("expansion must be nonnegative");
  for (auto& a : c.assumptions) a.expansion += eps;
  return c;
}

/// Body robustness of every agent's task on the uniform grid t0 + k dt;
/// rho[i-1][k] belongs to agent i.
struct RobustnessTrace {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<std::vector<double>> rho;

  std::size_t samples() const { return rho.empty() ? 0 : rho.front().size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  const std::vector<double>& of(int agent) const {
    if (agent < 1 || agent > static_cast<int>(rho.size()))
      throw PreconditionError("trace has no robustness series for agent " + std::to_string(agent));
    return rho[static_cast<std::size_t>(agent - 1)];
  }
};

struct Violation {
  double t = 0.0;
  std::string kind;  // "assumption_break_<j>" or "guarantee_break"
};

struct Verdict {
  int agent = 0;
  bool satisfied = true;
  std::optional<Violation> first_violation;
  double margin = 0.0;  // min over the grid of the guarantee distance to its funnel bounds
};

/// First grid index where a claim fails (samples() when it never does).
inline std::size_t first_break(const RobustnessTrace& tr, const FunnelClaim& c) {
  const auto& r = tr.of(c.agent);
  for (std::size_t k = 0; k < r.size(); ++k)
    if (!c.holds(r[k], tr.time(k))) return k;
  return r.size();
}

struct BreakIndices {
  std::size_t assumption = 0;  // first index some assumption fails
  int assumption_agent = 0;
  std::size_t guarantee = 0;
  double margin = std::numeric_limits<double>::infinity();
};

inline BreakIndices break_indices(const RobustnessTrace& tr, const Contract& c) {
  BreakIndices b;
  const std::size_t n = tr.samples();
  b.assumption = n;
  for (const auto& a : c.assumptions) {
    const std::size_t k = first_break(tr, a);
    if (k < b.assumption) {
      b.assumption = k;
      b.assumption_agent = a.agent;
    }
  }
  b.guarantee = first_break(tr, c.guarantee);
  const auto& r = tr.of(c.guarantee.agent);
  for (std::size_t k = 0; k < r.size(); ++k) b.margin = std::min(b.margin, c.guarantee.distance(r[k], tr.time(k)));
  return b;
}

namespace detail {

inline Verdict make_verdict(const RobustnessTrace& tr, const Contract& c, const BreakIndices& b, bool ok) {
  Verdict v;
  v.agent = c.agent;
  v.satisfied = ok;
  v.margin = b.margin;
  const std::size_t n = tr.samples();
  if (b.guarantee < n && b.guarantee <= b.assumption) {
    v.first_violation = Violation{tr.time(b.guarantee), "guarantee_break"};
  } else if (b.assumption < n) {
    v.first_violation = Violation{tr.time(b.assumption), "assumption_break_" + std::to_string(b.assumption_agent)};
  } else if (b.guarantee < n) {
    v.first_violation = Violation{tr.time(b.guarantee), "guarantee_break"};
  }
  return v;
}

}  // namespace detail

/// Guarantee holds at every grid point up to the last one at which all
/// assumptions have held so far.
inline Verdict monitor_weak(const RobustnessTrace& tr, const Contract& c) {
  const BreakIndices b = break_indices(tr, c);
  return detail::make_verdict(tr, c, b, b.guarantee >= b.assumption);
}

/// Whenever assumptions held on [0, t], the guarantee holds on [0, t + delta]
/// (clipped to the end of the trace).
inline Verdict monitor_uniform_strong(const RobustnessTrace& tr, const Contract& c, double delta) {
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  if (delta < tr.dt * (1.0 - 1e-9)) throw PreconditionError("delta is smaller than the grid step");
  const double steps = delta / tr.dt;
  const auto d = static_cast<std::size_t>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(d)) > 1e-9 * std::max(1.0, steps))
    throw PreconditionError("delta must be a multiple of the grid step");
  const BreakIndices b = break_indices(tr, c);
  const std::size_t n = tr.samples();
  const bool ok = b.assumption == 0 || b.guarantee >= std::min(b.assumption + d, n);
  return detail::make_verdict(tr, c, b, ok);
}

/// Cluster contract: product of the member assumptions, intersection of the
/// member guarantees. Monitored weakly.
inline Verdict monitor_cluster_weak(const RobustnessTrace& tr, const std::vector<Contract>& members) {
  Verdict v;
  std::size_t ka = tr.samples();
  std::size_t kg = tr.samples();
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& c : members) {
    const BreakIndices b = break_indices(tr, c);
    ka = std::min(ka, b.assumption);
    kg = std::min(kg, b.guarantee);
    margin = std::min(margin, b.margin);
  }
  v.agent = members.empty() ? 0 : members.front().agent;
  v.satisfied = kg >= ka;
  v.margin = margin;
  if (kg < tr.samples()) v.first_violation = Violation{tr.time(kg), "guarantee_break"};
  return v;
}

/// Every guarantee holds at every grid point.
inline bool global_guarantee_holds(const RobustnessTrace& tr, const std::vector<Contract>& contracts) {
  return std::all_of(contracts.begin(), contracts.end(),
                     [&](const Contract& c) { return first_break(tr, c.guarantee) == tr.samples(); });
}

enum class Theorem { dag, cyclic };

inline std::string theorem_name(Theorem t) { return t == Theorem::dag ? "Thm1_DAG" : "Thm2_cyclic"; }

struct Condition {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct CompositionCertificate {
  Theorem theorem_used = Theorem::dag;
  std::vector<Condition> conditions;

  bool pass() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; });
  }
};

/// Structural part of the certificate. `rho0[i-1]` is the body robustness of
/// agent i's task at the initial state. Per-agent monitor verdicts, when
/// available, are appended with `add_monitor_conditions`.
inline CompositionCertificate check_composition(const std::vector<Contract>& contracts, const CompositionTopology& topo,
                                                const std::vector<double>& rho0) {
  CompositionCertificate cert;
  cert.theorem_used = topo.clusters.acyclic ? Theorem::dag : Theorem::cyclic;
  {
    Condition c{"cluster_interconnection", true, ""};
    if (topo.clusters.acyclic) {
      c.detail = "acyclic over " + std::to_string(topo.partition.size()) + " clusters";
    } else {
      c.detail = "cycle through clusters";
      for (int k : topo.clusters.cycle) c.detail += " " + std::to_string(k);
    }
    cert.conditions.push_back(std::move(c));
  }

  // assumption of i about j must be exactly j's guarantee
  Condition match{"assumption_guarantee_match", true, ""};
  for (const auto& c : contracts) {
    const auto expected = topo.adversarial_neighbors(c.agent);
    std::vector<int> keys;
    for (const auto& a : c.assumptions) keys.push_back(a.agent);
    if (keys != expected) {
      match.pass = false;
      match.detail += "agent " + std::to_string(c.agent) + ": assumptions not keyed by its adversarial neighbors; ";
    }
    for (const auto& a : c.assumptions) {
      if (a.agent < 1 || a.agent > static_cast<int>(contracts.size())) continue;
      const auto& g = contracts[static_cast<std::size_t>(a.agent - 1)].guarantee;
      if (!a.same_funnel(g)) {
        match.pass = false;
        match.detail += "(" + std::to_string(a.agent) + ", " + std::to_string(c.agent) + ") ";
      }
    }
  }
  if (match.pass) match.detail = "every assumption equals the neighbor's guarantee";
  else match.detail = "mismatched pairs (j, i): " + match.detail;
  cert.conditions.push_back(std::move(match));

  if (cert.theorem_used == Theorem::cyclic) {
    Condition init{"initial_containment", true, ""};
    std::size_t bad = 0;
    for (const auto& c : contracts) {
      const double r = rho0.at(static_cast<std::size_t>(c.agent - 1));
      if (!c.guarantee.holds(r, 0.0)) {
        init.pass = false;
        if (++bad <= 20) init.detail += std::to_string(c.agent) + " ";
      }
    }
    init.detail = init.pass ? "all " + std::to_string(contracts.size()) + " agents start inside their funnels"
                            : "agents outside their funnel at t = 0: " + init.detail;
    cert.conditions.push_back(std::move(init));
  }
  cert.conditions.push_back({"satisfaction_mode", true,
                             cert.theorem_used == Theorem::dag ? "weak satisfaction per agent"
                                                               : "uniform strong satisfaction per agent"});
  return cert;
}

/// Appends the per-agent satisfaction conditions from simulated monitors:
/// weak verdicts always, uniform-strong ones (direct delta shift and
/// eps-expanded weak route) on the cyclic path.
inline void add_monitor_conditions(CompositionCertificate& cert, const std::vector<Verdict>& weak,
                                   const std::vector<Verdict>& strong, const std::vector<Verdict>& expanded) {
  auto summarize = [](const std::string& name, const std::vector<Verdict>& vs) {
    Condition c{name, true, ""};
    std::size_t bad = 0;
    for (const auto& v : vs)
      if (!v.satisfied) {
        c.pass = false;
        if (++bad <= 20) c.detail += std::to_string(v.agent) + " ";
      }
    c.detail = c.pass ? "all " + std::to_string(vs.size()) + " agents" : "failing agents: " + c.detail;
    return c;
  };
  cert.conditions.push_back(summarize("per_agent_weak", weak));
  if (cert.theorem_used == Theorem::cyclic) {
    cert.conditions.push_back(summarize("per_agent_uniform_strong", strong));
    cert.conditions.push_back(summarize("per_agent_expanded_weak", expanded));
  }
}

}  // namespace stlagc
