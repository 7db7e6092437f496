#pragma once

// Signal temporal logic fragment: predicates, conjunctive boolean bodies,
// the F / G / FG temporal operators and their (space) robustness.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stlagc/errors.hpp"

namespace stlagc {

/// One scalar entry of the multi-agent state: agent id (1-based) and
/// component index (0-based).
struct StateRef {
  int agent = 0;
  int index = 0;

  friend auto operator<=>(const StateRef&, const StateRef&) = default;
};

enum class PredicateFamily { linear, norm_ball, concave_quadratic };

/// How a conjunction of literals is turned into a single robustness value.
enum class Conjunction { exact, smooth };

/// Added to ||S y - c|| in the norm-ball gradient so the center is not singular.
inline constexpr double kNormRegularizer = 1e-9;

/// Per-agent gradient blocks below this norm are reported as degenerate.
inline constexpr double kGradientFloor = 1e-8;

/// Predicate function over a selection y of state entries.
///
///   linear             w . y + d
///   norm_ball          d - ||S y - c||
///   concave_quadratic  d - (S y - c)^T Q (S y - c)
///
/// Every family is concave in y when Q is positive semidefinite.
class Predicate {
 public:
  static Predicate linear(std::vector<StateRef> selector, Eigen::RowVectorXd weights, double offset) {
    if (weights.size() != static_cast<Eigen::Index>(selector.size()))
      throw DimensionError("linear predicate: weight count does not match selector");
    Predicate p;
    p.family_ = PredicateFamily::linear;
    p.selector_ = std::move(selector);
    p.map_ = weights;
    p.offset_ = offset;
    return p;
  }

  static Predicate norm_ball(std::vector<StateRef> selector, Eigen::MatrixXd map, Eigen::VectorXd center,
                             double radius) {
    check_projection(selector, map, center);
    Predicate p;
    p.family_ = PredicateFamily::norm_ball;
    p.selector_ = std::move(selector);
    p.map_ = std::move(map);
    p.center_ = std::move(center);
    p.offset_ = radius;
    return p;
  }

  static Predicate concave_quadratic(std::vector<StateRef> selector, Eigen::MatrixXd map, Eigen::VectorXd center,
                                     Eigen::MatrixXd weight, double level) {
    check_projection(selector, map, center);
    if (weight.rows() != map.rows() || weight.cols() != map.rows())
      throw DimensionError("concave_quadratic predicate: Q must be square with one row per projected entry");
    Predicate p;
    p.family_ = PredicateFamily::concave_quadratic;
    p.selector_ = std::move(selector);
    p.map_ = std::move(map);
    p.center_ = std::move(center);
    p.weight_ = std::move(weight);
    p.offset_ = level;
    return p;
  }

  PredicateFamily family() const noexcept { return family_; }
  const std::vector<StateRef>& selector() const noexcept { return selector_; }
  /// S for norm_ball / concave_quadratic, the 1 x m weight row for linear.
  const Eigen::MatrixXd& map() const noexcept { return map_; }
  const Eigen::VectorXd& center() const noexcept { return center_; }
  const Eigen::MatrixXd& weight() const noexcept { return weight_; }
  double offset() const noexcept { return offset_; }

  /// Concave as a literal (possibly negated).
  bool concave(bool negated) const {
    switch (family_) {
      case PredicateFamily::linear:
        return true;
      case PredicateFamily::norm_ball:
        return !negated;
      case PredicateFamily::concave_quadratic: {
        if (negated) return false;
        Eigen::MatrixXd sym = 0.5 * (weight_ + weight_.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
        return eig.eigenvalues().minCoeff() >= -1e-12;
      }
    }
    return false;
  }

  double value(std::span<const double> y) const {
    check_size(y.size());
    return evaluate([&](std::size_t k) { return y[k]; });
  }

  Eigen::VectorXd gradient(std::span<const double> y) const {
    check_size(y.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(selector_.size()));
    accumulate(
        [&](std::size_t k) { return y[k]; }, 1.0,
        [&](std::size_t k, double v) { g[static_cast<Eigen::Index>(k)] += v; });
    return g;
  }

  /// Reads selector entry k at y[idx[k]].
  double value(std::span<const double> y, std::span<const int> idx) const {
    return evaluate([&](std::size_t k) { return y[static_cast<std::size_t>(idx[k])]; });
  }

  /// Adds scale * gradient into out[idx[k]] and returns the predicate value.
  double accumulate_gradient(std::span<const double> y, std::span<const int> idx, double scale,
                             std::span<double> out) const {
    return accumulate(
        [&](std::size_t k) { return y[static_cast<std::size_t>(idx[k])]; }, scale,
        [&](std::size_t k, double v) { out[static_cast<std::size_t>(idx[k])] += v; });
  }

 private:
  Predicate() = default;

  static void check_projection(const std::vector<StateRef>& selector, const Eigen::MatrixXd& map,
                               const Eigen::VectorXd& center) {
    if (map.cols() != static_cast<Eigen::Index>(selector.size()))
      throw DimensionError("predicate: S has " + std::to_string(map.cols()) + " columns, selector has " +
                           std::to_string(selector.size()) + " entries");
    if (center.size() != map.rows()) throw DimensionError("predicate: center size does not match rows of S");
  }

  void check_size(std::size_t n) const {
    if (n != selector_.size())
      throw DimensionError("predicate expects " + std::to_string(selector_.size()) + " entries, got " +
                           std::to_string(n));
  }

  template <class Get>
  double projected(Get&& get, Eigen::Index r) const {
    double v = -center_[r];
    for (Eigen::Index j = 0; j < map_.cols(); ++j) v += map_(r, j) * get(static_cast<std::size_t>(j));
    return v;
  }

  template <class Get>
  double evaluate(Get&& get) const {
    switch (family_) {
      case PredicateFamily::linear: {
        double v = offset_;
        for (Eigen::Index j = 0; j < map_.cols(); ++j) v += map_(0, j) * get(static_cast<std::size_t>(j));
        return v;
      }
      case PredicateFamily::norm_ball: {
        double sq = 0.0;
        for (Eigen::Index r = 0; r < map_.rows(); ++r) {
          const double v = projected(get, r);
          sq += v * v;
        }
        return offset_ - std::sqrt(sq);
      }
      case PredicateFamily::concave_quadratic: {
        Eigen::VectorXd v(map_.rows());
        for (Eigen::Index r = 0; r < map_.rows(); ++r) v[r] = projected(get, r);
        return offset_ - v.dot(weight_ * v);
      }
    }
    return 0.0;
  }

  template <class Get, class Add>
  double accumulate(Get&& get, double scale, Add&& add) const {
    switch (family_) {
      case PredicateFamily::linear: {
        for (Eigen::Index j = 0; j < map_.cols(); ++j) add(static_cast<std::size_t>(j), scale * map_(0, j));
        return evaluate(get);
      }
      case PredicateFamily::norm_ball: {
        double sq = 0.0;
        for (Eigen::Index r = 0; r < map_.rows(); ++r) {
          const double v = projected(get, r);
          sq += v * v;
        }
        const double norm = std::sqrt(sq);
        const double factor = -scale / (norm + kNormRegularizer);
        for (Eigen::Index r = 0; r < map_.rows(); ++r) {
          const double v = projected(get, r);
          for (Eigen::Index j = 0; j < map_.cols(); ++j)
            add(static_cast<std::size_t>(j), factor * v * map_(r, j));
        }
        return offset_ - norm;
      }
      case PredicateFamily::concave_quadratic: {
        Eigen::VectorXd v(map_.rows());
        for (Eigen::Index r = 0; r < map_.rows(); ++r) v[r] = projected(get, r);
        const Eigen::VectorXd qv = (weight_ + weight_.transpose()) * v;
        const Eigen::VectorXd g = -scale * (map_.transpose() * qv);
        for (Eigen::Index j = 0; j < g.size(); ++j) add(static_cast<std::size_t>(j), g[j]);
        return offset_ - v.dot(weight_ * v);
      }
    }
    return 0.0;
  }

  PredicateFamily family_ = PredicateFamily::linear;
  std::vector<StateRef> selector_;
  Eigen::MatrixXd map_;
  Eigen::VectorXd center_;
  Eigen::MatrixXd weight_;
  double offset_ = 0.0;
};

struct Literal {
  Predicate predicate;
  bool negated = false;
};

/// -ln(sum_k exp(-v_k)), shifted by the largest exponent so nothing overflows.
inline double smooth_min(std::span<const double> values) {
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : values) shift = std::max(shift, -v);
  double sum = 0.0;
  for (double v : values) sum += std::exp(-v - shift);
  return -(shift + std::log(sum));
}

/// Conjunction of literals; the robustness is evaluated on the stacked
/// vector of its support (sorted, de-duplicated state entries it reads).
class BooleanFormula {
 public:
  BooleanFormula() = default;

  explicit BooleanFormula(std::vector<Literal> literals) : literals_(std::move(literals)) {
    if (literals_.empty()) throw PreconditionError("boolean formula needs at least one literal");
    for (const auto& lit : literals_)
      support_.insert(support_.end(), lit.predicate.selector().begin(), lit.predicate.selector().end());
    std::sort(support_.begin(), support_.end());
    support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
    index_.reserve(literals_.size());
    for (const auto& lit : literals_) {
      std::vector<int> idx;
      idx.reserve(lit.predicate.selector().size());
      for (const auto& ref : lit.predicate.selector()) {
        auto it = std::lower_bound(support_.begin(), support_.end(), ref);
        idx.push_back(static_cast<int>(it - support_.begin()));
      }
      index_.push_back(std::move(idx));
    }
  }

  const std::vector<Literal>& literals() const noexcept { return literals_; }
  const std::vector<StateRef>& support() const noexcept { return support_; }
  std::size_t dimension() const noexcept { return support_.size(); }

  /// Agents read by the body, ascending.
  std::vector<int> agents() const {
    std::vector<int> ids;
    for (const auto& ref : support_)
      if (ids.empty() || ids.back() != ref.agent) ids.push_back(ref.agent);
    return ids;
  }

  double literal_value(std::size_t k, std::span<const double> y) const {
    const double v = literals_[k].predicate.value(y, index_[k]);
    return literals_[k].negated ? -v : v;
  }

  double value(std::span<const double> y, Conjunction mode) const {
    check(y.size());
    if (mode == Conjunction::exact) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < literals_.size(); ++k) m = std::min(m, literal_value(k, y));
      return m;
    }
    if (literals_.size() == 1) return literal_value(0, y);
    // streaming log-sum-exp of -rho_k
    double shift = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t k = 0; k < literals_.size(); ++k) {
      const double q = -literal_value(k, y);
      if (q > shift) {
        sum = sum * std::exp(shift - q) + 1.0;
        shift = q;
      } else {
        sum += std::exp(q - shift);
      }
    }
    return -(shift + std::log(sum));
  }

  /// Smooth-mode value; writes the gradient over the support into `grad`.
  double value_and_gradient(std::span<const double> y, std::span<double> grad) const {
    check(y.size());
    if (grad.size() != support_.size()) throw DimensionError("gradient buffer does not match support");
    std::fill(grad.begin(), grad.end(), 0.0);
    const double rho = value(y, Conjunction::smooth);
    // weight of literal k is exp(-rho_k) / sum_j exp(-rho_j) = exp(rho - rho_k)
    for (std::size_t k = 0; k < literals_.size(); ++k) {
      const double rk = literal_value(k, y);
      const double w = literals_.size() == 1 ? 1.0 : std::exp(rho - rk);
      const double sign = literals_[k].negated ? -1.0 : 1.0;
      literals_[k].predicate.accumulate_gradient(y, index_[k], sign * w, grad);
    }
    return rho;
  }

  Eigen::VectorXd gradient(std::span<const double> y) const {
    Eigen::VectorXd g(static_cast<Eigen::Index>(support_.size()));
    value_and_gradient(y, std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
    return g;
  }

 private:
  void check(std::size_t n) const {
    if (n != support_.size())
      throw DimensionError("boolean formula expects " + std::to_string(support_.size()) + " entries, got " +
                           std::to_string(n));
  }

  std::vector<Literal> literals_;
  std::vector<StateRef> support_;
  std::vector<std::vector<int>> index_;
};

/// Smooth gradient together with the per-agent blocks d rho / d x_i.
struct GradientReport {
  Eigen::VectorXd gradient;
  std::vector<std::pair<int, Eigen::VectorXd>> blocks;
  std::vector<int> degenerate_agents;  // blocks with norm below kGradientFloor

  bool degenerate() const noexcept { return !degenerate_agents.empty(); }
};

inline GradientReport grad_boolean_robust(const BooleanFormula& body, std::span<const double> y) {
  GradientReport report;
  report.gradient = body.gradient(y);
  const auto& support = body.support();
  std::size_t k = 0;
  while (k < support.size()) {
    std::size_t end = k;
    while (end < support.size() && support[end].agent == support[k].agent) ++end;
    Eigen::VectorXd block =
        report.gradient.segment(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(end - k));
    if (block.norm() < kGradientFloor) report.degenerate_agents.push_back(support[k].agent);
    report.blocks.emplace_back(support[k].agent, std::move(block));
    k = end;
  }
  return report;
}

/// Structural properties of a body needed by the controller design.
struct BodyAnalysis {
  bool concave = true;
  /// Superlevel sets are bounded modulo directions the body does not depend on.
  bool well_posed = false;
  /// Superlevel sets are bounded in every support direction.
  bool well_posed_strict = false;
  std::string detail;
};

inline BodyAnalysis analyze(const BooleanFormula& body) {
  BodyAnalysis out;
  const auto n = static_cast<Eigen::Index>(body.dimension());
  std::vector<Eigen::RowVectorXd> bounding_rows;
  std::vector<Eigen::RowVectorXd> all_rows;
  for (std::size_t k = 0; k < body.literals().size(); ++k) {
    const auto& lit = body.literals()[k];
    const auto& pred = lit.predicate;
    if (!pred.concave(lit.negated)) {
      out.concave = false;
      out.detail += "literal " + std::to_string(k + 1) + " is not concave; ";
    }
    // lift rows of S (or the weight row) from selector to support coordinates
    for (Eigen::Index r = 0; r < pred.map().rows(); ++r) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
      for (std::size_t j = 0; j < pred.selector().size(); ++j) {
        auto it = std::lower_bound(body.support().begin(), body.support().end(), pred.selector()[j]);
        row[it - body.support().begin()] += pred.map()(r, static_cast<Eigen::Index>(j));
      }
      all_rows.push_back(row);
      const bool bounding = !lit.negated && (pred.family() == PredicateFamily::norm_ball ||
                                             (pred.family() == PredicateFamily::concave_quadratic &&
                                              pred.concave(false)));
      if (bounding) bounding_rows.push_back(row);
    }
  }
  auto rank_of = [n](const std::vector<Eigen::RowVectorXd>& rows) -> Eigen::Index {
    if (rows.empty()) return 0;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    lu.setThreshold(1e-10);
    return lu.rank();
  };
  // A concave quadratic with a singular Q only bounds the range of Q; treat it
  // through its rows anyway and rely on the strict flag for full coverage.
  const Eigen::Index bounded = rank_of(bounding_rows);
  std::vector<Eigen::RowVectorXd> combined = bounding_rows;
  combined.insert(combined.end(), all_rows.begin(), all_rows.end());
  out.well_posed = bounded > 0 && rank_of(combined) == bounded;
  out.well_posed_strict = bounded == n;
  if (!out.well_posed) out.detail += "superlevel sets are unbounded; ";
  return out;
}

enum class TemporalOp { always, eventually, eventually_always };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// G[a,b] body, F[a,b] body, or F[a,b] G[c,d] body.
struct TemporalFormula {
  TemporalOp op = TemporalOp::always;
  Interval outer;  // the only interval of G / F, the F interval of FG
  Interval inner;  // the G interval of FG
  BooleanFormula body;
  std::vector<int> agents;  // involved agents, ascending
  std::string text;         // source text, when parsed

  /// Latest time (relative to evaluation time) the semantics looks at.
  double window_end() const { return op == TemporalOp::eventually_always ? outer.hi + inner.hi : outer.hi; }
};

/// Samples of a stacked state on the uniform grid t_k = t0 + k dt.
struct Signal {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<Eigen::VectorXd> samples;
};

namespace detail {

inline constexpr double kGridTolerance = 1e-9;

inline std::ptrdiff_t first_index_from(double time, double t0, double dt) {
  return static_cast<std::ptrdiff_t>(std::ceil((time - t0) / dt - kGridTolerance));
}

inline std::ptrdiff_t last_index_until(double time, double t0, double dt) {
  return static_cast<std::ptrdiff_t>(std::floor((time - t0) / dt + kGridTolerance));
}

}  // namespace detail

/// Sampled robustness together with the grid time that attains it: the
/// minimizing time for G, the maximizing time for F, and the maximizing
/// outer time t1 (whose inner window [t1 + c, t1 + d] realizes the value) for FG.
struct Witness {
  double value = 0.0;
  double t = 0.0;
};

/// Sampled robustness of `phi` at time t from the body robustness series
/// `body` on the grid t0 + k dt. The continuous min / max over an interval is
/// replaced by the min / max over grid points inside it.
inline Witness temporal_witness(const TemporalFormula& phi, std::span<const double> body, double dt, double t,
                                double t0 = 0.0) {
  if (!(dt > 0.0)) throw PreconditionError("grid step must be positive");
  const auto n = static_cast<std::ptrdiff_t>(body.size());
  const auto lo = detail::first_index_from(t + phi.outer.lo, t0, dt);
  const auto hi = detail::last_index_until(t + phi.outer.hi, t0, dt);
  if (lo < 0) throw PreconditionError("signal starts after the evaluation window");
  if (lo > hi) throw PreconditionError("evaluation window contains no grid point");
  auto at = [&](std::ptrdiff_t k) { return body[static_cast<std::size_t>(k)]; };
  auto time = [&](std::ptrdiff_t k) { return t0 + static_cast<double>(k) * dt; };

  if (phi.op != TemporalOp::eventually_always) {
    if (hi >= n)
      throw PreconditionError("signal grid does not cover the evaluation window (ends at t=" +
                              std::to_string(time(n - 1)) + ", window needs t=" + std::to_string(t + phi.outer.hi) +
                              ")");
    std::ptrdiff_t best = lo;
    for (std::ptrdiff_t k = lo + 1; k <= hi; ++k)
      if (phi.op == TemporalOp::always ? at(k) < at(best) : at(k) > at(best)) best = k;
    return {at(best), time(best)};
  }

  const auto ia = static_cast<std::ptrdiff_t>(std::ceil(phi.inner.lo / dt - detail::kGridTolerance));
  const auto ib = static_cast<std::ptrdiff_t>(std::floor(phi.inner.hi / dt + detail::kGridTolerance));
  if (ia > ib) throw PreconditionError("inner window contains no grid point");
  if (hi + ib >= n)
    throw PreconditionError("signal grid does not cover the evaluation window (ends at t=" +
                            std::to_string(time(n - 1)) + ", window needs t=" +
                            std::to_string(t + phi.outer.hi + phi.inner.hi) + ")");
  // sliding-window minimum over [k + ia, k + ib] for k = lo..hi
  std::deque<std::ptrdiff_t> window;
  Witness best{-std::numeric_limits<double>::infinity(), time(lo)};
  std::ptrdiff_t next = lo + ia;
  for (std::ptrdiff_t k = lo; k <= hi; ++k) {
    for (; next <= k + ib; ++next) {
      while (!window.empty() && at(window.back()) >= at(next)) window.pop_back();
      window.push_back(next);
    }
    while (window.front() < k + ia) window.pop_front();
    if (at(window.front()) > best.value) best = {at(window.front()), time(k)};
  }
  return best;
}

inline double temporal_robustness(const TemporalFormula& phi, std::span<const double> body, double dt, double t,
                                  double t0 = 0.0) {
  return temporal_witness(phi, body, dt, t, t0).value;
}

/// Robustness of `phi` at time t on a signal whose samples are stacked over
/// phi.body.support().
inline double eval_temporal_robust(const TemporalFormula& phi, const Signal& sig, double t,
                                   Conjunction mode = Conjunction::exact) {
  std::vector<double> body;
  body.reserve(sig.samples.size());
  for (const auto& x : sig.samples)
    body.push_back(phi.body.value(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), mode));
  return temporal_robustness(phi, body, sig.dt, t, sig.t0);
}

struct Optimum {
  double value = 0.0;
  Eigen::VectorXd argmax;
  int iterations = 0;
};

/// Global maximum of the smooth body robustness.
///
/// A single norm ball or concave quadratic is solved in closed form; any other
/// concave, well-posed body is maximized by backtracking gradient ascent started
/// from the least-squares point of all ball / quadratic centers.
inline Optimum rho_opt(const BooleanFormula& body, std::optional<Eigen::VectorXd> seed = std::nullopt,
                       double tolerance = 1e-8, int max_iterations = 200000) {
  const BodyAnalysis info = analyze(body);
  if (!info.concave) throw PreconditionError("rho_opt: body is not concave");
  if (!info.well_posed) throw PreconditionError("rho_opt: body robustness is unbounded above");

  const auto n = static_cast<Eigen::Index>(body.dimension());
  // least-squares seed over the stacked ball / quadratic systems S y = c
  Eigen::MatrixXd rows(0, n);
  Eigen::VectorXd rhs(0);
  for (const auto& lit : body.literals()) {
    const auto& p = lit.predicate;
    if (p.family() == PredicateFamily::linear || lit.negated) continue;
    Eigen::MatrixXd lifted = Eigen::MatrixXd::Zero(p.map().rows(), n);
    for (std::size_t j = 0; j < p.selector().size(); ++j) {
      auto it = std::lower_bound(body.support().begin(), body.support().end(), p.selector()[j]);
      lifted.col(it - body.support().begin()) += p.map().col(static_cast<Eigen::Index>(j));
    }
    Eigen::MatrixXd r2(rows.rows() + lifted.rows(), n);
    r2 << rows, lifted;
    Eigen::VectorXd b2(rhs.size() + p.center().size());
    b2 << rhs, p.center();
    rows = std::move(r2);
    rhs = std::move(b2);
  }
  Eigen::VectorXd x = seed ? *seed : Eigen::VectorXd(rows.completeOrthogonalDecomposition().solve(rhs));
  if (x.size() != n) throw DimensionError("rho_opt: seed dimension does not match the body support");

  auto f = [&](const Eigen::VectorXd& v) {
    return body.value(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), Conjunction::smooth);
  };

  const bool closed_form = body.literals().size() == 1 && !seed;
  if (closed_form) return {f(x), x, 0};

  double fx = f(x);
  double step = 1.0;
  int stalled = 0;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::VectorXd g = body.gradient(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
    const double gg = g.squaredNorm();
    if (gg < 1e-28) return {fx, x, it};
    step = std::min(step * 2.0, 1e6);
    bool moved = false;
    while (step > 1e-16) {
      Eigen::VectorXd cand = x + step * g;
      const double fc = f(cand);
      if (fc >= fx + 1e-4 * step * gg) {
        const double gain = fc - fx;
        x = std::move(cand);
        fx = fc;
        moved = true;
        stalled = gain < tolerance * std::max(1.0, std::abs(fx)) ? stalled + 1 : 0;
        break;
      }
      step *= 0.5;
    }
    // no sufficient ascent along the (regularized) gradient: a kink or the top
    if (!moved || stalled >= 50) return {fx, x, it};
  }
  throw ConvergenceError("rho_opt: gradient ascent did not converge within " + std::to_string(max_iterations) +
                         " iterations");
}

}  // namespace stlagc
