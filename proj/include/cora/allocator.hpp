#pragma once

// Per-slot allocation: minimise  sum_k Q_k r_k + theta * h(C + a.r)  over the
// box 0 <= r <= B. The objective is non-convex, but for a fixed total effect
// E = a.r the cheapest way to buy E is to fill resources in non-increasing
// order of a_k / Q_k (a fractional knapsack). So the optimum is one of K+1
// prefix-fill candidates, and inside each candidate only the box endpoints and
// the stationary points of a scalar function need to be compared.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cora/classifier.hpp"
#include "cora/domain.hpp"

namespace cora {

struct SlotProblem {
  double offset = 0.0;             ///< C = -w.x - w0
  std::vector<double> efficiency;  ///< a = -Z^T w
  std::vector<double> queues;      ///< Q
  std::vector<double> caps;        ///< B
  double theta = 0.0;
  std::vector<bool> excluded;      ///< resources pinned to zero (a_k <= 0); empty means none

  std::size_t size() const { return efficiency.size(); }

  bool active(std::size_t k) const {
    if (!excluded.empty() && excluded[k]) return false;
    return efficiency[k] > 0.0;
  }

  std::size_t active_count() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < size(); ++k) n += active(k) ? 1 : 0;
    return n;
  }

  void validate() const {
    detail::require(queues.size() == size() && caps.size() == size(), "SlotProblem: dimension mismatch");
    detail::require(excluded.empty() || excluded.size() == size(), "SlotProblem: exclusion mask size mismatch");
    detail::require(theta >= 0.0 && std::isfinite(theta), "SlotProblem: theta must be finite and >= 0");
    for (std::size_t k = 0; k < size(); ++k) {
      detail::require(queues[k] >= 0.0 && caps[k] >= 0.0, "SlotProblem: negative queue or cap");
    }
  }
};

/// C = -w.x - w0, a = -Z^T w. Resources with a_k <= 0 only hurt (or do
/// nothing), so they are excluded and pinned to zero.
inline SlotProblem build_slot_problem(const ClassifierWeights& w, const FeatureVector& x, const CoefficientMatrix& z,
                                      const VirtualQueueState& q, const ResourceVector& caps, double theta) {
  detail::require(w.weights.size() == x.size() && z.rows == x.size(), "build_slot_problem: feature dimension mismatch");
  detail::require(z.cols == q.size() && q.size() == caps.size(), "build_slot_problem: resource dimension mismatch");
  SlotProblem p;
  p.offset = -logit(w, x.values);
  p.efficiency.assign(z.cols, 0.0);
  for (std::size_t k = 0; k < z.cols; ++k) {
    double a = 0.0;
    for (std::size_t d = 0; d < z.rows; ++d) a -= z(d, k) * w.weights[d];
    p.efficiency[k] = a;
  }
  p.queues = q.lengths;
  p.caps = caps.values;
  p.theta = theta;
  p.excluded.assign(z.cols, false);
  for (std::size_t k = 0; k < z.cols; ++k) p.excluded[k] = !(p.efficiency[k] > 0.0);
  return p;
}

inline SlotProblem build_slot_problem(const ClassifierWeights& w, const FeatureVector& x, const CoefficientMatrix& z,
                                      const VirtualQueueState& q, const ResourceBudget& budget, double theta) {
  return build_slot_problem(w, x, z, q, budget.per_slot_cap, theta);
}

inline double predicted_after(const SlotProblem& p, const ResourceVector& r) {
  double y = p.offset;
  for (std::size_t k = 0; k < p.size(); ++k) y += p.efficiency[k] * r[k];
  return sigmoid(y);
}

/// sum_k Q_k r_k + theta * h(C + a.r).
inline double per_slot_objective(const SlotProblem& p, const ResourceVector& r) {
  detail::require(r.size() == p.size(), "per_slot_objective: dimension mismatch");
  double cost = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double slack = 1e-12 * std::max(1.0, p.caps[k]);
    if (r[k] < -slack || r[k] > p.caps[k] + slack)
      throw std::invalid_argument("per_slot_objective: r_" + std::to_string(k) + " outside [0, B_k]");
    cost += p.queues[k] * r[k];
  }
  return cost + p.theta * predicted_after(p, r);
}

/// Active resources sorted by a_k / Q_k, highest first. Q_k = 0 counts as
/// +infinity; those are ordered by a_k descending. Remaining ties keep index order.
inline std::vector<std::size_t> priority_order(const SlotProblem& p) {
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p.active(k)) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const bool fi = p.queues[i] == 0.0;
    const bool fj = p.queues[j] == 0.0;
    if (fi != fj) return fi;
    if (fi) return p.efficiency[i] > p.efficiency[j];
    return p.efficiency[i] / p.queues[i] > p.efficiency[j] / p.queues[j];
  });
  return order;
}

namespace detail {

inline constexpr double kLogArgFloor = 1e-12;
inline constexpr double kDiscriminantSlack = 1e-12;

/// Stationary points of Q r + theta h(partial + a r) in terms of
/// s = exp(partial + a r): Q s^2 + (2Q - theta a) s + Q = 0.
struct StationaryRoots {
  bool exists = false;
  double plus = 0.0;   ///< larger root: local minimum (convex side of h)
  double minus = 0.0;  ///< smaller root: local maximum
};

inline StationaryRoots stationary_roots(double theta, double a, double q) {
  StationaryRoots out;
  if (q <= 0.0 || a <= 0.0 || theta <= 0.0) return out;
  double disc = theta * theta * a * a - 4.0 * theta * a * q;
  if (disc < 0.0) {
    if (disc < -kDiscriminantSlack * theta * theta * a * a) return out;
    disc = 0.0;
  }
  const double root = std::sqrt(disc);
  out.exists = true;
  out.plus = -1.0 + (theta * a + root) / (2.0 * q);
  out.minus = -1.0 + (theta * a - root) / (2.0 * q);
  return out;
}

inline double resource_from_log(double s, double partial, double a, double cap) {
  if (!(s > kLogArgFloor)) return 0.0;
  return std::clamp((std::log(s) - partial) / a, 0.0, cap);
}

}  // namespace detail

/// Closed-form amount of resource k once all higher-priority resources are
/// saturated; partial = C + sum of a_j B_j over those resources.
inline double closed_form_rk(const SlotProblem& p, std::size_t k, double partial) {
  const double a = p.efficiency[k];
  const double q = p.queues[k];
  const double cap = p.caps[k];
  if (q == 0.0) return cap;
  if (!(a > 0.0) || q > p.theta * a / 4.0) return 0.0;
  const auto roots = detail::stationary_roots(p.theta, a, q);
  if (!roots.exists) return 0.0;
  return detail::resource_from_log(roots.plus, partial, a, cap);
}

struct AllocationCandidate {
  std::size_t resources = 0;  ///< how many resources (in priority order) this candidate touches
  ResourceVector allocation;
  double objective = 0.0;
  bool passes_gate = true;  ///< theta h'(partial) < -Q_k / a_k at the boundary resource
};

struct SlotSolution {
  ResourceVector allocation;
  double objective = 0.0;
  std::vector<std::size_t> order;
  std::vector<AllocationCandidate> candidates;  ///< filled only when requested
};

struct SolveOptions {
  /// Keep only candidates whose boundary resource passes the sufficient
  /// allocation condition (plus the zero candidate). Off by default: the
  /// condition is sufficient, not necessary, and dropping candidates loses
  /// the optimum for strongly positive users.
  bool restrict_to_gated = false;
  bool keep_candidates = false;
};

inline SlotSolution solve_per_slot_detailed(const SlotProblem& p, const SolveOptions& opt = {}) {
  p.validate();
  const std::size_t n = p.size();
  SlotSolution sol;
  sol.order = priority_order(p);

  const double base_obj = p.theta * sigmoid(p.offset);
  double best_obj = base_obj;
  std::size_t best_count = 0;
  double best_last = 0.0;
  if (opt.keep_candidates) sol.candidates.push_back({0, ResourceVector::zeros(n), base_obj, true});

  double prefix_cost = 0.0;
  double partial = p.offset;
  for (std::size_t pos = 0; pos < sol.order.size(); ++pos) {
    const std::size_t k = sol.order[pos];
    const double a = p.efficiency[k];
    const double q = p.queues[k];
    const double cap = p.caps[k];

    auto value = [&](double r) { return prefix_cost + q * r + p.theta * sigmoid(partial + a * r); };

    // Box endpoints, the closed-form local minimum and the other stationary
    // point; whichever is lowest represents this candidate.
    double r_best = 0.0;
    double v_best = value(0.0);
    auto consider = [&](double r) {
      const double v = value(r);
      if (v < v_best) {
        v_best = v;
        r_best = r;
      }
    };
    consider(closed_form_rk(p, k, partial));
    if (q > 0.0) {
      const auto roots = detail::stationary_roots(p.theta, a, q);
      if (roots.exists) consider(detail::resource_from_log(roots.minus, partial, a, cap));
    }
    consider(cap);

    const double threshold = q == 0.0 ? 0.0 : -q / a;
    const bool gate = p.theta * sigmoid_derivative(partial) < threshold;

    if (opt.keep_candidates) {
      ResourceVector r = ResourceVector::zeros(n);
      for (std::size_t j = 0; j < pos; ++j) r[sol.order[j]] = p.caps[sol.order[j]];
      r[k] = r_best;
      sol.candidates.push_back({pos + 1, std::move(r), v_best, gate});
    }
    if ((gate || !opt.restrict_to_gated) && v_best < best_obj) {
      best_obj = v_best;
      best_count = pos + 1;
      best_last = r_best;
    }

    prefix_cost += q * cap;
    partial += a * cap;
  }

  sol.allocation = ResourceVector::zeros(n);
  for (std::size_t j = 0; j + 1 < best_count; ++j) sol.allocation[sol.order[j]] = p.caps[sol.order[j]];
  if (best_count > 0) sol.allocation[sol.order[best_count - 1]] = best_last;
  sol.objective = best_obj;
  return sol;
}

inline ResourceVector solve_per_slot(const SlotProblem& p) { return solve_per_slot_detailed(p).allocation; }

/// Exhaustive search on {0, step, 2 step, ..., B_k} per active resource.
/// Returns the lexicographically first minimiser. At most three active resources.
inline ResourceVector grid_oracle(const SlotProblem& p, double step) {
  p.validate();
  detail::require(step > 0.0 && std::isfinite(step), "grid_oracle: step must be positive");
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p.active(k)) dims.push_back(k);
  if (dims.size() > 3) throw UnsupportedError("grid_oracle: more than 3 active resources");

  auto axis = [&](std::size_t k) {
    std::vector<double> pts;
    const double cap = p.caps[k];
    const auto n = static_cast<long>(std::floor(cap / step + 1e-9));
    for (long j = 0; j <= n; ++j) pts.push_back(std::min(static_cast<double>(j) * step, cap));
    if (cap - pts.back() > 1e-12) pts.push_back(cap);
    return pts;
  };

  // Pad to three axes; missing axes are the single point {0} on a dummy resource.
  std::vector<std::vector<double>> grid;
  std::vector<double> a, q;
  for (std::size_t k : dims) {
    grid.push_back(axis(k));
    a.push_back(p.efficiency[k]);
    q.push_back(p.queues[k]);
  }
  while (grid.size() < 3) {
    grid.insert(grid.begin(), std::vector<double>{0.0});
    a.insert(a.begin(), 0.0);
    q.insert(q.begin(), 0.0);
  }

  // Innermost axis: precompute exp(a r) so each point costs one multiply.
  const auto& inner = grid[2];
  double inner_span = 0.0;
  for (double r : inner) inner_span = std::max(inner_span, a[2] * r);
  std::vector<double> inner_exp(inner.size()), inner_cost(inner.size());
  for (std::size_t j = 0; j < inner.size(); ++j) {
    inner_exp[j] = std::exp(a[2] * inner[j]);
    inner_cost[j] = q[2] * inner[j];
  }

  double best = std::numeric_limits<double>::infinity();
  std::size_t bi = 0, bj = 0, bk = 0;
  for (std::size_t i = 0; i < grid[0].size(); ++i) {
    for (std::size_t j = 0; j < grid[1].size(); ++j) {
      const double y0 = p.offset + a[0] * grid[0][i] + a[1] * grid[1][j];
      const double c0 = q[0] * grid[0][i] + q[1] * grid[1][j];
      const bool safe = std::abs(y0) < 600.0 && inner_span < 100.0;
      const double e0 = safe ? std::exp(y0) : 0.0;
      for (std::size_t k = 0; k < inner.size(); ++k) {
        const double h = safe ? 1.0 / (1.0 + e0 * inner_exp[k]) : sigmoid(y0 + a[2] * inner[k]);
        const double v = c0 + inner_cost[k] + p.theta * h;
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
          bk = k;
        }
      }
    }
  }

  ResourceVector r = ResourceVector::zeros(p.size());
  const std::size_t pad = 3 - dims.size();
  const std::size_t idx[3] = {bi, bj, bk};
  for (std::size_t m = 0; m < dims.size(); ++m) r[dims[m]] = grid[pad + m][idx[pad + m]];
  return r;
}

/// Optimality diagnostics for a box-constrained allocation.
struct KktReport {
  double max_interior_residual = 0.0;  ///< |theta a_k h'(y) + Q_k| where 0 < r_k < B_k
  double min_upper_multiplier = 0.0;   ///< tau_k = -theta a_k h'(y) - Q_k where r_k = B_k (should be >= 0)
  double min_lower_multiplier = 0.0;   ///< v_k = theta a_k h'(y) + Q_k where r_k = 0 (should be >= 0)
  bool sequential = true;              ///< r_k > 0 implies every higher-priority resource is saturated
};

inline KktReport check_kkt(const SlotProblem& p, const ResourceVector& r, double tol = 1e-9) {
  KktReport rep;
  double y = p.offset;
  for (std::size_t k = 0; k < p.size(); ++k) y += p.efficiency[k] * r[k];
  const double hp = sigmoid_derivative(y);
  double min_tau = std::numeric_limits<double>::infinity();
  double min_v = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!p.active(k)) continue;
    const double grad = p.theta * p.efficiency[k] * hp + p.queues[k];
    const double scale = tol * std::max(1.0, p.caps[k]);
    const bool at_zero = r[k] <= scale;
    const bool at_cap = r[k] >= p.caps[k] - scale;
    if (at_zero) min_v = std::min(min_v, grad);
    if (at_cap) min_tau = std::min(min_tau, -grad);
    if (!at_zero && !at_cap) rep.max_interior_residual = std::max(rep.max_interior_residual, std::abs(grad));
  }
  rep.min_upper_multiplier = std::isinf(min_tau) ? 0.0 : min_tau;
  rep.min_lower_multiplier = std::isinf(min_v) ? 0.0 : min_v;

  const auto order = priority_order(p);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t k = order[pos];
    if (r[k] <= 0.0) continue;
    for (std::size_t j = 0; j < pos; ++j) {
      const std::size_t kk = order[j];
      if (r[kk] < p.caps[kk] - tol * std::max(1.0, p.caps[kk])) rep.sequential = false;
    }
  }
  return rep;
}

}  // namespace cora
