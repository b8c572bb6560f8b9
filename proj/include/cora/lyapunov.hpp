#pragma once

// Virtual queues for the long-term average resource constraint and the
// drift-plus-penalty quantities used to audit them at run time.

#include <algorithm>
#include <cmath>
#include <vector>

#include "cora/domain.hpp"

namespace cora {

/// Q_k <- max(Q_k + r_k - rbar_k, 0).
inline VirtualQueueState update_queue(const VirtualQueueState& q, const ResourceVector& r, const ResourceBudget& budget) {
  detail::require(q.size() == r.size() && r.size() == budget.size(), "update_queue: dimension mismatch");
  VirtualQueueState next = q;
  for (std::size_t k = 0; k < q.size(); ++k)
    next.lengths[k] = std::max(q.lengths[k] + r[k] - budget.long_term_avg[k], 0.0);
  return next;
}

/// V = 1/2 sum Q_k^2.
inline double lyapunov_value(const VirtualQueueState& q) {
  double s = 0.0;
  for (double v : q.lengths) s += v * v;
  return 0.5 * s;
}

/// Sample-path drift plus weighted penalty: V(next) - V(q) + theta * u.
inline double drift_plus_penalty(const VirtualQueueState& q, const VirtualQueueState& next, double theta, double u) {
  return lyapunov_value(next) - lyapunov_value(q) + theta * u;
}

/// D = 1/2 sum max(cap_k, rbar_k)^2, which dominates 1/2 sum (r_k - rbar_k)^2
/// for any 0 <= r_k <= cap_k.
inline double drift_bound_constant(const ResourceVector& caps, const ResourceVector& rbar) {
  double s = 0.0;
  for (std::size_t k = 0; k < caps.size(); ++k) {
    const double m = std::max(caps[k], rbar[k]);
    s += m * m;
  }
  return 0.5 * s;
}

/// Right-hand side of the per-slot bound: D + sum Q_k r_k + theta u.
inline double drift_plus_penalty_bound(const VirtualQueueState& q, const ResourceVector& r, double theta, double u,
                                       double drift_constant) {
  double s = drift_constant + theta * u;
  for (std::size_t k = 0; k < q.size(); ++k) s += q.lengths[k] * r[k];
  return s;
}

/// Running sums of (r_k - rbar_k) so that Q_k(T) >= sum_t (r_k(t) - rbar_k)
/// can be checked exactly at any point of a trajectory.
class ConstraintLedger {
 public:
  explicit ConstraintLedger(std::size_t k) : excess_(k, 0.0), used_(k, 0.0) {}

  void record(const ResourceVector& r, const ResourceBudget& budget) {
    for (std::size_t k = 0; k < excess_.size(); ++k) {
      excess_[k] += r[k] - budget.long_term_avg[k];
      used_[k] += r[k];
    }
    ++slots_;
  }

  const std::vector<double>& cumulative_excess() const { return excess_; }
  const std::vector<double>& cumulative_use() const { return used_; }
  long slots() const { return slots_; }

  /// True when Q_k >= cumulative excess - tol for every k.
  bool telescoping_holds(const VirtualQueueState& q, double tol = 1e-9) const {
    for (std::size_t k = 0; k < excess_.size(); ++k) {
      const double scale = std::max(1.0, std::abs(excess_[k]));
      if (q.lengths[k] < excess_[k] - tol * scale) return false;
    }
    return true;
  }

  /// (1/T) sum r_k <= rbar_k + Q_k(T)/T.
  bool average_constraint_holds(const VirtualQueueState& q, const ResourceBudget& budget, double tol = 1e-9) const {
    if (slots_ == 0) return true;
    const double t = static_cast<double>(slots_);
    for (std::size_t k = 0; k < used_.size(); ++k) {
      const double lhs = used_[k] / t;
      const double rhs = budget.long_term_avg[k] + q.lengths[k] / t;
      if (lhs > rhs + tol * std::max(1.0, std::abs(rhs))) return false;
    }
    return true;
  }

 private:
  std::vector<double> excess_;
  std::vector<double> used_;
  long slots_ = 0;
};

}  // namespace cora
