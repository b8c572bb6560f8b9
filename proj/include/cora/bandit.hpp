#pragma once

// UCB estimate of the D x K resource coefficient matrix. Each (feature,
// resource) entry is an arm; a pull of r units of resource k yields reward
// z_{d,k} r for every feature d, and L counts resource units, not pulls.

#include <cmath>

#include "cora/domain.hpp"

namespace cora {

struct BanditState {
  CoefficientMatrix mean_reward;  ///< psi-bar
  CoefficientMatrix pulls;        ///< L, cumulative resource units
  double exploration_coeff = 1.0;
  long horizon = 2;

  static BanditState fresh(std::size_t features, std::size_t resources, double c, long horizon) {
    return {CoefficientMatrix(features, resources), CoefficientMatrix(features, resources), c, horizon};
  }
};

/// Index returned for an arm that has never been pulled. Coefficients live in
/// [0, 1], so 1 is the most optimistic finite value.
inline constexpr double kUnpulledIndex = 1.0;

/// psi-hat = psi-bar + c sqrt(log T / L), with the fixed horizon T.
inline CoefficientMatrix ucb_index(const BanditState& b) {
  detail::require(b.horizon >= 2, "ucb_index: horizon must be >= 2");
  const double log_t = std::log(static_cast<double>(b.horizon));
  CoefficientMatrix out(b.mean_reward.rows, b.mean_reward.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double l = b.pulls.data[i];
    out.data[i] = l > 0.0 ? b.mean_reward.data[i] + b.exploration_coeff * std::sqrt(log_t / l) : kUnpulledIndex;
  }
  return out;
}

/// Weighted running average: L' = L + r_k, psi' = (psi L + z r_k) / L'.
inline BanditState observe(const BanditState& b, const CoefficientMatrix& z_true, const ResourceVector& r) {
  detail::require(z_true.rows == b.mean_reward.rows && z_true.cols == b.mean_reward.cols && r.size() == z_true.cols,
                  "observe: dimension mismatch");
  BanditState next = b;
  for (std::size_t k = 0; k < r.size(); ++k) {
    detail::require(r[k] >= 0.0, "observe: negative allocation");
    if (r[k] == 0.0) continue;
    for (std::size_t d = 0; d < z_true.rows; ++d) {
      const double l = b.pulls(d, k);
      const double l_next = l + r[k];
      next.mean_reward(d, k) = (b.mean_reward(d, k) * l + z_true(d, k) * r[k]) / l_next;
      next.pulls(d, k) = l_next;
    }
  }
  return next;
}

}  // namespace cora
