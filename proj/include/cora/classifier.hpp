#pragma once

// Logistic-regression classifier trained online by full-batch average
// gradient descent over the growing dataset.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "cora/domain.hpp"

namespace cora {

inline constexpr double kExponentClamp = 700.0;

/// h(x) = 1 / (1 + exp(x)). Decreasing; h(x) + h(-x) = 1.
inline double sigmoid(double x) {
  x = std::clamp(x, -kExponentClamp, kExponentClamp);
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

/// h'(x) = -exp(x) / (1 + exp(x))^2 = -h(x) h(-x).
inline double sigmoid_derivative(double x) { return -sigmoid(x) * sigmoid(-x); }

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// Logit of the positive class: w0 + w.x.
inline double logit(const ClassifierWeights& w, std::span<const double> x) {
  double z = w.intercept;
  for (std::size_t d = 0; d < x.size(); ++d) z += w.weights[d] * x[d];
  return z;
}

/// h(-w0 - w.x), the predicted complaint probability.
inline double predict_positive(const ClassifierWeights& w, const FeatureVector& x) {
  detail::require(w.weights.size() == x.size(), "predict_positive: dimension mismatch");
  return sigmoid(-logit(w, x.values));
}

/// Initial records followed by one online record per served user.
/// Stored flat (row-major) because the gradient sweeps it every slot.
class Dataset {
 public:
  explicit Dataset(std::size_t dim) : dim_(dim) {}

  Dataset(std::size_t dim, const std::vector<UserRecord>& initial) : dim_(dim) {
    for (const auto& r : initial) push(r);
    initial_count_ = labels_.size();
  }

  void add_online(const UserRecord& r) { push(r); }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t initial_size() const { return initial_count_; }
  std::size_t online_size() const { return labels_.size() - initial_count_; }

  std::span<const double> features(std::size_t i) const { return {features_.data() + i * dim_, dim_}; }
  int label(std::size_t i) const { return labels_[i]; }

  UserRecord record(std::size_t i) const {
    auto f = features(i);
    return {FeatureVector(std::vector<double>(f.begin(), f.end())), labels_[i]};
  }

 private:
  void push(const UserRecord& r) {
    detail::require(r.features.size() == dim_, "Dataset: feature dimension mismatch");
    detail::require(r.label == 0 || r.label == 1, "Dataset: label must be 0 or 1");
    features_.insert(features_.end(), r.features.begin(), r.features.end());
    labels_.push_back(r.label);
  }

  std::size_t dim_;
  std::size_t initial_count_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
};

/// Mean negative log-likelihood over every record in the dataset.
inline double cross_entropy_loss(const ClassifierWeights& w, const Dataset& data) {
  detail::require(!data.empty(), "cross_entropy_loss: empty dataset");
  detail::require(w.weights.size() == data.dim(), "cross_entropy_loss: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = logit(w, data.features(i));
    // -log p = softplus(-z), -log(1-p) = softplus(z)
    total += data.label(i) == 1 ? softplus(-z) : softplus(z);
  }
  return total / static_cast<double>(data.size());
}

/// Gradient of cross_entropy_loss: mean of (p_n - y_n) [1, x_n].
struct LossGradient {
  double intercept = 0.0;
  std::vector<double> weights;

  double squared_norm() const {
    double s = intercept * intercept;
    for (double g : weights) s += g * g;
    return s;
  }
};

inline LossGradient loss_gradient(const ClassifierWeights& w, const Dataset& data) {
  detail::require(!data.empty(), "loss_gradient: empty dataset");
  detail::require(w.weights.size() == data.dim(), "loss_gradient: dimension mismatch");
  LossGradient g{0.0, std::vector<double>(data.dim(), 0.0)};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.features(i);
    const double residual = sigmoid(-logit(w, x)) - data.label(i);
    g.intercept += residual;
    for (std::size_t d = 0; d < x.size(); ++d) g.weights[d] += residual * x[d];
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  g.intercept *= inv_n;
  for (double& v : g.weights) v *= inv_n;
  return g;
}

inline ClassifierWeights apply_gradient(const ClassifierWeights& w, const LossGradient& g, double step) {
  ClassifierWeights out = w;
  out.intercept -= step * g.intercept;
  for (std::size_t d = 0; d < out.weights.size(); ++d) out.weights[d] -= step * g.weights[d];
  return out;
}

/// eta_t = eta0 / (t + 1).
inline double agd_step_size(long t, double eta0) { return eta0 / static_cast<double>(t + 1); }

/// One AGD update at slot t. The factor eta_t / N_t on the summed
/// gradient equals eta_t on the mean gradient, which is what is applied here.
inline ClassifierWeights agd_step(const ClassifierWeights& w, const Dataset& data, long t, double eta0) {
  detail::require(t >= 1, "agd_step: slot index must be >= 1");
  return apply_gradient(w, loss_gradient(w, data), agd_step_size(t, eta0));
}

/// Lipschitz bound of the mean-loss gradient: max_n ||[1, x_n]||^2 / 4.
inline double gradient_lipschitz_bound(const Dataset& data) {
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double s = 1.0;
    for (double v : data.features(i)) s += v * v;
    worst = std::max(worst, s);
  }
  return worst / 4.0;
}

struct FitOptions {
  int max_iters = 2000;
  double eta = 0.01;
  double tol = 1e-4;
};

/// Batch gradient descent from zero weights until ||grad|| < tol or max_iters.
inline ClassifierWeights fit_initial(const Dataset& data, int max_iters, double eta, double tol) {
  detail::require(!data.empty(), "fit_initial: empty dataset");
  ClassifierWeights w = ClassifierWeights::zeros(data.dim());
  for (int it = 0; it < max_iters; ++it) {
    const LossGradient g = loss_gradient(w, data);
    if (std::sqrt(g.squared_norm()) < tol) break;
    w = apply_gradient(w, g, eta);
  }
  return w;
}

inline ClassifierWeights fit_initial(const Dataset& data, const FitOptions& opt = {}) {
  return fit_initial(data, opt.max_iters, opt.eta, opt.tol);
}

}  // namespace cora
