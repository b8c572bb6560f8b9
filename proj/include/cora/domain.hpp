#pragma once

// Core value types shared by the classifier, allocator, bandit and engine.
// D (features) and K (resources) are small, so everything is dense doubles.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cora {

/// Thrown when an operation is asked for something it deliberately does not
/// support (e.g. a brute-force grid in too many dimensions).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace detail

/// Dense real vector with a phantom tag so feature and resource vectors
/// cannot be mixed up at call sites.
template <typename Tag>
struct DenseVector {
  std::vector<double> values;

  DenseVector() = default;
  explicit DenseVector(std::vector<double> v) : values(std::move(v)) {}
  DenseVector(std::initializer_list<double> v) : values(v) {}

  static DenseVector zeros(std::size_t n) { return DenseVector(std::vector<double>(n, 0.0)); }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }
  auto begin() { return values.begin(); }
  auto end() { return values.end(); }

  bool finite() const { return detail::all_finite(values); }
  friend bool operator==(const DenseVector&, const DenseVector&) = default;
};

/// Row-major dense matrix with a phantom tag.
template <typename Tag>
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  DenseMatrix(std::initializer_list<std::initializer_list<double>> init) {
    rows = init.size();
    cols = rows ? init.begin()->size() : 0;
    data.reserve(rows * cols);
    for (const auto& row : init) {
      detail::require(row.size() == cols, "DenseMatrix: ragged initializer");
      data.insert(data.end(), row.begin(), row.end());
    }
  }

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }

  bool finite() const { return detail::all_finite(data); }
  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

/// Per-user feature state x(t) (e.g. an RTT-like and a throughput-like value).
using FeatureVector = DenseVector<struct FeatureTag>;
/// Allocation r(t), one entry per resource type.
using ResourceVector = DenseVector<struct ResourceTag>;
/// D x K effect of resource k on feature d (true Z(t) or an estimate).
using CoefficientMatrix = DenseMatrix<struct CoefficientTag>;

/// Per-slot caps B_k and long-term average targets rbar_k.
struct ResourceBudget {
  ResourceVector per_slot_cap;
  ResourceVector long_term_avg;

  std::size_t size() const { return per_slot_cap.size(); }

  void validate() const {
    detail::require(per_slot_cap.size() == long_term_avg.size(), "ResourceBudget: cap/average size mismatch");
    detail::require(per_slot_cap.size() >= 1, "ResourceBudget: at least one resource required");
    for (std::size_t k = 0; k < size(); ++k) {
      detail::require(per_slot_cap[k] > 0.0 && std::isfinite(per_slot_cap[k]), "ResourceBudget: B_k must be positive");
      detail::require(long_term_avg[k] > 0.0 && std::isfinite(long_term_avg[k]),
                      "ResourceBudget: long-term average must be positive");
      detail::require(long_term_avg[k] <= per_slot_cap[k], "ResourceBudget: long-term average exceeds per-slot cap");
    }
  }
};

/// Logistic model: P(label = 1 | x) = 1 / (1 + exp(-(intercept + weights . x))).
struct ClassifierWeights {
  double intercept = 0.0;
  std::vector<double> weights;

  static ClassifierWeights zeros(std::size_t dim) { return {0.0, std::vector<double>(dim, 0.0)}; }

  double norm() const {
    double s = intercept * intercept;
    for (double w : weights) s += w * w;
    return std::sqrt(s);
  }
  bool finite() const { return std::isfinite(intercept) && detail::all_finite(weights); }
  friend bool operator==(const ClassifierWeights&, const ClassifierWeights&) = default;
};

/// Virtual queues Q_k >= 0 tracking long-term constraint violation.
struct VirtualQueueState {
  std::vector<double> lengths;

  static VirtualQueueState zeros(std::size_t k) { return {std::vector<double>(k, 0.0)}; }
  std::size_t size() const { return lengths.size(); }
  double total() const {
    double s = 0.0;
    for (double q : lengths) s += q;
    return s;
  }
  friend bool operator==(const VirtualQueueState&, const VirtualQueueState&) = default;
};

/// One labelled observation; label 1 means complaint (positive).
struct UserRecord {
  FeatureVector features;
  int label = 0;
  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

/// g = x + Z r.
inline FeatureVector feature_update(const FeatureVector& x, const CoefficientMatrix& z, const ResourceVector& r) {
  detail::require(z.rows == x.size() && z.cols == r.size(), "feature_update: dimension mismatch");
  FeatureVector g = x;
  for (std::size_t d = 0; d < z.rows; ++d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < z.cols; ++k) acc += z(d, k) * r[k];
    g[d] += acc;
  }
  return g;
}

}  // namespace cora
