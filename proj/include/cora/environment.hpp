#pragma once

// Ground truths, dataset generators and per-slot caps for the two simulated
// worlds: a 2-D Gaussian mixture and a YouTube-style RTT/bandwidth QoE model.
// Generators take an explicit std::mt19937_64; nothing here holds random state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cora/domain.hpp"

namespace cora {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `stream` (data, labels, coefficients, ...) within one run.
inline std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t stream) {
  return mix_seed(run_seed ^ mix_seed(stream + 1));
}

/// Bernoulli(p) draw.
inline int sample_label(double p, Rng& rng) {
  detail::require(p >= 0.0 && p <= 1.0, "sample_label: probability outside [0, 1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Gaussian mixture world. Negatives ~ N((10,10), 20 I), positives ~ N((-10,-10), 20 I).

namespace gaussian {
inline constexpr double kMean = 10.0;
inline constexpr double kVariance = 20.0;
inline constexpr double kTarget = 20.0;  ///< per-slot cap keeps x_2 + z r_2 <= 20
inline constexpr double kMinCoefficient = 1e-6;
}  // namespace gaussian

/// Bayes posterior of the positive component under equal priors.
inline double gaussian_posterior_truth(const FeatureVector& x) {
  double d_neg = 0.0, d_pos = 0.0;
  for (double v : x) {
    d_neg += (v - gaussian::kMean) * (v - gaussian::kMean);
    d_pos += (v + gaussian::kMean) * (v + gaussian::kMean);
  }
  // log phi_+ - log phi_-
  const double log_ratio = (d_neg - d_pos) / (2.0 * gaussian::kVariance);
  if (log_ratio >= 0.0) return 1.0 / (1.0 + std::exp(-log_ratio));
  const double e = std::exp(log_ratio);
  return e / (1.0 + e);
}

/// Positive iff every coordinate is <= 0 (the approximated threshold truth for D = 2).
inline double threshold_truth(const FeatureVector& x) {
  for (double v : x)
    if (v > 0.0) return 0.0;
  return 1.0;
}

inline UserRecord sample_gaussian_user(Rng& rng, std::size_t dim = 2) {
  std::bernoulli_distribution pick(0.5);
  std::normal_distribution<double> noise(0.0, std::sqrt(gaussian::kVariance));
  const bool positive = pick(rng);
  const double mean = positive ? -gaussian::kMean : gaussian::kMean;
  FeatureVector x = FeatureVector::zeros(dim);
  for (std::size_t d = 0; d < dim; ++d) x[d] = mean + noise(rng);
  return {std::move(x), positive ? 1 : 0};
}

/// n records, each from one of the two components with equal probability,
/// labelled by component (1 = positive).
inline std::vector<UserRecord> gen_gaussian_dataset(long n, std::uint64_t seed) {
  detail::require(n >= 1, "gen_gaussian_dataset: n must be >= 1");
  Rng rng(seed);
  std::vector<UserRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out.push_back(sample_gaussian_user(rng));
  return out;
}

/// Nominal Gaussian-world coefficients: a single resource that raises x_2 one
/// unit per unit allocated (the active column of Z = [0 0; 0 1]).
inline CoefficientMatrix gaussian_coefficients() { return {{0.0}, {1.0}}; }

/// Heterogeneous coefficients for the Gaussian world: the bandwidth effect on
/// x_2 is uniform on [0, 1]; the effect on x_1 stays structurally zero.
inline CoefficientMatrix sample_coeff_matrix(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CoefficientMatrix z = gaussian_coefficients();
  z(1, 0) = u(rng);
  return z;
}

enum class CapMode { homogeneous, heterogeneous };

/// Per-slot caps for the Gaussian world. The resource acting on x_2 (the last
/// column of Z) may lift x_2 at most to 20; it is also bounded by its configured
/// cap. Any other resource keeps its configured cap.
inline ResourceVector effective_cap(const FeatureVector& x, const CoefficientMatrix& z, CapMode mode,
                                    const ResourceVector& configured) {
  detail::require(x.size() == 2 && z.rows == 2 && z.cols == configured.size() && z.cols >= 1,
                  "effective_cap: expects the 2-feature Gaussian layout");
  const std::size_t k = z.cols - 1;
  ResourceVector caps = configured;
  const double headroom = gaussian::kTarget - x[1];
  const double cap = mode == CapMode::heterogeneous ? headroom / std::max(z(1, k), gaussian::kMinCoefficient) : headroom;
  caps[k] = std::min(caps[k], std::max(cap, 0.0));
  return caps;
}

// ---------------------------------------------------------------------------
// YouTube-style world. x_1 = RTT in seconds (ms / 1000), x_2 = bandwidth in Mbps.

namespace youtube {
inline constexpr double kRttScale = 1000.0;  ///< raw RTT (ms) divided by this feeds the fitted curve
inline constexpr double kRttMinMs = 40.0;
inline constexpr double kRttMaxMs = 1000.0;
inline constexpr double kBandwidthMax = 10.0;
inline constexpr double kBandwidthFloor = 4.0;  ///< below this every video is unacceptable
inline constexpr double kQuad = -1.1, kLin = 2.3, kConst = -0.2;
}  // namespace youtube

/// clamp(max(-1.1 x1^2 + 2.3 x1 - 0.2, 1[x2 < 4]), 0, 1).
inline double youtube_truth(const FeatureVector& x) {
  detail::require(x.size() == 2, "youtube_truth: expects 2 features");
  const double poly = youtube::kQuad * x[0] * x[0] + youtube::kLin * x[0] + youtube::kConst;
  const double stall = x[1] < youtube::kBandwidthFloor ? 1.0 : 0.0;
  return std::clamp(std::max(poly, stall), 0.0, 1.0);
}

inline UserRecord sample_youtube_user(Rng& rng) {
  std::uniform_real_distribution<double> rtt(youtube::kRttMinMs, youtube::kRttMaxMs);
  std::uniform_real_distribution<double> bw(0.0, youtube::kBandwidthMax);
  FeatureVector x{rtt(rng) / youtube::kRttScale, 0.0};
  x[1] = bw(rng);
  return {x, sample_label(youtube_truth(x), rng)};
}

inline std::vector<UserRecord> gen_youtube_dataset(long n, std::uint64_t seed) {
  detail::require(n >= 1, "gen_youtube_dataset: n must be >= 1");
  Rng rng(seed);
  std::vector<UserRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out.push_back(sample_youtube_user(rng));
  return out;
}

// ---------------------------------------------------------------------------
// Ground truth as a value.

enum class TruthKind { gaussian_posterior, threshold, youtube };

struct GroundTruth {
  TruthKind kind = TruthKind::gaussian_posterior;
  std::map<std::string, double> parameters;

  double operator()(const FeatureVector& x) const {
    double p = 0.0;
    switch (kind) {
      case TruthKind::gaussian_posterior: p = gaussian_posterior_truth(x); break;
      case TruthKind::threshold: p = threshold_truth(x); break;
      case TruthKind::youtube: p = youtube_truth(x); break;
    }
    return std::clamp(p, 0.0, 1.0);
  }

  static GroundTruth of(TruthKind kind) {
    switch (kind) {
      case TruthKind::gaussian_posterior:
        return {kind, {{"mean", gaussian::kMean}, {"variance", gaussian::kVariance}}};
      case TruthKind::threshold:
        return {kind, {{"threshold", 0.0}}};
      case TruthKind::youtube:
        return {kind,
                {{"quad", youtube::kQuad},
                 {"lin", youtube::kLin},
                 {"const", youtube::kConst},
                 {"bandwidth_floor", youtube::kBandwidthFloor}}};
    }
    return {};
  }
};

// ---------------------------------------------------------------------------
// Scenario interface consumed by the engine.

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual std::size_t features() const = 0;
  virtual std::size_t resources() const = 0;
  /// A fresh user with its label (used for the initial dataset and arrivals).
  virtual UserRecord sample_user(Rng& rng) const = 0;
  /// G(x): complaint probability at features x.
  virtual double truth(const FeatureVector& x) const = 0;
  virtual bool heterogeneous() const { return false; }
  /// Shared Z for homogeneous users; the nominal value otherwise.
  virtual CoefficientMatrix nominal_coefficients() const = 0;
  /// Z(t) for the user arriving this slot.
  virtual CoefficientMatrix sample_coefficients(Rng&) const { return nominal_coefficients(); }
  virtual ResourceVector slot_caps(const FeatureVector&, const CoefficientMatrix&, const ResourceVector& configured) const {
    return configured;
  }
  virtual ResourceBudget default_budget() const = 0;
};

class GaussianEnvironment final : public Environment {
 public:
  explicit GaussianEnvironment(bool heterogeneous = false, TruthKind truth = TruthKind::gaussian_posterior)
      : hetero_(heterogeneous), truth_(GroundTruth::of(truth)) {}

  std::string name() const override { return hetero_ ? "gaussian-hetero" : "gaussian"; }
  std::size_t features() const override { return 2; }
  std::size_t resources() const override { return 1; }

  UserRecord sample_user(Rng& rng) const override {
    UserRecord u = sample_gaussian_user(rng);
    if (truth_.kind == TruthKind::threshold) u.label = static_cast<int>(threshold_truth(u.features));
    return u;
  }

  double truth(const FeatureVector& x) const override { return truth_(x); }
  bool heterogeneous() const override { return hetero_; }

  CoefficientMatrix nominal_coefficients() const override { return gaussian_coefficients(); }

  CoefficientMatrix sample_coefficients(Rng& rng) const override {
    return hetero_ ? sample_coeff_matrix(rng) : nominal_coefficients();
  }

  ResourceVector slot_caps(const FeatureVector& x, const CoefficientMatrix& z, const ResourceVector& configured) const override {
    return effective_cap(x, z, hetero_ ? CapMode::heterogeneous : CapMode::homogeneous, configured);
  }

  /// Homogeneous: the scenario cap 20 - x2 governs, so the configured cap is
  /// loose. Heterogeneous: (20 - x2) / z is unbounded as z -> 0, and an empty
  /// queue hands the whole cap to one user, so the configured cap of 40 (twice
  /// the homogeneous bound) keeps single slots from swamping the queue.
  ResourceBudget default_budget() const override {
    return {ResourceVector{hetero_ ? 40.0 : 1e6}, ResourceVector{10.0}};
  }

 private:
  bool hetero_;
  GroundTruth truth_;
};

class YoutubeEnvironment final : public Environment {
 public:
  std::string name() const override { return "youtube"; }
  std::size_t features() const override { return 2; }
  std::size_t resources() const override { return 1; }
  UserRecord sample_user(Rng& rng) const override { return sample_youtube_user(rng); }
  double truth(const FeatureVector& x) const override { return youtube_truth(x); }
  /// One Mbps of bandwidth raises x_2 by one.
  CoefficientMatrix nominal_coefficients() const override { return {{0.0}, {1.0}}; }
  ResourceBudget default_budget() const override { return {ResourceVector{youtube::kBandwidthMax}, ResourceVector{1.0}}; }
};

/// "gaussian", "gaussian-hetero", "gaussian-threshold" or "youtube".
inline std::unique_ptr<Environment> make_environment(const std::string& scenario) {
  if (scenario == "gaussian") return std::make_unique<GaussianEnvironment>(false);
  if (scenario == "gaussian-hetero") return std::make_unique<GaussianEnvironment>(true);
  if (scenario == "gaussian-threshold") return std::make_unique<GaussianEnvironment>(false, TruthKind::threshold);
  if (scenario == "youtube") return std::make_unique<YoutubeEnvironment>();
  throw std::invalid_argument("unknown scenario: " + scenario);
}

// ---------------------------------------------------------------------------
// CSV: header x1,...,xD,label; one record per line.

inline void save_dataset_csv(std::ostream& os, const std::vector<UserRecord>& records) {
  const std::size_t dim = records.empty() ? 0 : records.front().features.size();
  for (std::size_t d = 0; d < dim; ++d) os << 'x' << (d + 1) << ',';
  os << "label\n";
  os << std::setprecision(17);
  for (const auto& r : records) {
    detail::require(r.features.size() == dim, "save_dataset_csv: ragged records");
    for (double v : r.features) os << v << ',';
    os << r.label << '\n';
  }
}

inline std::vector<UserRecord> load_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("load_dataset_csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t columns = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  detail::require(columns >= 2 && line.size() >= 5 && line.substr(line.size() - 5) == "label",
                  "load_dataset_csv: header must be x1,...,xD,label");

  std::vector<UserRecord> out;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || cell.empty())
        throw std::invalid_argument("load_dataset_csv: bad number on line " + std::to_string(lineno));
      vals.push_back(v);
    }
    if (vals.size() != columns)
      throw std::invalid_argument("load_dataset_csv: wrong column count on line " + std::to_string(lineno));
    const double label = vals.back();
    if (label != 0.0 && label != 1.0)
      throw std::invalid_argument("load_dataset_csv: label must be 0 or 1 on line " + std::to_string(lineno));
    vals.pop_back();
    out.push_back({FeatureVector(std::move(vals)), static_cast<int>(label)});
  }
  return out;
}

}  // namespace cora
