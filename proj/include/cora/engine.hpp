#pragma once

// Closed-loop runs: allocate with the current classifier and queues, let the
// user experience the allocation, feed the labelled outcome back into the
// classifier, then update queues (and the coefficient bandit for ROQRA).

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cora/allocator.hpp"
#include "cora/bandit.hpp"
#include "cora/classifier.hpp"
#include "cora/domain.hpp"
#include "cora/environment.hpp"
#include "cora/lyapunov.hpp"

namespace cora {

enum class Algorithm { ooqra, roqra, baseline };

/// Dual step schedule of the price-ascent baseline: 0.4/t, 0.4/log(t+1), 1.
enum class EpsSchedule { inv_t, inv_log, const_one };

enum class LabelMode { bernoulli, threshold };

/// full_batch is the real update; newest_record touches only the records
/// added this slot (constant work per slot, used for timing experiments).
enum class ClassifierUpdate { full_batch, newest_record };

/// Coefficients OOQRA and the baseline allocate with when users are heterogeneous.
enum class HeteroCoefficients { true_per_slot, nominal };

inline double eps_value(EpsSchedule s, long t) {
  switch (s) {
    case EpsSchedule::inv_t: return 0.4 / static_cast<double>(t);
    case EpsSchedule::inv_log: return 0.4 / std::log(static_cast<double>(t) + 1.0);
    case EpsSchedule::const_one: return 1.0;
  }
  return 0.0;
}

struct ExperimentConfig {
  std::string scenario = "gaussian";
  double theta = 40.0;
  ResourceBudget budget;  ///< empty means the scenario default
  long horizon = 6000;
  long initial_size = 600;
  double step_size_base = 1.0;  ///< eta0 in eta_t = eta0 / (t + 1)
  double ucb_c = 1.0;
  Algorithm algorithm = Algorithm::ooqra;
  EpsSchedule baseline_eps_schedule = EpsSchedule::inv_t;
  std::uint64_t seed = 1;
  int trials = 10;

  int users_per_slot = 1;
  double users_per_slot_poisson = 0.0;  ///< > 0: S_t = 1 + Poisson(mean)
  LabelMode label_mode = LabelMode::bernoulli;
  ClassifierUpdate classifier_update = ClassifierUpdate::full_batch;
  HeteroCoefficients hetero_coefficients = HeteroCoefficients::true_per_slot;
  FitOptions fit;
  long weight_history_stride = 50;
  /// Throw on any runtime invariant violation instead of only counting it.
  bool strict_invariants = true;

  void validate() const {
    detail::require(theta >= 0.0 && std::isfinite(theta), "config: theta must be >= 0");
    detail::require(horizon >= 0, "config: horizon must be >= 0");
    detail::require(initial_size >= 1, "config: initial_size must be >= 1");
    detail::require(step_size_base >= 0.0, "config: eta0 must be >= 0");
    detail::require(ucb_c >= 0.0, "config: ucb_c must be >= 0");
    detail::require(trials >= 1, "config: trials must be >= 1");
    detail::require(users_per_slot >= 1, "config: users_per_slot must be >= 1");
    detail::require(users_per_slot_poisson >= 0.0, "config: Poisson mean must be >= 0");
    detail::require(weight_history_stride >= 1, "config: weight history stride must be >= 1");
    if (budget.size() > 0) budget.validate();
  }
};

struct SlotOutcome {
  long slot = 0;
  ResourceVector allocation;
  double predicted_prob = 0.0;
  int realized_label = 0;  ///< label of the first user in the slot
  int users = 1;
  int positives = 0;
  VirtualQueueState queue_snapshot;  ///< Q(t+1), after this slot's update
  double per_slot_objective = 0.0;
};

/// Counts of runtime invariant checks that failed; all zero on a healthy run.
struct InvariantAudit {
  long negative_queue = 0;
  long drift_bound = 0;
  long telescoping = 0;
  long sequentiality = 0;
  long cap_violation = 0;
  long slots_checked = 0;

  long total() const { return negative_queue + drift_bound + telescoping + sequentiality + cap_violation; }
};

struct RunTrace {
  std::vector<SlotOutcome> outcomes;
  std::vector<std::pair<long, ClassifierWeights>> weight_history;
  ExperimentConfig config_echo;
  ResourceBudget budget;
  ClassifierWeights initial_weights;
  ClassifierWeights final_weights;
  VirtualQueueState final_queue;
  InvariantAudit audit;
  std::vector<double> squared_gradient_norms;  ///< ||grad loss||^2 before each online update
  std::optional<BanditState> bandit;           ///< ROQRA only
};

struct RunSummary {
  double time_avg_positive_rate = 0.0;
  double time_avg_queue_length = 0.0;
  std::vector<double> avg_resource_used;
  double final_weight_norm = 0.0;
  std::vector<double> constraint_slack;
};

/// Arithmetic mean of the users' features; Z is shared so it passes through.
inline std::pair<FeatureVector, CoefficientMatrix> aggregate_super_user(
    const std::vector<std::pair<FeatureVector, CoefficientMatrix>>& users) {
  detail::require(!users.empty(), "aggregate_super_user: no users");
  FeatureVector mean = FeatureVector::zeros(users.front().first.size());
  for (const auto& [x, z] : users) {
    detail::require(x.size() == mean.size(), "aggregate_super_user: feature dimension mismatch");
    for (std::size_t d = 0; d < x.size(); ++d) mean[d] += x[d];
  }
  for (double& v : mean) v /= static_cast<double>(users.size());
  return {mean, users.front().second};
}

class SlotError : public std::runtime_error {
 public:
  SlotError(long slot, const std::string& what)
      : std::runtime_error("slot " + std::to_string(slot) + ": " + what), slot_(slot) {}
  long slot() const { return slot_; }

 private:
  long slot_;
};

namespace detail {

enum Stream : std::uint64_t { kDataStream = 0, kLabelStream = 1, kCoefficientStream = 2, kArrivalStream = 3 };

inline ResourceBudget resolve_budget(const ExperimentConfig& cfg, const Environment& env) {
  ResourceBudget b = cfg.budget.size() > 0 ? cfg.budget : env.default_budget();
  require(b.size() == env.resources(), "config: budget has " + std::to_string(b.size()) + " resources, scenario " +
                                           env.name() + " has " + std::to_string(env.resources()));
  b.validate();
  return b;
}

inline void update_classifier(ClassifierWeights& w, const Dataset& data, long t, std::size_t added,
                              const ExperimentConfig& cfg, RunTrace& trace) {
  if (cfg.classifier_update == ClassifierUpdate::full_batch) {
    const LossGradient g = loss_gradient(w, data);
    trace.squared_gradient_norms.push_back(g.squared_norm());
    w = apply_gradient(w, g, agd_step_size(t, cfg.step_size_base));
    return;
  }
  LossGradient g{0.0, std::vector<double>(data.dim(), 0.0)};
  for (std::size_t i = data.size() - added; i < data.size(); ++i) {
    const auto x = data.features(i);
    const double residual = sigmoid(-logit(w, x)) - data.label(i);
    g.intercept += residual;
    for (std::size_t d = 0; d < x.size(); ++d) g.weights[d] += residual * x[d];
  }
  const double inv = 1.0 / static_cast<double>(added);
  g.intercept *= inv;
  for (double& v : g.weights) v *= inv;
  w = apply_gradient(w, g, agd_step_size(t, cfg.step_size_base));
}

inline int draw_users(const ExperimentConfig& cfg, Rng& rng) {
  if (cfg.users_per_slot_poisson > 0.0) {
    std::poisson_distribution<int> extra(cfg.users_per_slot_poisson);
    return 1 + extra(rng);
  }
  return cfg.users_per_slot;
}

/// One closed-loop run. The three algorithms differ only in which
/// coefficients and prices the per-slot problem sees and in what they learn.
inline RunTrace run_closed_loop(const ExperimentConfig& cfg, const Environment& env, Algorithm algo) {
  cfg.validate();
  const ResourceBudget budget = resolve_budget(cfg, env);
  const std::size_t dim = env.features();
  const std::size_t nres = env.resources();
  if (algo == Algorithm::roqra) {
    require(cfg.users_per_slot == 1 && cfg.users_per_slot_poisson == 0.0, "roqra: one user per slot");
    require(cfg.horizon >= 2 || cfg.horizon == 0, "roqra: horizon must be >= 2");
  }

  Rng data_rng(stream_seed(cfg.seed, kDataStream));
  Rng label_rng(stream_seed(cfg.seed, kLabelStream));
  Rng coeff_rng(stream_seed(cfg.seed, kCoefficientStream));
  Rng arrival_rng(stream_seed(cfg.seed, kArrivalStream));

  RunTrace trace;
  trace.config_echo = cfg;
  trace.config_echo.algorithm = algo;
  trace.budget = budget;

  std::vector<UserRecord> initial;
  initial.reserve(static_cast<std::size_t>(cfg.initial_size));
  for (long i = 0; i < cfg.initial_size; ++i) initial.push_back(env.sample_user(data_rng));
  Dataset data(dim, initial);
  ClassifierWeights w = fit_initial(data, cfg.fit);
  trace.initial_weights = w;
  trace.weight_history.emplace_back(0, w);

  VirtualQueueState queue = VirtualQueueState::zeros(nres);
  std::vector<double> prices(nres, 0.0);  // baseline dual prices
  ConstraintLedger ledger(nres);
  BanditState bandit = BanditState::fresh(dim, nres, cfg.ucb_c, std::max<long>(cfg.horizon, 2));
  trace.outcomes.reserve(static_cast<std::size_t>(cfg.horizon));

  auto violation = [&](long t, long& counter, const char* what) {
    ++counter;
    if (cfg.strict_invariants) throw SlotError(t, std::string("invariant violated: ") + what);
  };

  for (long t = 1; t <= cfg.horizon; ++t) {
    try {
      const int users = draw_users(cfg, arrival_rng);
      std::vector<FeatureVector> members;
      members.reserve(static_cast<std::size_t>(users));
      for (int s = 0; s < users; ++s) members.push_back(env.sample_user(data_rng).features);
      const CoefficientMatrix z_true = env.sample_coefficients(coeff_rng);

      std::vector<std::pair<FeatureVector, CoefficientMatrix>> group;
      for (const auto& m : members) group.emplace_back(m, z_true);
      const FeatureVector x = aggregate_super_user(group).first;
      const ResourceVector caps = env.slot_caps(x, z_true, budget.per_slot_cap);

      CoefficientMatrix z_alloc = z_true;
      if (algo == Algorithm::roqra) {
        z_alloc = ucb_index(bandit);
      } else if (env.heterogeneous() && cfg.hetero_coefficients == HeteroCoefficients::nominal) {
        z_alloc = env.nominal_coefficients();
      }

      SlotProblem problem;
      if (algo == Algorithm::baseline) {
        problem = build_slot_problem(w, x, z_alloc, VirtualQueueState{prices}, caps, 1.0);
      } else {
        problem = build_slot_problem(w, x, z_alloc, queue, caps, cfg.theta);
      }
      const SlotSolution sol = solve_per_slot_detailed(problem);
      const ResourceVector& r = sol.allocation;
      const double predicted = predicted_after(problem, r);

      // Users experience the true coefficients; the dataset records what the
      // allocator believed for ROQRA and the true outcome otherwise.
      int positives = 0;
      int first_label = 0;
      for (int s = 0; s < users; ++s) {
        const FeatureVector g_true = feature_update(members[s], z_true, r);
        const double p_true = env.truth(g_true);
        const int y = cfg.label_mode == LabelMode::bernoulli ? sample_label(p_true, label_rng) : (p_true >= 0.5 ? 1 : 0);
        positives += y;
        if (s == 0) first_label = y;
        const FeatureVector g_data = algo == Algorithm::roqra ? feature_update(members[s], z_alloc, r) : g_true;
        data.add_online({g_data, y});
      }
      update_classifier(w, data, t, static_cast<std::size_t>(users), cfg, trace);

      if (algo == Algorithm::roqra) bandit = observe(bandit, z_true, r);

      const VirtualQueueState next = update_queue(queue, r, budget);
      ledger.record(r, budget);
      if (algo == Algorithm::baseline) {
        const double eps = eps_value(cfg.baseline_eps_schedule, t);
        for (std::size_t k = 0; k < nres; ++k)
          prices[k] = std::max(prices[k] + eps * (r[k] - budget.long_term_avg[k]), 0.0);
      }

      // Runtime invariants.
      auto& audit = trace.audit;
      ++audit.slots_checked;
      for (double q : next.lengths)
        if (q < 0.0) violation(t, audit.negative_queue, "negative queue");
      for (std::size_t k = 0; k < nres; ++k) {
        const double slack = 1e-12 * std::max(1.0, caps[k]);
        if (r[k] < -slack || r[k] > caps[k] + slack) violation(t, audit.cap_violation, "allocation outside [0, cap]");
      }
      const double lhs = drift_plus_penalty(queue, next, cfg.theta, predicted);
      const double rhs = drift_plus_penalty_bound(queue, r, cfg.theta, predicted,
                                                  drift_bound_constant(caps, budget.long_term_avg));
      if (lhs > rhs + 1e-9 * std::max(1.0, std::abs(rhs))) violation(t, audit.drift_bound, "drift-plus-penalty bound");
      if (!ledger.telescoping_holds(next)) violation(t, audit.telescoping, "queue below cumulative excess");
      if (!check_kkt(problem, r).sequential) violation(t, audit.sequentiality, "non-sequential allocation");

      trace.outcomes.push_back({t, r, predicted, first_label, users, positives, next, sol.objective});
      queue = next;
      if (t % cfg.weight_history_stride == 0) trace.weight_history.emplace_back(t, w);
    } catch (const SlotError&) {
      throw;
    } catch (const std::exception& e) {
      throw SlotError(t, e.what());
    }
  }

  trace.final_weights = w;
  trace.final_queue = queue;
  if (algo == Algorithm::roqra) trace.bandit = bandit;
  return trace;
}

}  // namespace detail

/// Homogeneous users, allocation with the true shared coefficients.
inline RunTrace run_ooqra(const ExperimentConfig& cfg, const Environment& env) {
  return detail::run_closed_loop(cfg, env, Algorithm::ooqra);
}

/// Heterogeneous users, allocation with the UCB coefficient estimate.
inline RunTrace run_roqra(const ExperimentConfig& cfg, const Environment& env) {
  return detail::run_closed_loop(cfg, env, Algorithm::roqra);
}

/// Dual-price baseline: prices follow eps-step projected ascent on the
/// long-term constraint instead of virtual queues, with no penalty weight.
inline RunTrace run_baseline(const ExperimentConfig& cfg, const Environment& env) {
  return detail::run_closed_loop(cfg, env, Algorithm::baseline);
}

inline RunTrace run(const ExperimentConfig& cfg, const Environment& env) {
  return detail::run_closed_loop(cfg, env, cfg.algorithm);
}

inline RunSummary summarize(const RunTrace& trace) {
  RunSummary s;
  const std::size_t nres = trace.budget.size();
  s.avg_resource_used.assign(nres, 0.0);
  s.constraint_slack.assign(nres, 0.0);
  s.final_weight_norm = trace.final_weights.norm();
  long users = 0, positives = 0;
  double queue_sum = 0.0;
  for (const auto& o : trace.outcomes) {
    users += o.users;
    positives += o.positives;
    queue_sum += o.queue_snapshot.total();
    for (std::size_t k = 0; k < nres; ++k) s.avg_resource_used[k] += o.allocation[k];
  }
  const double n = static_cast<double>(trace.outcomes.size());
  if (!trace.outcomes.empty()) {
    s.time_avg_positive_rate = static_cast<double>(positives) / static_cast<double>(users);
    s.time_avg_queue_length = queue_sum / n;
    for (double& v : s.avg_resource_used) v /= n;
  }
  for (std::size_t k = 0; k < nres; ++k) s.constraint_slack[k] = trace.budget.long_term_avg[k] - s.avg_resource_used[k];
  return s;
}

}  // namespace cora
