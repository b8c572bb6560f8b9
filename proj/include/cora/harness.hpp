#pragma once

// Monte Carlo fan-out: independent trials on worker threads, joined and
// aggregated by the caller. Trial i runs with seed (base_seed XOR i).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cora/engine.hpp"

namespace cora {

inline std::uint64_t trial_seed(std::uint64_t base, int trial) { return base ^ static_cast<std::uint64_t>(trial); }

/// Worker count: CORA_SIM_THREADS when set and positive, else the core count.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("CORA_SIM_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(0..count-1) on up to `threads` workers. The first exception is
/// rethrown after all workers have stopped.
inline void parallel_for(int count, unsigned threads, const std::function<void(int)>& job) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1))));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Runs cfg.trials independent trials and returns their summaries in trial order.
/// `on_trace` (optional) sees every full trace; it may be called concurrently.
inline std::vector<RunSummary> run_trials(const ExperimentConfig& cfg, const Environment& env,
                                          unsigned threads = worker_threads(),
                                          const std::function<void(int, const RunTrace&)>& on_trace = {}) {
  std::vector<RunSummary> out(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, threads, [&](int i) {
    ExperimentConfig c = cfg;
    c.seed = trial_seed(cfg.seed, i);
    const RunTrace trace = run(c, env);
    if (on_trace) on_trace(i, trace);
    out[static_cast<std::size_t>(i)] = summarize(trace);
  });
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation (n - 1); 0 for a single value
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

/// Trial-averaged summary fields.
struct AggregateSummary {
  MeanStd positive_rate;
  MeanStd queue_length;
  std::vector<MeanStd> resource_used;
  MeanStd weight_norm;
  std::vector<MeanStd> constraint_slack;
};

inline AggregateSummary aggregate(const std::vector<RunSummary>& runs) {
  AggregateSummary a;
  auto column = [&](auto getter) {
    std::vector<double> v;
    v.reserve(runs.size());
    for (const auto& r : runs) v.push_back(getter(r));
    return mean_std(v);
  };
  a.positive_rate = column([](const RunSummary& r) { return r.time_avg_positive_rate; });
  a.queue_length = column([](const RunSummary& r) { return r.time_avg_queue_length; });
  a.weight_norm = column([](const RunSummary& r) { return r.final_weight_norm; });
  const std::size_t nres = runs.empty() ? 0 : runs.front().avg_resource_used.size();
  for (std::size_t k = 0; k < nres; ++k) {
    a.resource_used.push_back(column([k](const RunSummary& r) { return r.avg_resource_used[k]; }));
    a.constraint_slack.push_back(column([k](const RunSummary& r) { return r.constraint_slack[k]; }));
  }
  return a;
}

}  // namespace cora
