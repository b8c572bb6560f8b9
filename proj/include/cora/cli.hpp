#pragma once

// Experiment harness behind the `cora` tool: config parsing, run / sweep /
// oracle-check commands, trace CSV and summary JSON export.
//
// Exit codes: 0 success, 1 runtime or check failure, 2 usage/config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cora/allocator.hpp"
#include "cora/engine.hpp"
#include "cora/environment.hpp"
#include "cora/harness.hpp"

namespace cora::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Malformed flags, config values or grid specs.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Value parsing

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw UsageError(what + ": not a number: '" + s + "'");
  }
  if (used != t.size() || !std::isfinite(v)) throw UsageError(what + ": not a number: '" + s + "'");
  return v;
}

inline long parse_long(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  if (v != std::floor(v)) throw UsageError(what + ": expected an integer: '" + s + "'");
  return static_cast<long>(v);
}

inline bool parse_bool(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw UsageError(what + ": expected a boolean: '" + s + "'");
}

/// "1,2.5,3" -> {1, 2.5, 3}; empty items are an error.
inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, what));
  if (out.empty() || (!s.empty() && s.back() == ',')) throw UsageError(what + ": empty list");
  return out;
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "ooqra") return Algorithm::ooqra;
  if (s == "roqra") return Algorithm::roqra;
  if (s == "baseline") return Algorithm::baseline;
  throw UsageError("unknown algorithm '" + s + "' (ooqra, roqra, baseline)");
}

inline EpsSchedule parse_eps(const std::string& s) {
  if (s == "inv_t") return EpsSchedule::inv_t;
  if (s == "inv_log") return EpsSchedule::inv_log;
  if (s == "one" || s == "const_one") return EpsSchedule::const_one;
  throw UsageError("unknown eps schedule '" + s + "' (inv_t, inv_log, one)");
}

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ooqra: return "ooqra";
    case Algorithm::roqra: return "roqra";
    case Algorithm::baseline: return "baseline";
  }
  return "?";
}

inline const char* to_string(EpsSchedule e) {
  switch (e) {
    case EpsSchedule::inv_t: return "inv_t";
    case EpsSchedule::inv_log: return "inv_log";
    case EpsSchedule::const_one: return "one";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Settings: flat key=value pairs from the config file, overlaid by flags.

using Settings = std::map<std::string, std::string>;

/// Canonical key for the aliases accepted in files and flags.
inline std::string canonical_key(const std::string& key) {
  static const std::map<std::string, std::string> aliases = {
      {"algo", "algorithm"},           {"rbar", "long_term_avg"},
      {"budget", "per_slot_cap"},      {"eta0", "step_size_base"},
      {"baseline_eps", "baseline_eps_schedule"},
  };
  const auto it = aliases.find(key);
  return it == aliases.end() ? key : it->second;
}

/// Parses `key = value` lines; '#' starts a comment. Unknown keys are caught
/// later by apply_settings.
inline Settings parse_config(std::istream& in) {
  Settings s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    s[canonical_key(key)] = trim(line.substr(eq + 1));
  }
  return s;
}

inline Settings load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Keys consumed by the commands rather than ExperimentConfig.
inline bool is_command_key(const std::string& key) { return key == "out" || key == "sweep"; }

/// Builds a validated config. The budget starts from the scenario default and
/// is overridden per field, so `rbar` alone keeps the scenario's caps.
inline ExperimentConfig apply_settings(const Settings& s) {
  ExperimentConfig cfg;
  const auto scen = s.find("scenario");
  if (scen == s.end() || scen->second.empty()) throw UsageError("missing scenario");
  cfg.scenario = scen->second;
  std::unique_ptr<Environment> env;
  try {
    env = make_environment(cfg.scenario);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.budget = env->default_budget();

  for (const auto& [key, value] : s) {
    if (key == "scenario" || is_command_key(key)) continue;
    if (key == "theta") cfg.theta = parse_double(value, key);
    else if (key == "algorithm") cfg.algorithm = parse_algorithm(value);
    else if (key == "long_term_avg") cfg.budget.long_term_avg = ResourceVector(parse_list(value, key));
    else if (key == "per_slot_cap") cfg.budget.per_slot_cap = ResourceVector(parse_list(value, key));
    else if (key == "horizon") cfg.horizon = parse_long(value, key);
    else if (key == "initial_size") cfg.initial_size = parse_long(value, key);
    else if (key == "step_size_base") cfg.step_size_base = parse_double(value, key);
    else if (key == "ucb_c") cfg.ucb_c = parse_double(value, key);
    else if (key == "baseline_eps_schedule") cfg.baseline_eps_schedule = parse_eps(value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
    else if (key == "trials") cfg.trials = static_cast<int>(parse_long(value, key));
    else if (key == "users_per_slot") cfg.users_per_slot = static_cast<int>(parse_long(value, key));
    else if (key == "users_per_slot_poisson") cfg.users_per_slot_poisson = parse_double(value, key);
    else if (key == "weight_history_stride") cfg.weight_history_stride = parse_long(value, key);
    else if (key == "strict_invariants") cfg.strict_invariants = parse_bool(value, key);
    else if (key == "label_mode") {
      if (value == "bernoulli") cfg.label_mode = LabelMode::bernoulli;
      else if (value == "threshold") cfg.label_mode = LabelMode::threshold;
      else throw UsageError("label_mode: expected bernoulli or threshold");
    } else if (key == "classifier_update") {
      if (value == "full_batch") cfg.classifier_update = ClassifierUpdate::full_batch;
      else if (value == "newest_record") cfg.classifier_update = ClassifierUpdate::newest_record;
      else throw UsageError("classifier_update: expected full_batch or newest_record");
    } else if (key == "hetero_coefficients") {
      if (value == "true_per_slot") cfg.hetero_coefficients = HeteroCoefficients::true_per_slot;
      else if (value == "nominal") cfg.hetero_coefficients = HeteroCoefficients::nominal;
      else throw UsageError("hetero_coefficients: expected true_per_slot or nominal");
    } else {
      throw UsageError("unknown setting '" + key + "'");
    }
  }
  if (cfg.budget.size() != env->resources())
    throw UsageError("budget: expected " + std::to_string(env->resources()) + " value(s) per resource list");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  std::string axis;  ///< theta, rbar or budget
  std::vector<double> values;
};

/// "theta=1,5,10" or "rbar=1:20:1" (inclusive start:stop:step).
inline SweepSpec parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw UsageError("sweep: expected axis=values");
  SweepSpec out{trim(spec.substr(0, eq)), {}};
  if (out.axis != "theta" && out.axis != "rbar" && out.axis != "budget")
    throw UsageError("sweep: axis must be theta, rbar or budget");
  const std::string grid = trim(spec.substr(eq + 1));
  if (grid.empty()) throw UsageError("sweep: empty grid");
  if (grid.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(grid);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_double(item, "sweep"));
    if (parts.size() != 3 || parts[2] <= 0.0 || parts[1] < parts[0])
      throw UsageError("sweep: range must be start:stop:step with step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long i = 0; i <= n; ++i) out.values.push_back(parts[0] + static_cast<double>(i) * parts[2]);
  } else {
    out.values = parse_list(grid, "sweep");
  }
  return out;
}

/// Applies one grid value; resource axes set every resource to the value.
inline ExperimentConfig at_grid_point(ExperimentConfig cfg, const SweepSpec& sweep, double value) {
  if (sweep.axis == "theta") {
    cfg.theta = value;
  } else {
    auto& target = sweep.axis == "rbar" ? cfg.budget.long_term_avg : cfg.budget.per_slot_cap;
    for (double& v : target.values) v = value;
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("sweep point: ") + e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Output

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// t,r_1..r_K,Q_1..Q_K,pred_prob,label,cum_positive_rate,cum_queue_mean
inline void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  const std::size_t k = trace.budget.size();
  out << "t";
  for (std::size_t i = 1; i <= k; ++i) out << ",r_" << i;
  for (std::size_t i = 1; i <= k; ++i) out << ",Q_" << i;
  out << ",pred_prob,label,cum_positive_rate,cum_queue_mean\n";
  long users = 0, positives = 0;
  double queue_sum = 0.0;
  std::size_t n = 0;
  for (const auto& o : trace.outcomes) {
    users += o.users;
    positives += o.positives;
    queue_sum += o.queue_snapshot.total();
    ++n;
    out << o.slot;
    for (double r : o.allocation) out << ',' << fmt(r);
    for (double q : o.queue_snapshot.lengths) out << ',' << fmt(q);
    out << ',' << fmt(o.predicted_prob) << ',' << o.realized_label << ','
        << fmt(static_cast<double>(positives) / static_cast<double>(users)) << ','
        << fmt(queue_sum / static_cast<double>(n)) << '\n';
  }
}

inline nlohmann::json to_json(const RunSummary& s) {
  return {{"time_avg_positive_rate", s.time_avg_positive_rate},
          {"time_avg_queue_length", s.time_avg_queue_length},
          {"avg_resource_used", s.avg_resource_used},
          {"final_weight_norm", s.final_weight_norm},
          {"constraint_slack", s.constraint_slack}};
}

inline nlohmann::json to_json(const AggregateSummary& a) {
  nlohmann::json mean, sd;
  auto put = [&](const char* key, const MeanStd& m) {
    mean[key] = m.mean;
    sd[key] = m.std;
  };
  auto put_vec = [&](const char* key, const std::vector<MeanStd>& v) {
    std::vector<double> m, s;
    for (const auto& x : v) {
      m.push_back(x.mean);
      s.push_back(x.std);
    }
    mean[key] = m;
    sd[key] = s;
  };
  put("time_avg_positive_rate", a.positive_rate);
  put("time_avg_queue_length", a.queue_length);
  put_vec("avg_resource_used", a.resource_used);
  put("final_weight_norm", a.weight_norm);
  put_vec("constraint_slack", a.constraint_slack);
  return {{"mean", mean}, {"std", sd}};
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"scenario", c.scenario},
          {"algorithm", to_string(c.algorithm)},
          {"theta", c.theta},
          {"per_slot_cap", c.budget.per_slot_cap.values},
          {"long_term_avg", c.budget.long_term_avg.values},
          {"horizon", c.horizon},
          {"initial_size", c.initial_size},
          {"step_size_base", c.step_size_base},
          {"ucb_c", c.ucb_c},
          {"baseline_eps_schedule", to_string(c.baseline_eps_schedule)},
          {"seed", c.seed},
          {"trials", c.trials}};
}

/// JSON with 17 significant digits for every double.
inline std::string dump17(const nlohmann::json& j) {
  // nlohmann prints the shortest round-trip form; reformat numbers explicitly.
  std::ostringstream os;
  std::function<void(const nlohmann::json&, int)> emit = [&](const nlohmann::json& v, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    if (v.is_object()) {
      os << "{\n";
      std::size_t i = 0;
      for (auto it = v.begin(); it != v.end(); ++it, ++i) {
        os << pad << "  " << nlohmann::json(it.key()).dump() << ": ";
        emit(it.value(), depth + 1);
        os << (i + 1 < v.size() ? ",\n" : "\n");
      }
      os << pad << "}";
    } else if (v.is_array()) {
      os << "[";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        emit(v[i], depth + 1);
      }
      os << "]";
    } else if (v.is_number_float()) {
      os << fmt(v.get<double>());
    } else {
      os << v.dump();
    }
  };
  emit(j, 0);
  os << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Allocator vs grid oracle suite

/// Random slot problem: K <= 3, theta in [1, 100], C in [-5, 5], a in (0, 2],
/// Q in [0, theta a / 2] (exactly 0 with probability 0.15), B <= 10. Three-
/// resource instances keep B <= 3 so the brute-force grid stays cheap.
inline SlotProblem random_slot_problem(Rng& rng) {
  std::uniform_int_distribution<int> kdist(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto k = static_cast<std::size_t>(kdist(rng));
  const double cap_max = k == 3 ? 3.0 : 10.0;
  SlotProblem p;
  p.theta = 1.0 + 99.0 * u(rng);
  p.offset = -5.0 + 10.0 * u(rng);
  for (std::size_t i = 0; i < k; ++i) {
    const double a = 2.0 * (1.0 - u(rng));  // (0, 2]
    p.efficiency.push_back(a);
    p.queues.push_back(u(rng) < 0.15 ? 0.0 : u(rng) * p.theta * a / 2.0);
    p.caps.push_back(0.5 + (cap_max - 0.5) * u(rng));
  }
  return p;
}

inline nlohmann::json to_json(const SlotProblem& p) {
  return {{"theta", p.theta}, {"offset", p.offset}, {"efficiency", p.efficiency}, {"queues", p.queues}, {"caps", p.caps}};
}

struct OracleSuiteResult {
  int instances = 0;
  double max_gap = -std::numeric_limits<double>::infinity();  ///< closed form minus grid objective
  double max_interior_residual = 0.0;
  int nonsequential = 0;
  int worst_instance = -1;
  SlotProblem worst;
};

inline OracleSuiteResult run_oracle_suite(int instances, double grid_step, std::uint64_t seed) {
  detail::require(instances >= 1, "oracle suite: instances must be >= 1");
  Rng rng(seed);
  OracleSuiteResult res;
  res.instances = instances;
  for (int i = 0; i < instances; ++i) {
    const SlotProblem p = random_slot_problem(rng);
    const ResourceVector fast = solve_per_slot(p);
    const ResourceVector grid = grid_oracle(p, grid_step);
    const double gap = per_slot_objective(p, fast) - per_slot_objective(p, grid);
    const KktReport kkt = check_kkt(p, fast);
    res.max_interior_residual = std::max(res.max_interior_residual, kkt.max_interior_residual);
    if (!kkt.sequential) ++res.nonsequential;
    if (gap > res.max_gap) {
      res.max_gap = gap;
      res.worst_instance = i;
      res.worst = p;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Commands

struct CommonFlags {
  std::map<std::string, std::string> values;  ///< flag name (canonical key) -> raw text
  std::string config_path;
};

/// Registers the shared experiment flags; every flag lands in `flags.values`
/// only when given, so absent flags never override the config file.
inline void add_experiment_flags(CLI::App& app, CommonFlags& flags) {
  auto opt = [&](const std::string& name, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
  };
  opt("--scenario", "scenario", "gaussian, gaussian-hetero, gaussian-threshold or youtube");
  opt("--algo", "algorithm", "ooqra, roqra or baseline");
  opt("--theta", "theta", "penalty weight");
  opt("--rbar", "long_term_avg", "long-term average budget, comma list per resource");
  opt("--budget", "per_slot_cap", "per-slot caps, comma list per resource");
  opt("--horizon", "horizon", "number of slots T");
  opt("--initial-size", "initial_size", "offline dataset size");
  opt("--trials", "trials", "Monte Carlo trials");
  opt("--seed", "seed", "base seed; trial i uses seed XOR i");
  opt("--eta0", "step_size_base", "classifier step size base");
  opt("--ucb-c", "ucb_c", "UCB exploration coefficient");
  opt("--baseline-eps", "baseline_eps_schedule", "inv_t, inv_log or one");
  opt("--hetero-coefficients", "hetero_coefficients", "true_per_slot or nominal");
  opt("--out", "out", "output directory");
  app.add_option("--config", flags.config_path, "key = value config file");
}

inline Settings merged_settings(const CommonFlags& flags) {
  Settings s = flags.config_path.empty() ? Settings{} : load_config_file(flags.config_path);
  for (const auto& [k, v] : flags.values) s[k] = v;
  return s;
}

inline std::string output_dir(const Settings& s) {
  const auto it = s.find("out");
  return it == s.end() || it->second.empty() ? "out" : it->second;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  return f;
}

inline int cmd_run(const Settings& settings, std::ostream& out) {
  const ExperimentConfig cfg = apply_settings(settings);
  const auto env = make_environment(cfg.scenario);
  const std::filesystem::path dir = output_dir(settings);
  std::filesystem::create_directories(dir);

  // Workers only hand traces back; the coordinator writes every file.
  std::vector<std::string> traces(static_cast<std::size_t>(cfg.trials));
  const auto runs = run_trials(cfg, *env, worker_threads(), [&](int i, const RunTrace& trace) {
    std::ostringstream os;
    write_trace_csv(os, trace);
    traces[static_cast<std::size_t>(i)] = os.str();
  });
  for (int i = 0; i < cfg.trials; ++i) {
    auto f = open_output(dir / ("trace_" + std::to_string(i) + ".csv"));
    f << traces[static_cast<std::size_t>(i)];
  }

  nlohmann::json summary = to_json(aggregate(runs));
  summary["config"] = to_json(cfg);
  summary["trials"] = nlohmann::json::array();
  for (const auto& r : runs) summary["trials"].push_back(to_json(r));
  open_output(dir / "summary.json") << dump17(summary);

  const AggregateSummary agg = aggregate(runs);
  out << cfg.scenario << ' ' << to_string(cfg.algorithm) << " theta=" << cfg.theta << " trials=" << cfg.trials
      << ": positive rate " << agg.positive_rate.mean << " +- " << agg.positive_rate.std << ", queue "
      << agg.queue_length.mean << " -> " << dir.string() << '\n';
  return kOk;
}

inline int cmd_sweep(const Settings& settings, std::ostream& out) {
  const auto sweep_it = settings.find("sweep");
  if (sweep_it == settings.end()) throw UsageError("sweep: missing --sweep");
  const SweepSpec sweep = parse_sweep(sweep_it->second);
  const ExperimentConfig base = apply_settings(settings);
  const auto env = make_environment(base.scenario);
  const std::size_t k = env->resources();
  const std::filesystem::path dir = output_dir(settings);
  std::filesystem::create_directories(dir);

  auto rows = open_output(dir / "sweep_trials.csv");
  auto agg_csv = open_output(dir / "sweep_summary.csv");
  rows << sweep.axis << ",trial,time_avg_positive_rate,time_avg_queue_length";
  for (std::size_t i = 1; i <= k; ++i) rows << ",avg_resource_used_" << i;
  rows << ",final_weight_norm";
  for (std::size_t i = 1; i <= k; ++i) rows << ",constraint_slack_" << i;
  rows << '\n';
  agg_csv << sweep.axis << ",trials,positive_rate_mean,positive_rate_std,queue_length_mean,queue_length_std";
  for (std::size_t i = 1; i <= k; ++i) agg_csv << ",resource_used_" << i << "_mean,resource_used_" << i << "_std";
  agg_csv << '\n';

  for (double value : sweep.values) {
    const ExperimentConfig cfg = at_grid_point(base, sweep, value);
    const auto runs = run_trials(cfg, *env);
    for (std::size_t t = 0; t < runs.size(); ++t) {
      const auto& r = runs[t];
      rows << fmt(value) << ',' << t << ',' << fmt(r.time_avg_positive_rate) << ',' << fmt(r.time_avg_queue_length);
      for (double v : r.avg_resource_used) rows << ',' << fmt(v);
      rows << ',' << fmt(r.final_weight_norm);
      for (double v : r.constraint_slack) rows << ',' << fmt(v);
      rows << '\n';
    }
    const AggregateSummary a = aggregate(runs);
    agg_csv << fmt(value) << ',' << runs.size() << ',' << fmt(a.positive_rate.mean) << ',' << fmt(a.positive_rate.std)
            << ',' << fmt(a.queue_length.mean) << ',' << fmt(a.queue_length.std);
    for (const auto& m : a.resource_used) agg_csv << ',' << fmt(m.mean) << ',' << fmt(m.std);
    agg_csv << '\n';
    out << sweep.axis << '=' << value << ": positive rate " << a.positive_rate.mean << " +- " << a.positive_rate.std
        << ", queue " << a.queue_length.mean << '\n';
  }
  return kOk;
}

inline int cmd_oracle_check(int instances, double grid_step, std::uint64_t seed, std::ostream& out) {
  if (instances < 1 || !(grid_step > 0.0)) throw UsageError("oracle-check: instances >= 1 and grid step > 0 required");
  const OracleSuiteResult r = run_oracle_suite(instances, grid_step, seed);
  out << "instances " << r.instances << ", max objective gap " << fmt(r.max_gap) << ", max interior KKT residual "
      << fmt(r.max_interior_residual) << ", non-sequential " << r.nonsequential << '\n';
  if (r.max_gap <= 1e-3 && r.nonsequential == 0) return kOk;
  out << "worst instance " << r.worst_instance << ": " << dump17(to_json(r.worst));
  return kFailure;
}

/// Entry point shared by the tool and the tests.
inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Closed-loop QoE-driven resource allocation simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags;
  auto* run = app.add_subcommand("run", "one algorithm x scenario x trials job");
  add_experiment_flags(*run, run_flags);
  auto* sweep = app.add_subcommand("sweep", "repeat a run over a theta / rbar / budget grid");
  add_experiment_flags(*sweep, sweep_flags);
  sweep->add_option_function<std::string>(
      "--sweep", [&](const std::string& v) { sweep_flags.values["sweep"] = v; }, "theta=1,5,10 or rbar=1:20:1");

  int instances = 200;
  double grid_step = 0.01;
  std::uint64_t oracle_seed = 12345;
  auto* oracle = app.add_subcommand("oracle-check", "closed-form allocator vs brute-force grid");
  oracle->add_option("--instances", instances, "random slot problems");
  oracle->add_option("--grid-step", grid_step, "grid resolution");
  oracle->add_option("--seed", oracle_seed, "instance generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  CLI::App* active = run->parsed() ? run : sweep->parsed() ? sweep : oracle;
  try {
    if (active == run) return cmd_run(merged_settings(run_flags), out);
    if (active == sweep) return cmd_sweep(merged_settings(sweep_flags), out);
    return cmd_oracle_check(instances, grid_step, oracle_seed, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kUsage;
  } catch (const SlotError& e) {
    err << "runtime error at slot " << e.slot() << ": " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace cora::cli
