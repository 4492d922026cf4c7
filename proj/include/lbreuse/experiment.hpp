#pragma once

// Fixed and transient experiments, their hourly logs, and the report rendered
// from those logs alone (tables, SVG plots, markdown summary).

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lbreuse/baselines.hpp"
#include "lbreuse/config.hpp"
#include "lbreuse/errors.hpp"
#include "lbreuse/policy_bank.hpp"
#include "lbreuse/ppo.hpp"
#include "lbreuse/runner.hpp"
#include "lbreuse/selector.hpp"
#include "lbreuse/serialize.hpp"
#include "lbreuse/svg.hpp"

namespace lbreuse {

inline constexpr const char* kCodeVersion = "lbreuse 0.1.0";

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"BasicLB", "AdaptLB", "RandPi", "BestPi",
                                          "NewPi", "Selector", "SelectorFirstDayOnly", "JointPolicy"};
  return m;
}

inline const std::vector<std::string>& transient_capable_methods() {
  static const std::vector<std::string> m{"Selector", "SelectorFirstDayOnly", "BasicLB", "AdaptLB", "RandPi"};
  return m;
}

struct ExperimentConfig {
  std::vector<std::string> methods{"BasicLB", "AdaptLB", "RandPi", "BestPi", "Selector", "SelectorFirstDayOnly"};
  int days = 7;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::string> transient_methods{"Selector", "SelectorFirstDayOnly", "BasicLB", "AdaptLB"};
  int segment_length_days = 3;
  int total_days = 24;
  std::uint64_t segment_seed = 2024;
  std::vector<std::uint64_t> transient_seeds{1, 2, 3, 4, 5};
  int threads = 0;  // 0: one per hardware thread

  static void check_methods(const std::vector<std::string>& methods, const std::vector<std::string>& allowed,
                            const char* what) {
    if (methods.empty()) throw ConfigError(std::string(what) + " method list is empty");
    std::set<std::string> seen;
    for (const auto& m : methods) {
      if (std::find(allowed.begin(), allowed.end(), m) == allowed.end())
        throw ConfigError(std::string("unknown ") + what + " method '" + m + "'");
      if (!seen.insert(m).second) throw ConfigError(std::string("duplicate ") + what + " method '" + m + "'");
    }
  }

  void validate_fixed() const {
    check_methods(methods, known_methods(), "fixed");
    if (days < 2) throw ConfigError("experiment days must be >= 2 (day 1 is BasicLB)");
    if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  }
  void validate_transient() const {
    check_methods(transient_methods, transient_capable_methods(), "transient");
    if (segment_length_days < 1) throw ConfigError("segment_length_days must be >= 1");
    if (total_days < segment_length_days || total_days % segment_length_days != 0)
      throw ConfigError("transient total_days must be a positive multiple of segment_length_days");
    if (transient_seeds.empty()) throw ConfigError("transient experiment needs at least one seed");
  }
  void validate() const {
    validate_fixed();
    validate_transient();
    if (threads < 0) throw ConfigError("threads must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"methods", c.methods},
       {"days", c.days},
       {"seeds", c.seeds},
       {"transient_methods", c.transient_methods},
       {"segment_length_days", c.segment_length_days},
       {"total_days", c.total_days},
       {"segment_seed", c.segment_seed},
       {"transient_seeds", c.transient_seeds},
       {"threads", c.threads}};
}
inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  cfgio::only_keys(j, "experiment",
                   {"methods", "days", "seeds", "transient_methods", "segment_length_days", "total_days",
                    "segment_seed", "transient_seeds", "threads"});
  cfgio::opt(j, "methods", c.methods);
  cfgio::opt(j, "days", c.days);
  cfgio::opt(j, "seeds", c.seeds);
  cfgio::opt(j, "transient_methods", c.transient_methods);
  cfgio::opt(j, "segment_length_days", c.segment_length_days);
  cfgio::opt(j, "total_days", c.total_days);
  cfgio::opt(j, "segment_seed", c.segment_seed);
  cfgio::opt(j, "transient_seeds", c.transient_seeds);
  cfgio::opt(j, "threads", c.threads);
}

// Runs fn(0..n-1) on a small thread pool. fn must only write to its own slot.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  int t = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  t = std::min(t, n);
  if (t <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int k = 0; k < t; ++k)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---- hourly log ---------------------------------------------------------------

struct LogRow {
  std::string method;
  std::string set;  // train | test | transient
  std::uint64_t seed = 0;
  int scenario_id = 0;
  int day = 0;
  int hour = 0;
  std::string policy_id;  // bank id, or BasicLB / AdaptLB
  MetricsRecord metrics;
  double reward = 0.0;
};

inline std::string log_csv_header() { return std::string("method,set,seed,") + metrics_csv_header(); }

inline std::vector<LogRow> to_log_rows(const RunResult& run, const std::string& method, const std::string& set,
                                       std::uint64_t seed) {
  std::vector<LogRow> out;
  out.reserve(run.rows.size());
  for (const auto& r : run.rows) {
    LogRow l;
    l.method = method;
    l.set = set;
    l.seed = seed;
    l.scenario_id = r.scenario_id;
    l.day = r.day;
    l.hour = r.hour;
    l.policy_id = r.policy_id >= 0 ? std::to_string(r.policy_id) : run.day_label[r.day - 1];
    l.metrics = r.metrics;
    l.reward = r.reward;
    out.push_back(std::move(l));
  }
  return out;
}

inline void write_log_csv(std::ostream& os, const std::vector<LogRow>& rows) {
  os << log_csv_header() << '\n';
  for (const auto& r : rows)
    os << r.method << ',' << r.set << ',' << r.seed << ','
       << metrics_csv_row(r.scenario_id, r.day, r.hour, r.policy_id, r.metrics, r.reward) << '\n';
}

inline std::vector<LogRow> read_log_csv(const std::string& path) {
  std::istringstream is(io::read_file(path, "run the matching `experiment` subcommand first"));
  std::string line;
  if (!std::getline(is, line) || line != log_csv_header()) throw ArtifactError(path + ": unexpected log header");
  std::vector<LogRow> rows;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 12) throw ArtifactError(path + ":" + std::to_string(lineno) + ": expected 12 columns");
    try {
      LogRow r;
      r.method = f[0];
      r.set = f[1];
      r.seed = std::stoull(f[2]);
      r.scenario_id = std::stoi(f[3]);
      r.day = std::stoi(f[4]);
      r.hour = std::stoi(f[5]);
      r.policy_id = f[6];
      r.metrics.g_avg = std::stod(f[7]);
      r.metrics.g_min = std::stod(f[8]);
      r.metrics.g_sd = std::stod(f[9]);
      r.metrics.g_cong = std::stod(f[10]);
      r.reward = std::stod(f[11]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ArtifactError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

// ---- inputs shared by both experiments ------------------------------------------

struct ExperimentInputs {
  const std::vector<ScenarioSpec>* scenarios = nullptr;
  ScenarioSplit split;
  const PolicyBank* bank = nullptr;
  const SelectorNet* selector = nullptr;
  TrainContext ctx;
  BasicLbConfig basic;
  AdaptLbConfig adapt;
  PpoConfig ppo;                        // NewPi / JointPolicy training
  std::map<int, int> best_match;        // scenario id -> bank id with the nearest signature
  std::string config_hash;
};

namespace detail {

inline bool needs_bank(const std::string& m) {
  return m == "RandPi" || m == "BestPi" || m == "Selector" || m == "SelectorFirstDayOnly";
}
inline bool needs_selector(const std::string& m) { return m == "Selector" || m == "SelectorFirstDayOnly"; }

inline void check_inputs(const ExperimentInputs& in, const std::vector<std::string>& methods) {
  if (in.scenarios == nullptr || in.scenarios->empty())
    throw ArtifactError("no scenarios loaded; run `scenario generate` first");
  for (const auto& m : methods) {
    if (needs_bank(m) && (in.bank == nullptr || in.bank->size() == 0))
      throw ArtifactError("method " + m + " needs the policy bank; run `bank build` first");
    if (needs_selector(m) && in.selector == nullptr)
      throw ArtifactError("method " + m + " needs a trained selector; run `selector train` first");
  }
}

inline DayChooser rule_or_bank_chooser(const std::string& m, const ExperimentInputs& in, std::uint64_t rand_seed) {
  if (m == "BasicLB") return basic_lb_chooser(in.basic);
  if (m == "AdaptLB") return adapt_lb_chooser(in.adapt, in.basic);
  if (m == "RandPi") return rand_pi_chooser(*in.bank, rand_seed, in.basic);
  if (m == "Selector") return selection_chooser(*in.selector, *in.bank, SelectionMode::Daily, in.basic);
  if (m == "SelectorFirstDayOnly")
    return selection_chooser(*in.selector, *in.bank, SelectionMode::FirstDayOnly, in.basic);
  throw InvalidArgument("method " + m + " has no day chooser");
}

}  // namespace detail

// ---- fixed experiment -------------------------------------------------------------

struct FixedCell {
  std::string method;
  std::string set;
  int scenario_id = 0;
  std::uint64_t seed = 0;
  RunResult run;
  std::vector<double> bank_means;  // BestPi only: scored mean of every bank policy
};

struct FixedResult {
  std::vector<FixedCell> cells;
  std::vector<LogRow> log() const {
    std::vector<LogRow> rows;
    for (const auto& c : cells) {
      auto r = to_log_rows(c.run, c.method, c.set, c.seed);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
  }
  const FixedCell* find(const std::string& method, int scenario_id, std::uint64_t seed) const {
    for (const auto& c : cells)
      if (c.method == method && c.scenario_id == scenario_id && c.seed == seed) return &c;
    return nullptr;
  }
};

inline FixedResult run_fixed_experiment(const ExperimentConfig& cfg, const ExperimentInputs& in,
                                        const std::function<void(const std::string&)>& progress = {}) {
  cfg.validate_fixed();
  detail::check_inputs(in, cfg.methods);
  const auto& sc = *in.scenarios;
  std::vector<int> all = in.split.train;
  all.insert(all.end(), in.split.test.begin(), in.split.test.end());
  std::sort(all.begin(), all.end());
  std::set<int> train(in.split.train.begin(), in.split.train.end());
  auto has = [&](const char* m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end(); };

  // Policies trained on the target scenarios, once per scenario.
  std::vector<PolicyNet> newpi(sc.size());
  if (has("NewPi")) {
    if (progress) progress("training NewPi on " + std::to_string(all.size()) + " scenarios");
    parallel_for(static_cast<int>(all.size()), cfg.threads,
                 [&](int k) { newpi[all[k]] = new_pi(sc[all[k]], in.ctx, in.ppo); });
  }
  PolicyNet joint;
  if (has("JointPolicy")) {
    if (progress) progress("training JointPolicy on the training set");
    std::vector<const ScenarioSpec*> xs;
    for (int i : in.split.train) xs.push_back(&sc[i]);
    PpoConfig pc = in.ppo;
    pc.total_interactions *= static_cast<long>(xs.size());
    pc.seed = mix_seed(in.ppo.seed, 30000);
    joint = train_joint_policy(xs, in.ctx, pc).net;
  }

  FixedResult res;
  for (const auto& m : cfg.methods)
    for (int i : all)
      for (auto seed : cfg.seeds) {
        FixedCell c;
        c.method = m;
        c.set = train.count(i) ? "train" : "test";
        c.scenario_id = sc[i].id;
        c.seed = seed;
        res.cells.push_back(std::move(c));
      }
  std::map<int, int> index_of;
  for (int i = 0; i < static_cast<int>(sc.size()); ++i) index_of[sc[i].id] = i;
  if (progress) progress("running " + std::to_string(res.cells.size()) + " fixed-experiment cells");
  parallel_for(static_cast<int>(res.cells.size()), cfg.threads, [&](int k) {
    FixedCell& c = res.cells[k];
    const int i = index_of.at(c.scenario_id);
    const ScenarioSpec& s = sc[i];
    LbEnv env(in.ctx.topology, in.ctx.sim, in.ctx.env, in.ctx.reward);
    if (c.method == "BestPi") {
      BestPiResult bp = best_pi(*in.bank, s, cfg.days, c.seed, in.ctx, true);
      c.bank_means = bp.mean_rewards;
      c.run = std::move(bp.runs[bp.policy_id]);
    } else if (c.method == "NewPi" || c.method == "JointPolicy") {
      const PolicyNet& net = c.method == "NewPi" ? newpi[i] : joint;
      c.run = run_after_basic_day(env, s, cfg.days, c.seed, policy_day(net, 0), c.method);
    } else {
      c.run = run_days(env, {{&s, cfg.days}}, c.seed,
                       detail::rule_or_bank_chooser(c.method, in, mix_seed(c.seed, 50000 + s.id)), c.method);
    }
  });
  return res;
}

// ---- transient experiment -----------------------------------------------------------

struct TransientRun {
  std::uint64_t seed = 0;
  std::vector<int> sequence;  // scenario id of each segment
  std::map<std::string, RunResult> runs;
};

struct SwitchRecord {
  std::uint64_t seed = 0;
  int switch_day = 0;  // 1-based first day of the new segment
  int from_scenario = 0;
  int to_scenario = 0;
  int best_match = 0;
  int chosen_next_day = 0;
  bool recovered = false;
};

struct TransientResult {
  std::vector<TransientRun> runs;
  int segment_length_days = 0;
  std::vector<LogRow> log() const {
    std::vector<LogRow> rows;
    for (const auto& r : runs)
      for (const auto& [m, run] : r.runs) {
        auto x = to_log_rows(run, m, "transient", r.seed);
        rows.insert(rows.end(), x.begin(), x.end());
      }
    return rows;
  }
};

inline std::vector<int> transient_sequence(const std::vector<ScenarioSpec>& scenarios, int segments,
                                           std::uint64_t segment_seed, std::uint64_t run_seed) {
  Rng rng(mix_seed(segment_seed, run_seed));
  std::vector<int> seq;
  for (int k = 0; k < segments; ++k) seq.push_back(scenarios[rng.below(scenarios.size())].id);
  return seq;
}

inline TransientResult run_transient_experiment(const ExperimentConfig& cfg, const ExperimentInputs& in,
                                                const std::function<void(const std::string&)>& progress = {}) {
  cfg.validate_transient();
  detail::check_inputs(in, cfg.transient_methods);
  const auto& sc = *in.scenarios;
  std::map<int, const ScenarioSpec*> by_id;
  for (const auto& s : sc) by_id[s.id] = &s;
  const int segments = cfg.total_days / cfg.segment_length_days;

  TransientResult res;
  res.segment_length_days = cfg.segment_length_days;
  for (auto seed : cfg.transient_seeds) {
    TransientRun r;
    r.seed = seed;
    r.sequence = transient_sequence(sc, segments, cfg.segment_seed, seed);
    res.runs.push_back(std::move(r));
  }
  const int nm = static_cast<int>(cfg.transient_methods.size());
  std::vector<RunResult> out(res.runs.size() * nm);
  if (progress) progress("running " + std::to_string(out.size()) + " transient runs");
  parallel_for(static_cast<int>(out.size()), cfg.threads, [&](int k) {
    const TransientRun& r = res.runs[k / nm];
    const std::string& m = cfg.transient_methods[k % nm];
    std::vector<RunSegment> segs;
    for (int id : r.sequence) segs.push_back({by_id.at(id), cfg.segment_length_days});
    LbEnv env(in.ctx.topology, in.ctx.sim, in.ctx.env, in.ctx.reward);
    out[k] = run_days(env, segs, r.seed, detail::rule_or_bank_chooser(m, in, mix_seed(r.seed, 51000)), m);
  });
  for (std::size_t k = 0; k < out.size(); ++k)
    res.runs[k / nm].runs[cfg.transient_methods[k % nm]] = std::move(out[k]);
  return res;
}

// ---- aggregation (from log rows only) ------------------------------------------------

struct SummaryRow {
  std::string method;
  std::string set;
  long runs = 0;
  double reward = 0, g_avg = 0, g_min = 0, g_sd = 0, g_cong = 0;
};

// Scored-day (day >= 2) means per (method, set). Every run contributes the same
// number of rows, so the row mean equals the mean of per-run means.
inline std::vector<SummaryRow> summarize(const std::vector<LogRow>& rows, const std::vector<std::string>& method_order) {
  std::map<std::pair<std::string, std::string>, SummaryRow> acc;
  std::map<std::pair<std::string, std::string>, long> count;
  std::map<std::pair<std::string, std::string>, std::set<std::pair<std::uint64_t, int>>> runs;
  for (const auto& r : rows) {
    if (r.day < 2) continue;
    auto key = std::make_pair(r.method, r.set);
    auto& s = acc[key];
    s.method = r.method;
    s.set = r.set;
    s.reward += r.reward;
    s.g_avg += r.metrics.g_avg;
    s.g_min += r.metrics.g_min;
    s.g_sd += r.metrics.g_sd;
    s.g_cong += r.metrics.g_cong;
    ++count[key];
    runs[key].insert({r.seed, r.scenario_id});
  }
  std::vector<SummaryRow> out;
  for (const auto& m : method_order)
    for (const char* set : {"train", "test", "transient"}) {
      auto key = std::make_pair(m, std::string(set));
      auto it = acc.find(key);
      if (it == acc.end()) continue;
      SummaryRow s = it->second;
      const double n = static_cast<double>(count[key]);
      s.reward /= n;
      s.g_avg /= n;
      s.g_min /= n;
      s.g_sd /= n;
      s.g_cong /= n;
      s.runs = static_cast<long>(runs[key].size());
      out.push_back(s);
    }
  return out;
}

// Methods in first-appearance order of the log.
inline std::vector<std::string> methods_in(const std::vector<LogRow>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
  return out;
}

// method -> scenario id -> scored mean reward over seeds
inline std::map<std::string, std::map<int, double>> per_scenario_reward(const std::vector<LogRow>& rows) {
  std::map<std::string, std::map<int, std::pair<double, long>>> acc;
  for (const auto& r : rows) {
    if (r.day < 2) continue;
    auto& a = acc[r.method][r.scenario_id];
    a.first += r.reward;
    ++a.second;
  }
  std::map<std::string, std::map<int, double>> out;
  for (const auto& [m, byid] : acc)
    for (const auto& [id, a] : byid) out[m][id] = a.first / a.second;
  return out;
}

// method -> day (1-based) -> mean daily reward over seeds
inline std::map<std::string, std::vector<double>> per_day_reward(const std::vector<LogRow>& rows) {
  std::map<std::string, std::map<int, std::pair<double, long>>> acc;
  for (const auto& r : rows) {
    auto& a = acc[r.method][r.day];
    a.first += r.reward;
    ++a.second;
  }
  std::map<std::string, std::vector<double>> out;
  for (const auto& [m, byday] : acc)
    for (const auto& [d, a] : byday) out[m].push_back(a.first / a.second);
  return out;
}

// One record per segment boundary whose scenario differs from the previous one.
// A switch counts as recovered when the Selector's pick on the day after the
// switch day (the first pick made from the new traffic) is the best-matching id.
inline std::vector<SwitchRecord> switch_report(const std::vector<LogRow>& rows, int segment_length_days,
                                               const std::map<int, int>& best_match,
                                               const std::string& method = "Selector") {
  std::map<std::uint64_t, std::map<int, std::pair<int, std::string>>> days;  // seed -> day -> (scenario, policy)
  for (const auto& r : rows)
    if (r.method == method && r.hour == 0) days[r.seed][r.day] = {r.scenario_id, r.policy_id};
  std::vector<SwitchRecord> out;
  for (const auto& [seed, d] : days) {
    for (auto it = d.begin(); it != d.end(); ++it) {
      const int day = it->first;
      if (day == 1 || (day - 1) % segment_length_days != 0) continue;
      const auto prev = d.find(day - 1);
      const auto next = d.find(day + 1);
      if (prev == d.end() || next == d.end()) continue;
      if (prev->second.first == it->second.first) continue;
      SwitchRecord s;
      s.seed = seed;
      s.switch_day = day;
      s.from_scenario = prev->second.first;
      s.to_scenario = it->second.first;
      s.best_match = best_match.at(s.to_scenario);
      try {
        s.chosen_next_day = std::stoi(next->second.second);
      } catch (const std::exception&) {
        s.chosen_next_day = kBasicLbPolicyId;
      }
      s.recovered = s.chosen_next_day == s.best_match;
      out.push_back(s);
    }
  }
  return out;
}

// Sum over days of the per-day reward, averaged over seeds.
inline double total_reward(const std::vector<LogRow>& rows, const std::string& method) {
  double sum = 0.0;
  std::set<std::uint64_t> seeds;
  for (const auto& r : rows)
    if (r.method == method) {
      sum += r.reward / kHoursPerDay;
      seeds.insert(r.seed);
    }
  return seeds.empty() ? 0.0 : sum / seeds.size();
}

// ---- report ----------------------------------------------------------------------------

namespace detail {

inline std::string num(double v, const char* f = "%.6f") {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  io::atomic_write(p.string(), [&](std::ostream& os) { os << s; });
}

inline std::string pct(double a, double b) { return b == 0.0 ? "n/a" : num(100.0 * (a / b - 1.0), "%+.2f%%"); }

}  // namespace detail

struct ReportFiles {
  std::vector<std::string> written;
};

// Reads <out>/logs/{fixed,transient}_hourly.csv (whichever exist) plus their
// meta files and writes <out>/tables and <out>/plots.
inline ReportFiles render_report(const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path out(out_dir), logs = out / "logs", tables = out / "tables", plots = out / "plots";
  const bool have_fixed = fs::exists(logs / "fixed_hourly.csv");
  const bool have_transient = fs::exists(logs / "transient_hourly.csv");
  if (!have_fixed && !have_transient)
    throw ArtifactError("no experiment logs under " + logs.string() + "; run `experiment fixed` or `experiment transient` first");
  fs::create_directories(tables);
  fs::create_directories(plots);
  ReportFiles files;
  auto emit = [&](const fs::path& p, const std::string& s) {
    detail::write_text(p, s);
    files.written.push_back(p.string());
  };
  std::string md = "# Results\n\n";

  if (have_fixed) {
    const auto rows = read_log_csv((logs / "fixed_hourly.csv").string());
    const auto methods = methods_in(rows);
    if (methods.empty()) throw ConfigError("fixed log has no methods");
    const auto summary = summarize(rows, methods);
    std::string csv = "method,set,runs,reward,g_avg,g_min,g_sd,g_cong\n";
    for (const auto& s : summary)
      csv += s.method + "," + s.set + "," + std::to_string(s.runs) + "," + detail::num(s.reward) + "," +
             detail::num(s.g_avg) + "," + detail::num(s.g_min) + "," + detail::num(s.g_sd) + "," +
             detail::num(s.g_cong) + "\n";
    emit(tables / "fixed_summary.csv", csv);

    const auto per = per_scenario_reward(rows);
    std::map<int, std::string> set_of;
    for (const auto& r : rows) set_of[r.scenario_id] = r.set;
    std::string pcsv = "method,set,scenario_id,reward\n";
    for (const auto& m : methods)
      for (const auto& [id, v] : per.at(m))
        pcsv += m + "," + set_of[id] + "," + std::to_string(id) + "," + detail::num(v) + "\n";
    emit(tables / "fixed_per_scenario.csv", pcsv);

    std::string sel = "method,set,seed,scenario_id,day,policy_id\n";
    for (const auto& r : rows)
      if (r.hour == 0)
        sel += r.method + "," + r.set + "," + std::to_string(r.seed) + "," + std::to_string(r.scenario_id) + "," +
               std::to_string(r.day) + "," + r.policy_id + "\n";
    emit(tables / "fixed_selections.csv", sel);

    for (const char* set : {"train", "test"}) {
      std::vector<std::string> cats;
      std::vector<int> ids;
      for (const auto& [id, s] : set_of)
        if (s == set) {
          ids.push_back(id);
          cats.push_back("s" + std::to_string(id));
        }
      if (ids.empty()) continue;
      std::vector<svg::Series> series;
      for (const auto& m : methods) {
        svg::Series s{m, {}};
        for (int id : ids) s.values.push_back(per.at(m).count(id) ? per.at(m).at(id) : 0.0);
        series.push_back(std::move(s));
      }
      emit(plots / (std::string("fixed_per_scenario_") + set + ".svg"),
           svg::grouped_bars(std::string("Mean scored-day reward per ") + set + " scenario", "reward", cats, series));
    }

    if (fs::exists(logs / "bestpi_matrix.csv")) {
      // seed,scenario_id,policy_id,reward
      std::istringstream is(io::read_file((logs / "bestpi_matrix.csv").string(), ""));
      std::string line;
      std::getline(is, line);
      std::map<int, std::map<int, std::pair<double, int>>> acc;
      while (std::getline(is, line)) {
        int seed, id, p;
        double v;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &seed, &id, &p, &v) != 4)
          throw ArtifactError("malformed bestpi_matrix.csv line: " + line);
        acc[id][p].first += v;
        ++acc[id][p].second;
      }
      std::vector<std::string> cats;
      svg::Series lo{"bank min", {}}, mean{"bank mean", {}}, hi{"bank max", {}}, basic{"BasicLB", {}};
      std::string spread = "scenario_id,set,bank_min,bank_mean,bank_max\n";
      for (const auto& [id, bypol] : acc) {
        double mn = 1e300, mx = -1e300, sum = 0;
        for (const auto& [p, a] : bypol) {
          const double v = a.first / a.second;
          mn = std::min(mn, v);
          mx = std::max(mx, v);
          sum += v;
        }
        cats.push_back("s" + std::to_string(id));
        lo.values.push_back(mn);
        mean.values.push_back(sum / bypol.size());
        hi.values.push_back(mx);
        basic.values.push_back(per.count("BasicLB") && per.at("BasicLB").count(id) ? per.at("BasicLB").at(id) : 0.0);
        spread += std::to_string(id) + "," + set_of[id] + "," + detail::num(mn) + "," +
                  detail::num(sum / bypol.size()) + "," + detail::num(mx) + "\n";
      }
      emit(tables / "bank_spread.csv", spread);
      emit(plots / "bank_spread.svg",
           svg::grouped_bars("Bank policies per scenario", "reward", cats, {lo, mean, hi, basic}));
    }

    md += "## Fixed experiment (scored days 2-7)\n\n";
    md += "| Method | Set | Reward | G_avg | G_min | G_sd | G_cong |\n|---|---|---|---|---|---|---|\n";
    for (const auto& s : summary)
      md += "| " + s.method + " | " + s.set + " | " + detail::num(s.reward, "%.4f") + " | " +
            detail::num(s.g_avg, "%.3f") + " | " + detail::num(s.g_min, "%.3f") + " | " +
            detail::num(s.g_sd, "%.3f") + " | " + detail::num(s.g_cong, "%.3f") + " |\n";
    md += "\n";
    auto find = [&](const std::string& m, const std::string& set) -> const SummaryRow* {
      for (const auto& s : summary)
        if (s.method == m && s.set == set) return &s;
      return nullptr;
    };
    for (const char* set : {"train", "test"}) {
      const SummaryRow* sel_row = find("Selector", set);
      if (!sel_row) continue;
      for (const char* base : {"BasicLB", "AdaptLB", "RandPi"})
        if (const SummaryRow* b = find(base, set))
          md += std::string("- Selector vs ") + base + " (" + set + "): " + detail::pct(sel_row->reward, b->reward) +
                "\n";
    }
    md += "\n";
  }

  if (have_transient) {
    const auto rows = read_log_csv((logs / "transient_hourly.csv").string());
    const auto methods = methods_in(rows);
    const auto meta = read_json_file((logs / "transient_meta.json").string());
    const int seg = meta.at("segment_length_days").get<int>();
    std::map<int, int> best_match;
    for (const auto& [k, v] : meta.at("best_match").items()) best_match[std::stoi(k)] = v.get<int>();

    const auto daily = per_day_reward(rows);
    std::string dcsv = "method,day,reward\n";
    std::vector<svg::Series> series;
    for (const auto& m : methods) {
      const auto& v = daily.at(m);
      for (std::size_t d = 0; d < v.size(); ++d)
        dcsv += m + "," + std::to_string(d + 1) + "," + detail::num(v[d]) + "\n";
      series.push_back({m, v});
    }
    emit(tables / "transient_daily.csv", dcsv);
    emit(plots / "transient_daily.svg", svg::lines("Mean reward per day, scenario switched every " +
                                                       std::to_string(seg) + " days",
                                                   "day", "reward", series));

    md += "## Transient experiment\n\n| Method | Total reward (mean over seeds) |\n|---|---|\n";
    for (const auto& m : methods) md += "| " + m + " | " + detail::num(total_reward(rows, m), "%.4f") + " |\n";
    md += "\n";
    if (std::find(methods.begin(), methods.end(), "Selector") != methods.end()) {
      const auto sw = switch_report(rows, seg, best_match);
      std::string scsv = "seed,switch_day,from_scenario,to_scenario,best_match,chosen_next_day,recovered\n";
      int rec = 0;
      for (const auto& s : sw) {
        scsv += std::to_string(s.seed) + "," + std::to_string(s.switch_day) + "," + std::to_string(s.from_scenario) +
                "," + std::to_string(s.to_scenario) + "," + std::to_string(s.best_match) + "," +
                std::to_string(s.chosen_next_day) + "," + (s.recovered ? "1" : "0") + "\n";
        rec += s.recovered;
      }
      emit(tables / "transient_switches.csv", scsv);
      md += "- Switches recovered on the next day: " + std::to_string(rec) + " / " + std::to_string(sw.size()) + "\n";
      for (const char* base : {"SelectorFirstDayOnly", "BasicLB", "AdaptLB"})
        if (std::find(methods.begin(), methods.end(), base) != methods.end())
          md += std::string("- Selector vs ") + base + " (total): " +
                detail::pct(total_reward(rows, "Selector"), total_reward(rows, base)) + "\n";
      md += "\n";
    }
  }
  emit(tables / "summary.md", md);
  return files;
}

}  // namespace lbreuse
