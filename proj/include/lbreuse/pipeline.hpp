#pragma once

// End-to-end pipeline from one config and one master seed:
// generate -> cluster -> split -> bank -> dataset -> selector -> experiments.
// Every stage reads and writes its artifacts under <out>/logs so the CLI can
// run stages one at a time.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbreuse/clustering.hpp"
#include "lbreuse/config.hpp"
#include "lbreuse/experiment.hpp"
#include "lbreuse/policy_bank.hpp"
#include "lbreuse/scenarios.hpp"
#include "lbreuse/selector.hpp"

namespace lbreuse {

inline void to_json(nlohmann::json& j, const SelectorConfig& c) {
  j = {{"val_fraction", c.val_fraction}, {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs},     {"patience", c.patience},           {"bn_momentum", c.bn_momentum},
       {"window", c.window},             {"hidden", c.hidden},               {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, SelectorConfig& c) {
  cfgio::only_keys(j, "selector",
                   {"val_fraction", "learning_rate", "batch_size", "max_epochs", "patience", "bn_momentum", "window",
                    "hidden", "seed"});
  cfgio::opt(j, "val_fraction", c.val_fraction);
  cfgio::opt(j, "learning_rate", c.learning_rate);
  cfgio::opt(j, "batch_size", c.batch_size);
  cfgio::opt(j, "max_epochs", c.max_epochs);
  cfgio::opt(j, "patience", c.patience);
  cfgio::opt(j, "bn_momentum", c.bn_momentum);
  cfgio::opt(j, "window", c.window);
  cfgio::opt(j, "hidden", c.hidden);
  cfgio::opt(j, "seed", c.seed);
}

struct PipelineConfig {
  std::uint64_t seed = 42;
  SectorTopology topology = SectorTopology::standard();
  SimConfig sim;
  EnvConfig env;
  RewardConfig reward;
  std::vector<ArchetypeParams> archetypes = default_archetypes();
  int scenarios_per_group = 7;
  int clusters = 3;
  int kmeans_restarts = 20;
  int train_per_group = 3;
  PpoConfig ppo;
  SelectorConfig selector;
  BasicLbConfig basic_lb;
  AdaptLbConfig adapt_lb;
  ExperimentConfig experiment;

  // Stage seeds, all derived from the master seed.
  std::uint64_t scenario_seed() const { return mix_seed(seed, 1); }
  std::uint64_t kmeans_seed() const { return mix_seed(seed, 2); }
  std::uint64_t split_seed() const { return mix_seed(seed, 3); }
  std::uint64_t bank_seed() const { return mix_seed(seed, 4); }
  std::uint64_t dataset_seed() const { return mix_seed(seed, 5); }
  std::uint64_t selector_seed() const { return mix_seed(seed, 6); }

  TrainContext context() const { return {topology, sim, env, reward}; }
  PpoConfig ppo_config() const {
    PpoConfig p = ppo;
    p.seed = bank_seed();
    return p;
  }
  SelectorConfig selector_config() const {
    SelectorConfig s = selector;
    s.seed = selector_seed();
    return s;
  }

  void validate() const {
    sim.validate();
    reward.validate();
    ppo.validate();
    selector.validate();
    experiment.validate();
    if (archetypes.empty()) throw ConfigError("at least one archetype required");
    if (scenarios_per_group < 2) throw ConfigError("scenarios_per_group must be >= 2");
    if (clusters < 1) throw ConfigError("clusters must be >= 1");
    if (kmeans_restarts < 1) throw ConfigError("kmeans_restarts must be >= 1");
    if (train_per_group < 1 || train_per_group >= scenarios_per_group)
      throw ConfigError("train_per_group must be in [1, scenarios_per_group)");
    if (selector.window != kHoursPerDay) throw ConfigError("selector window must be 24 (one day of frames)");
  }
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"seed", c.seed},
       {"topology", c.topology},
       {"sim", c.sim},
       {"env", c.env},
       {"reward", c.reward},
       {"scenarios", {{"archetypes", c.archetypes}, {"per_group", c.scenarios_per_group}}},
       {"clustering", {{"k", c.clusters}, {"restarts", c.kmeans_restarts}, {"train_per_group", c.train_per_group}}},
       {"ppo", c.ppo},
       {"selector", c.selector},
       {"baselines", {{"basic_lb", c.basic_lb}, {"adapt_lb", c.adapt_lb}}},
       {"experiment", c.experiment}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
  cfgio::only_keys(j, "config",
                   {"seed", "topology", "sim", "env", "reward", "scenarios", "clustering", "ppo", "selector",
                    "baselines", "experiment"});
  cfgio::opt(j, "seed", c.seed);
  cfgio::opt(j, "topology", c.topology);
  cfgio::opt(j, "sim", c.sim);
  cfgio::opt(j, "env", c.env);
  cfgio::opt(j, "reward", c.reward);
  if (j.contains("scenarios")) {
    const auto& s = j.at("scenarios");
    cfgio::only_keys(s, "scenarios", {"archetypes", "per_group"});
    cfgio::opt(s, "archetypes", c.archetypes);
    cfgio::opt(s, "per_group", c.scenarios_per_group);
  }
  if (j.contains("clustering")) {
    const auto& s = j.at("clustering");
    cfgio::only_keys(s, "clustering", {"k", "restarts", "train_per_group"});
    cfgio::opt(s, "k", c.clusters);
    cfgio::opt(s, "restarts", c.kmeans_restarts);
    cfgio::opt(s, "train_per_group", c.train_per_group);
  }
  cfgio::opt(j, "ppo", c.ppo);
  cfgio::opt(j, "selector", c.selector);
  if (j.contains("baselines")) {
    const auto& s = j.at("baselines");
    cfgio::only_keys(s, "baselines", {"basic_lb", "adapt_lb"});
    cfgio::opt(s, "basic_lb", c.basic_lb);
    cfgio::opt(s, "adapt_lb", c.adapt_lb);
  }
  cfgio::opt(j, "experiment", c.experiment);
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  PipelineConfig c;
  if (!path.empty()) {
    const nlohmann::json j = read_json_file(path);
    try {
      c = j.get<PipelineConfig>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

// ---- artifact locations ---------------------------------------------------------

struct PipelinePaths {
  std::filesystem::path out;
  explicit PipelinePaths(std::filesystem::path o) : out(std::move(o)) {}
  std::filesystem::path logs() const { return out / "logs"; }
  std::filesystem::path tables() const { return out / "tables"; }
  std::filesystem::path plots() const { return out / "plots"; }
  std::string scenarios() const { return (logs() / "scenarios.json").string(); }
  std::string clusters() const { return (logs() / "clusters.json").string(); }
  std::string bank() const { return (logs() / "bank.lbpb").string(); }
  std::string bank_partial() const { return (logs() / "bank.partial.lbpb").string(); }
  std::string dataset_bin() const { return (logs() / "dataset.bin").string(); }
  std::string dataset_manifest() const { return (logs() / "dataset.json").string(); }
  std::string selector() const { return (logs() / "selector.lbsn").string(); }
  std::string selector_report() const { return (logs() / "selector_report.json").string(); }
  std::string selector_eval() const { return (logs() / "selector_eval.csv").string(); }
  std::string fixed_log() const { return (logs() / "fixed_hourly.csv").string(); }
  std::string bestpi_matrix() const { return (logs() / "bestpi_matrix.csv").string(); }
  std::string fixed_meta() const { return (logs() / "fixed_meta.json").string(); }
  std::string transient_log() const { return (logs() / "transient_hourly.csv").string(); }
  std::string transient_meta() const { return (logs() / "transient_meta.json").string(); }
  std::string run_config() const { return (logs() / "config.json").string(); }
  void create() const {
    std::filesystem::create_directories(logs());
    std::filesystem::create_directories(tables());
    std::filesystem::create_directories(plots());
  }
};

inline void write_json(const std::string& path, const nlohmann::json& j) {
  io::atomic_write(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

// ---- stages ----------------------------------------------------------------------

inline std::vector<ScenarioSpec> stage_generate(const PipelineConfig& cfg) {
  return generate_scenario_set(cfg.archetypes, cfg.scenarios_per_group, cfg.scenario_seed());
}

struct ClusterStage {
  std::vector<DailyTrafficSignature> signatures;
  std::vector<int> labels;
  double ari = -1.0;  // against generator groups when every scenario has one
  ScenarioSplit split;
  std::map<int, int> best_match;  // scenario id -> bank id (position in split.train)
  std::map<int, int> groups;      // scenario id -> cluster label
};

// Bank id of the training scenario whose z-scored signature is nearest
// (a training scenario maps to its own policy).
inline std::map<int, int> nearest_training_policy(const std::vector<std::vector<double>>& z,
                                                  const std::vector<ScenarioSpec>& scenarios,
                                                  const std::vector<int>& train) {
  std::map<int, int> out;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    int best = 0;
    double bd = 1e300;
    for (std::size_t p = 0; p < train.size(); ++p) {
      const double d = squared_distance(z[i], z[train[p]]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(p);
      }
    }
    out[scenarios[i].id] = best;
  }
  return out;
}

inline ClusterStage stage_cluster(const PipelineConfig& cfg, const std::vector<ScenarioSpec>& scenarios) {
  ClusterStage st;
  for (const auto& s : scenarios) st.signatures.push_back(extract_signature(s, cfg.topology, cfg.sim));
  st.labels = cluster_scenarios(st.signatures, cfg.clusters, cfg.kmeans_seed(), cfg.kmeans_restarts);
  std::vector<int> truth;
  for (const auto& s : scenarios)
    if (s.group_hint) truth.push_back(*s.group_hint);
  if (truth.size() == scenarios.size()) st.ari = adjusted_rand_index(st.labels, truth);
  st.split = split_train_test(static_cast<int>(scenarios.size()), st.labels, cfg.train_per_group, cfg.split_seed());
  std::vector<std::vector<double>> rows;
  for (const auto& s : st.signatures) rows.push_back(s.features);
  st.best_match = nearest_training_policy(zscore(rows), scenarios, st.split.train);
  for (std::size_t i = 0; i < scenarios.size(); ++i) st.groups[scenarios[i].id] = st.labels[i];
  return st;
}

inline nlohmann::json cluster_json(const ClusterStage& st, const std::vector<ScenarioSpec>& scenarios) {
  nlohmann::json sig = nlohmann::json::array();
  for (const auto& s : st.signatures) sig.push_back({{"scenario_id", s.scenario_id}, {"features", s.features}});
  nlohmann::json bm = nlohmann::json::object();
  for (const auto& [id, p] : st.best_match) bm[std::to_string(id)] = p;
  std::vector<int> ids;
  for (const auto& s : scenarios) ids.push_back(s.id);
  return {{"scenario_ids", ids},   {"labels", st.labels},       {"ari", st.ari},
          {"train", st.split.train}, {"test", st.split.test}, {"best_match", bm},
          {"signatures", sig}};
}

inline ClusterStage load_cluster_stage(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  ClusterStage st;
  try {
    st.labels = j.at("labels").get<std::vector<int>>();
    st.ari = j.at("ari").get<double>();
    st.split.train = j.at("train").get<std::vector<int>>();
    st.split.test = j.at("test").get<std::vector<int>>();
    for (const auto& [k, v] : j.at("best_match").items()) st.best_match[std::stoi(k)] = v.get<int>();
    const auto ids = j.at("scenario_ids").get<std::vector<int>>();
    for (std::size_t i = 0; i < ids.size(); ++i) st.groups[ids[i]] = st.labels.at(i);
    for (const auto& s : j.at("signatures"))
      st.signatures.push_back({s.at("scenario_id").get<int>(), s.at("features").get<std::vector<double>>()});
  } catch (const std::exception& e) {
    throw ArtifactError("corrupt cluster file " + path + ": " + e.what());
  }
  return st;
}

inline std::vector<const ScenarioSpec*> training_set(const std::vector<ScenarioSpec>& scenarios,
                                                     const ScenarioSplit& split) {
  std::vector<const ScenarioSpec*> xs;
  for (int i : split.train) xs.push_back(&scenarios.at(i));
  return xs;
}

inline PolicyBank stage_bank(const PipelineConfig& cfg, const std::vector<ScenarioSpec>& scenarios,
                             const ClusterStage& cl, const std::string& recovery_path = {},
                             const std::function<void(int, const BankEntry&)>& on_entry = {}) {
  std::vector<int> groups;
  for (int i : cl.split.train) groups.push_back(cl.labels.at(i));
  return build_bank(training_set(scenarios, cl.split), groups, cfg.context(), cfg.ppo_config(), recovery_path,
                    on_entry);
}

inline SelectorDataset stage_collect(const PipelineConfig& cfg, const PolicyBank& bank,
                                     const std::vector<ScenarioSpec>& scenarios, const ClusterStage& cl) {
  return collect_dataset(bank, training_set(scenarios, cl.split), cfg.dataset_seed(), cfg.context(), cfg.basic_lb);
}

inline SelectorTraining stage_train_selector(const PipelineConfig& cfg, const SelectorDataset& ds,
                                             int num_policies) {
  return train_selector(make_windows(ds), num_policies, cfg.selector_config());
}

// Selection loop on every training scenario: fraction of scored days on which
// the scenario's own policy was picked.
struct SelectorEval {
  std::vector<std::vector<int>> picks;  // per training scenario, days 2..D
  double own_fraction = 0.0;
};

inline SelectorEval evaluate_selector_on_training(const PipelineConfig& cfg, const SelectorNet& net,
                                                  const PolicyBank& bank, const std::vector<ScenarioSpec>& scenarios,
                                                  const ClusterStage& cl) {
  const auto xs = training_set(scenarios, cl.split);
  SelectorEval ev;
  ev.picks.resize(xs.size());
  const TrainContext ctx = cfg.context();
  parallel_for(static_cast<int>(xs.size()), cfg.experiment.threads, [&](int x) {
    const RunResult r = run_selection_loop(net, bank, *xs[x], cfg.experiment.days, SelectionMode::Daily,
                                           mix_seed(cfg.seed, 70000 + static_cast<std::uint64_t>(x)), ctx,
                                           cfg.basic_lb);
    ev.picks[x].assign(r.day_policy.begin() + 1, r.day_policy.end());
  });
  long own = 0, total = 0;
  for (std::size_t x = 0; x < xs.size(); ++x)
    for (int p : ev.picks[x]) {
      ++total;
      own += p == static_cast<int>(x);
    }
  ev.own_fraction = total ? static_cast<double>(own) / total : 0.0;
  return ev;
}

inline ExperimentInputs experiment_inputs(const PipelineConfig& cfg, const std::vector<ScenarioSpec>& scenarios,
                                          const ClusterStage& cl, const PolicyBank* bank,
                                          const SelectorNet* selector) {
  ExperimentInputs in;
  in.scenarios = &scenarios;
  in.split = cl.split;
  in.bank = bank;
  in.selector = selector;
  in.ctx = cfg.context();
  in.basic = cfg.basic_lb;
  in.adapt = cfg.adapt_lb;
  in.ppo = cfg.ppo_config();
  in.best_match = cl.best_match;
  in.config_hash = config_hash(cfg);
  return in;
}

inline void write_fixed_logs(const PipelinePaths& paths, const FixedResult& res, const ExperimentInputs& in,
                             const ExperimentConfig& ecfg) {
  io::atomic_write(paths.fixed_log(), [&](std::ostream& os) { write_log_csv(os, res.log()); });
  io::atomic_write(paths.bestpi_matrix(), [&](std::ostream& os) {
    os << "seed,scenario_id,policy_id,reward\n";
    for (const auto& c : res.cells)
      for (std::size_t p = 0; p < c.bank_means.size(); ++p) {
        char b[96];
        std::snprintf(b, sizeof b, "%llu,%d,%zu,%.9g\n", static_cast<unsigned long long>(c.seed), c.scenario_id, p,
                      c.bank_means[p]);
        os << b;
      }
  });
  write_json(paths.fixed_meta(), {{"code_version", kCodeVersion},
                                  {"config_hash", in.config_hash},
                                  {"methods", ecfg.methods},
                                  {"days", ecfg.days},
                                  {"seeds", ecfg.seeds},
                                  {"train", in.split.train},
                                  {"test", in.split.test}});
}

inline void write_transient_logs(const PipelinePaths& paths, const TransientResult& res, const ExperimentInputs& in,
                                 const ExperimentConfig& ecfg) {
  io::atomic_write(paths.transient_log(), [&](std::ostream& os) { write_log_csv(os, res.log()); });
  nlohmann::json seq = nlohmann::json::object();
  for (const auto& r : res.runs) seq[std::to_string(r.seed)] = r.sequence;
  nlohmann::json bm = nlohmann::json::object();
  for (const auto& [id, p] : in.best_match) bm[std::to_string(id)] = p;
  write_json(paths.transient_meta(), {{"code_version", kCodeVersion},
                                      {"config_hash", in.config_hash},
                                      {"methods", ecfg.transient_methods},
                                      {"segment_length_days", ecfg.segment_length_days},
                                      {"total_days", ecfg.total_days},
                                      {"segment_seed", ecfg.segment_seed},
                                      {"sequences", seq},
                                      {"best_match", bm}});
}

}  // namespace lbreuse
