// Command-line driver for the load-balancing policy reuse pipeline.
//
//   lbreuse [--config FILE] [--seed N] [--out DIR] <command> <subcommand>
//
// Exit codes: 0 ok, 2 config error, 3 missing/corrupt artifact, 4 numerical failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lbreuse/pipeline.hpp"

using namespace lbreuse;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool quiet = false;
};

void say(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << std::endl;
}

PipelineConfig load_config(const Globals& g) {
  PipelineConfig c = load_pipeline_config(g.config);
  if (g.seed) c.seed = *g.seed;
  return c;
}

struct Loaded {
  PipelineConfig cfg;
  PipelinePaths paths;
  std::vector<ScenarioSpec> scenarios;
  std::optional<ClusterStage> clusters;
  std::optional<PolicyBank> bank;
  std::optional<SelectorNet> selector;
};

Loaded load(const Globals& g, bool clusters, bool bank, bool selector) {
  Loaded l{load_config(g), PipelinePaths(g.out), {}, {}, {}, {}};
  l.paths.create();
  l.scenarios = load_scenarios(l.paths.scenarios());
  if (clusters) {
    if (!std::filesystem::exists(l.paths.clusters()))
      throw ArtifactError("missing " + l.paths.clusters() + "; run `scenario cluster` first");
    l.clusters = load_cluster_stage(l.paths.clusters());
  }
  if (bank) l.bank = PolicyBank::load(l.paths.bank());
  if (selector) {
    std::istringstream is(io::read_file(l.paths.selector(), "run `selector train` first"));
    l.selector = SelectorNet::load(is);
  }
  return l;
}

void cmd_generate(const Globals& g) {
  const PipelineConfig cfg = load_config(g);
  PipelinePaths paths(g.out);
  paths.create();
  const auto sc = stage_generate(cfg);
  save_scenarios(paths.scenarios(), sc);
  write_json(paths.run_config(), cfg);
  say(g, "wrote " + std::to_string(sc.size()) + " scenarios to " + paths.scenarios());
}

void cmd_validate(const Globals& g, const std::string& file) {
  const std::string path = file.empty() ? PipelinePaths(g.out).scenarios() : file;
  const auto sc = load_scenarios(path);
  std::vector<std::string> problems;
  for (const auto& s : sc)
    for (const auto& v : s.violations()) problems.push_back(v);
  for (const auto& p : problems) std::cout << p << "\n";
  if (!problems.empty()) throw ConfigError(std::to_string(problems.size()) + " scenario invariant violations");
  std::cout << sc.size() << " scenarios valid\n";
}

void cmd_cluster(const Globals& g) {
  Loaded l = load(g, false, false, false);
  const ClusterStage st = stage_cluster(l.cfg, l.scenarios);
  write_json(l.paths.clusters(), cluster_json(st, l.scenarios));
  std::cout << "labels:";
  for (int x : st.labels) std::cout << ' ' << x;
  std::cout << "\n";
  if (st.ari >= -0.5) std::printf("adjusted Rand index vs generator groups: %.4f\n", st.ari);
  std::cout << "train:";
  for (int i : st.split.train) std::cout << ' ' << l.scenarios[i].id;
  std::cout << "\ntest:";
  for (int i : st.split.test) std::cout << ' ' << l.scenarios[i].id;
  std::cout << "\n";
}

void cmd_bank_build(const Globals& g) {
  Loaded l = load(g, true, false, false);
  const auto t0 = std::chrono::steady_clock::now();
  const PolicyBank bank = stage_bank(l.cfg, l.scenarios, *l.clusters, l.paths.bank_partial(),
                                     [&](int i, const BankEntry& e) {
                                       const double s = std::chrono::duration<double>(
                                                            std::chrono::steady_clock::now() - t0).count();
                                       char b[160];
                                       std::snprintf(b, sizeof b, "policy %d (scenario %d) trained, final %.4f, %.0fs",
                                                     i, e.scenario_id, e.curve.empty() ? 0.0 : e.curve.back(), s);
                                       say(g, b);
                                     });
  bank.save(l.paths.bank());
  std::filesystem::remove(l.paths.bank_partial());
  say(g, "wrote " + l.paths.bank());
}

void cmd_bank_inspect(const Globals& g, const std::string& file) {
  const PolicyBank bank = PolicyBank::load(file.empty() ? PipelinePaths(g.out).bank() : file);
  std::printf("bank version %u, %d policies\n", bank.version, bank.size());
  std::printf("%-6s %-9s %-6s %-18s %-22s %s\n", "id", "scenario", "group", "config_hash", "seed", "final_reward");
  for (const auto& e : bank.entries)
    std::printf("%-6d %-9d %-6d %-18s %-22llu %.4f\n", e.policy_id, e.scenario_id, e.group, e.config_hash.c_str(),
                static_cast<unsigned long long>(e.seed), e.curve.empty() ? 0.0 : e.curve.back());
}

void cmd_collect(const Globals& g) {
  Loaded l = load(g, true, true, false);
  const SelectorDataset ds = stage_collect(l.cfg, *l.bank, l.scenarios, *l.clusters);
  save_dataset(ds, l.paths.dataset_bin(), l.paths.dataset_manifest());
  std::printf("raw samples %ld, windows %ld\n", ds.raw_frames(), ds.window_count());
}

void cmd_train(const Globals& g) {
  Loaded l = load(g, true, true, false);
  const SelectorDataset ds = load_dataset(l.paths.dataset_bin(), l.paths.dataset_manifest());
  const SelectorTraining tr = stage_train_selector(l.cfg, ds, l.bank->size());
  io::atomic_write(l.paths.selector(), [&](std::ostream& os) { tr.net.save(os); });
  write_json(l.paths.selector_report(), tr.report);
  std::printf("validation accuracy %.4f, train accuracy %.4f, epochs %d (best %d)\n", tr.report.val_accuracy,
              tr.report.train_accuracy, tr.report.epochs_run, tr.report.best_epoch);
}

void cmd_selector_eval(const Globals& g) {
  Loaded l = load(g, true, true, true);
  const SelectorEval ev = evaluate_selector_on_training(l.cfg, *l.selector, *l.bank, l.scenarios, *l.clusters);
  io::atomic_write(l.paths.selector_eval(), [&](std::ostream& os) {
    os << "policy_id,scenario_id,day,picked\n";
    for (std::size_t x = 0; x < ev.picks.size(); ++x)
      for (std::size_t d = 0; d < ev.picks[x].size(); ++d)
        os << x << ',' << l.scenarios[l.clusters->split.train[x]].id << ',' << d + 2 << ',' << ev.picks[x][d] << '\n';
  });
  std::printf("own policy picked on %.1f%% of scored days\n", 100.0 * ev.own_fraction);
}

void cmd_fixed(const Globals& g) {
  Loaded l = load(g, true, true, true);
  const ExperimentInputs in = experiment_inputs(l.cfg, l.scenarios, *l.clusters, &*l.bank, &*l.selector);
  const FixedResult res = run_fixed_experiment(l.cfg.experiment, in, [&](const std::string& m) { say(g, m); });
  write_fixed_logs(l.paths, res, in, l.cfg.experiment);
  render_report(g.out);
  std::cout << io::read_file((l.paths.tables() / "summary.md").string(), "");
}

void cmd_transient(const Globals& g) {
  Loaded l = load(g, true, true, true);
  const ExperimentInputs in = experiment_inputs(l.cfg, l.scenarios, *l.clusters, &*l.bank, &*l.selector);
  const TransientResult res = run_transient_experiment(l.cfg.experiment, in, [&](const std::string& m) { say(g, m); });
  write_transient_logs(l.paths, res, in, l.cfg.experiment);
  render_report(g.out);
  std::cout << io::read_file((l.paths.tables() / "summary.md").string(), "");
}

void cmd_render(const Globals& g) {
  const ReportFiles f = render_report(g.out);
  for (const auto& p : f.written) std::cout << p << "\n";
}

void cmd_pipeline(const Globals& g) {
  cmd_generate(g);
  cmd_cluster(g);
  cmd_bank_build(g);
  cmd_collect(g);
  cmd_train(g);
  cmd_selector_eval(g);
  cmd_fixed(g);
  cmd_transient(g);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy reuse for cellular load balancing: scenario generation, policy bank, selector, experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "pipeline config JSON (defaults apply to missing keys)");
  app.add_option("--seed", g.seed, "master seed, overrides the config's seed");
  app.add_option("--out", g.out, "output directory (logs/, tables/, plots/)");
  app.add_flag("-q,--quiet", g.quiet, "no progress messages on stderr");

  std::string file;
  auto* scenario = app.add_subcommand("scenario", "generate, validate or cluster traffic scenarios");
  scenario->require_subcommand(1);
  scenario->add_subcommand("generate", "write logs/scenarios.json")->callback([&] { cmd_generate(g); });
  auto* validate = scenario->add_subcommand("validate", "check every scenario invariant");
  validate->add_option("--file", file, "scenario file (default logs/scenarios.json)");
  validate->callback([&] { cmd_validate(g, file); });
  scenario->add_subcommand("cluster", "signatures, K-means labels and train/test split")->callback([&] {
    cmd_cluster(g);
  });

  auto* bank = app.add_subcommand("bank", "train or inspect the policy bank");
  bank->require_subcommand(1);
  bank->add_subcommand("build", "train one PPO policy per training scenario")->callback([&] { cmd_bank_build(g); });
  auto* inspect = bank->add_subcommand("inspect", "list bank entries");
  inspect->add_option("--file", file, "bank file (default logs/bank.lbpb)");
  inspect->callback([&] { cmd_bank_inspect(g, file); });

  auto* selector = app.add_subcommand("selector", "collect data for, train, or evaluate the policy selector");
  selector->require_subcommand(1);
  selector->add_subcommand("collect", "run every bank policy on every training scenario")->callback([&] {
    cmd_collect(g);
  });
  selector->add_subcommand("train", "train the selector on the collected windows")->callback([&] { cmd_train(g); });
  selector->add_subcommand("eval", "selection loop on the training scenarios")->callback([&] {
    cmd_selector_eval(g);
  });

  auto* experiment = app.add_subcommand("experiment", "run an experiment and render the report");
  experiment->require_subcommand(1);
  experiment->add_subcommand("fixed", "one week per scenario, every configured method")->callback([&] {
    cmd_fixed(g);
  });
  experiment->add_subcommand("transient", "scenario switched every segment")->callback([&] { cmd_transient(g); });

  auto* report = app.add_subcommand("report", "render tables and plots from logs");
  report->require_subcommand(1);
  report->add_subcommand("render", "write tables/ and plots/ from logs/")->callback([&] { cmd_render(g); });

  app.add_subcommand("pipeline", "every stage in order from one seed")->callback([&] { cmd_pipeline(g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
