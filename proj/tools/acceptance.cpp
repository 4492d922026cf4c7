// Acceptance run: one PASS/FAIL line per criterion. Runs the whole pipeline
// once under --out and checks every criterion against those artifacts.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "../tests/oracles.hpp"
#include "CLI11.hpp"
#include "lbreuse/pipeline.hpp"

using namespace lbreuse;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& name, const Outcome& o, double seconds, double budget_s) {
  const bool in_time = seconds <= budget_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s %2d %-22s %s (%.1f s%s)\n", ok ? "PASS" : "FAIL", n, name.c_str(), o.detail.c_str(), seconds,
              in_time ? "" : ", over budget");
  std::fflush(stdout);
}

template <class F>
Outcome timed(int n, const std::string& name, double budget_s, F&& f) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  report(n, name, o, std::chrono::duration<double>(Clock::now() - t0).count(), budget_s);
  return o;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string bytes_of_bank(const PolicyBank& b) {
  std::ostringstream os;
  b.save(os);
  return os.str();
}

std::string bytes_of_log(const std::vector<LogRow>& rows) {
  std::ostringstream os;
  write_log_csv(os, rows);
  return os.str();
}

// ---- criteria that need no pipeline --------------------------------------------

Outcome rule_oracles() {
  const auto g = oracle::rule_grid(handover_triggered, reselection_triggered);
  return {g.mismatches == 0, std::to_string(g.mismatches) + " mismatches in " + std::to_string(g.checked) + " cases"};
}

Outcome kpi_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  bool cong_ok = true, invariants_ok = true;
  for (int t = 0; t < 1000; ++t) {
    std::array<double, kNumCells> bits{};
    for (auto& b : bits) b = rng.uniform() < 0.2 ? 0.0 : rng.uniform(0.0, 3e7);
    const double dt = rng.uniform(1.0, 3600.0);
    const MetricsRecord m = compute_metrics(bits, dt);
    std::vector<double> mbps;
    for (double b : bits) mbps.push_back(b / dt / 1e6);
    const oracle::Kpis k = oracle::kpis(mbps, 1.0);
    worst = std::max({worst, oracle::rel_err(m.g_avg, k.avg), oracle::rel_err(m.g_min, k.min),
                      oracle::rel_err(m.g_sd, k.sd)});
    cong_ok &= m.g_cong == k.cong;

    auto perm = bits;
    std::swap(perm[0], perm[3]);
    std::swap(perm[1], perm[2]);
    const MetricsRecord p = compute_metrics(perm, dt);
    invariants_ok &= oracle::rel_err(p.g_avg, m.g_avg) <= 1e-12 && p.g_min == m.g_min &&
                     oracle::rel_err(p.g_sd, m.g_sd) <= 1e-12 && p.g_cong == m.g_cong;
    auto scaled = bits;
    for (auto& b : scaled) b *= 4.0;
    const MetricsRecord s = compute_metrics(scaled, dt, 4.0);
    invariants_ok &= oracle::rel_err(s.g_avg, 4.0 * m.g_avg) <= 1e-12 &&
                     oracle::rel_err(s.g_min, 4.0 * m.g_min) <= 1e-12 &&
                     oracle::rel_err(s.g_sd, 4.0 * m.g_sd) <= 1e-12 && s.g_cong == m.g_cong;
  }
  const MetricsRecord h = compute_metrics(std::array<double, kNumCells>{4e6, 2e6, 0.5e6, 1.5e6}, 1.0);
  const bool hand = std::abs(h.g_avg - 2.0) < 1e-12 && std::abs(h.g_min - 0.5) < 1e-12 &&
                    std::abs(h.g_sd - 1.2748) < 5e-5 && std::abs(h.g_cong - 0.75) < 1e-12;
  return {worst <= 1e-12 && cong_ok && invariants_ok && hand,
          "max rel err " + fmt("%.2e", worst) + ", invariants " + (invariants_ok ? "ok" : "broken") + ", hand case " +
              fmt("(%.4f, ", h.g_avg) + fmt("%.4f, ", h.g_min) + fmt("%.4f, ", h.g_sd) + fmt("%.2f)", h.g_cong)};
}

Outcome conservation_fuzz(const PipelineConfig& cfg, const std::vector<ScenarioSpec>& scenarios) {
  SimConfig sc = cfg.sim;
  sc.check_invariants = true;
  sc.rng_seed = 77;
  Simulator sim(cfg.topology, sc);
  Rng rng(78);
  const LbBounds& b = sc.bounds;
  long steps = 0, violations = 0;
  const ScenarioSpec& s = scenarios.front();
  for (int h = 0; steps < 10000; ++h) {
    sim.apply_profile(s.hour(h));
    const std::size_t n = sim.ues().size();
    for (int k = 0; k < sc.inner_steps_per_hour && steps < 10000; ++k, ++steps) {
      LbParams q;
      for (auto [i, j] : ordered_pairs()) {
        q.cio_db[i][j] = rng.uniform(b.cio_min_db, b.cio_max_db);
        q.beta_dbm[i][j] = rng.uniform(b.threshold_min_dbm, b.threshold_max_dbm);
        q.gamma_dbm[i][j] = rng.uniform(b.threshold_min_dbm, b.threshold_max_dbm);
      }
      const StepStats st = sim.step_inner(q);
      bool ok = sim.ues().size() == n;
      std::set<int> ids;
      for (const auto& ue : sim.ues()) {
        ok &= ue.attached_cell >= 0 && ue.attached_cell < kNumCells && ids.insert(ue.id).second;
        ok &= std::isfinite(ue.buffer_bits) && std::isfinite(ue.position_m.x) && std::isfinite(ue.position_m.y);
      }
      for (int c = 0; c < kNumCells; ++c)
        ok &= std::isfinite(st.delivered_bits[c]) && std::isfinite(st.prb_utilization[c]);
      violations += !ok;
    }
  }
  return {violations == 0, std::to_string(steps) + " steps, " + std::to_string(violations) + " violating steps"};
}

Outcome gradient_checks() {
  double ppo_worst = 0, sel_worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    PolicyNet net;
    net.init(seed, -0.5, 0.5);
    Rng rng(seed + 10);
    const int b = 64;
    PpoBatch batch{Mat(b, 48), Mat(b, kActionSize), Vec(b), Vec(b), Vec(b)};
    for (int r = 0; r < b; ++r) {
      std::vector<double> obs(48);
      for (int c = 0; c < 48; ++c) batch.obs(r, c) = obs[c] = rng.uniform();
      const ActionSample a = net.sample(obs, rng);
      for (int c = 0; c < kActionSize; ++c) batch.u(r, c) = a.u[c];
      batch.logp_old[r] = a.log_prob + rng.normal(0.0, 0.1);
      batch.advantages[r] = rng.normal();
      batch.returns[r] = rng.normal();
    }
    ppo_worst = std::max(ppo_worst, check_gradients(net, batch, PpoConfig{}, seed));

    SelectorNet sel;
    sel.init(seed);
    for (double& v : sel.params()) v += rng.normal(0.0, 0.02);
    Mat x(32, 288);
    std::vector<int> labels(32);
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 288; ++c) x(r, c) = rng.uniform();
      labels[r] = static_cast<int>(rng.below(9));
    }
    std::vector<double> g;
    sel.loss(sel.params(), x, labels, &g);
    auto loss = [&](const std::vector<double>& p) { return sel.loss(p, x, labels, nullptr); };
    sel_worst = std::max(sel_worst, finite_difference_check(sel.params(), g, loss, 200, seed).max_relative_error);
  }
  return {ppo_worst < 1e-4 && sel_worst < 1e-4,
          "max rel err PPO " + fmt("%.2e", ppo_worst) + ", selector " + fmt("%.2e", sel_worst) + " over 5 seeds"};
}

// Trained vs untrained policy on one scenario, paired evaluation seeds.
Outcome ppo_learning(const PipelineConfig& cfg, const ScenarioSpec& scenario) {
  const TrainContext ctx = cfg.context();
  std::vector<double> trained(5), untrained(5);
  parallel_for(5, cfg.experiment.threads, [&](int k) {
    PpoConfig pc = cfg.ppo;
    pc.seed = mix_seed(cfg.seed, 90000 + static_cast<std::uint64_t>(k));
    PolicyNet init(pc.net);
    init.init(mix_seed(pc.seed, 1), pc.init_log_std);  // the training start point
    const TrainResult r = train_policy(scenario, ctx, pc);
    const std::uint64_t eval_seed = mix_seed(cfg.seed, 91000 + static_cast<std::uint64_t>(k));
    trained[k] = evaluate_policy(r.net, scenario, 7, eval_seed, ctx).mean_reward;
    untrained[k] = evaluate_policy(init, scenario, 7, eval_seed, ctx).mean_reward;
  });
  double t = 0, u = 0;
  for (int k = 0; k < 5; ++k) {
    t += trained[k] / 5;
    u += untrained[k] / 5;
  }
  const double gain = t / u - 1.0;
  return {gain >= 0.10, "scenario " + std::to_string(scenario.id) + ": trained " + fmt("%.4f", t) + " vs untrained " +
                            fmt("%.4f", u) + " (" + fmt("%+.1f%%", 100 * gain) + ", need +10%)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lbreuse acceptance criteria"};
  std::string config, out = "acceptance_out";
  app.add_option("--config", config, "pipeline config JSON");
  app.add_option("--out", out, "directory for the pipeline artifacts");
  CLI11_PARSE(app, argc, argv);

  PipelineConfig cfg;
  try {
    cfg = load_pipeline_config(config);
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  }
  const PipelinePaths paths(out);
  paths.create();
  std::printf("code %s, config %s\n", kCodeVersion, config.empty() ? "(built-in defaults)" : config.c_str());

  timed(1, "rule-oracles", 10, rule_oracles);
  timed(2, "kpi-oracle", 5, kpi_oracle);

  const auto scenarios = stage_generate(cfg);
  save_scenarios(paths.scenarios(), scenarios);
  timed(3, "conservation-fuzz", 60, [&] { return conservation_fuzz(cfg, scenarios); });
  timed(4, "gradient-checks", 60, gradient_checks);
  timed(5, "ppo-learning", 15 * 60, [&] { return ppo_learning(cfg, scenarios.front()); });

  ClusterStage cl;
  timed(7, "clustering-recovery", 30, [&] {
    cl = stage_cluster(cfg, scenarios);
    write_json(paths.clusters(), cluster_json(cl, scenarios));
    return Outcome{cl.ari >= 0.9, "ARI " + fmt("%.3f", cl.ari) + " with k = " + std::to_string(cfg.clusters)};
  });

  // Bank training is a prerequisite of 6, 8-11 and not itself a criterion.
  const auto t_bank = Clock::now();
  PolicyBank bank;
  try {
    bank = stage_bank(cfg, scenarios, cl, paths.bank_partial());
    bank.save(paths.bank());
  } catch (const std::exception& e) {
    std::printf("bank build failed: %s\n", e.what());
    return 1;
  }
  std::printf("     bank of %d policies trained (%.1f s)\n", bank.size(),
              std::chrono::duration<double>(Clock::now() - t_bank).count());

  SelectorDataset ds;
  timed(6, "dataset-accounting", 30 * 60, [&] {
    ds = stage_collect(cfg, bank, scenarios, cl);
    save_dataset(ds, paths.dataset_bin(), paths.dataset_manifest());
    const long raw = ds.raw_frames(), win = static_cast<long>(make_windows(ds).size());
    const bool formula = expected_raw_frames(9, 9) == 15120 && expected_windows(9, 9, 24) == 13050;
    const bool collected = raw == expected_raw_frames(bank.size(), ds.num_labels) &&
                           win == expected_windows(bank.size(), ds.num_labels, ds.window);
    const bool paper_size = bank.size() == 9 && ds.num_labels == 9;
    return Outcome{formula && collected && (!paper_size || (raw == 15120 && win == 13050)),
                   "M = " + std::to_string(bank.size()) + ", |X| = " + std::to_string(ds.num_labels) + ": " +
                       std::to_string(raw) + " raw, " + std::to_string(win) + " windows"};
  });

  SelectorTraining sel;
  timed(8, "selector-accuracy", 10 * 60, [&] {
    sel = stage_train_selector(cfg, ds, bank.size());
    io::atomic_write(paths.selector(), [&](std::ostream& os) { sel.net.save(os); });
    write_json(paths.selector_report(), sel.report);
    const SelectorEval ev = evaluate_selector_on_training(cfg, sel.net, bank, scenarios, cl);
    return Outcome{sel.report.val_accuracy >= 0.9 && ev.own_fraction >= 0.9,
                   "val accuracy " + fmt("%.4f", sel.report.val_accuracy) + ", own-policy days " +
                       fmt("%.3f", ev.own_fraction)};
  });

  const ExperimentInputs in = experiment_inputs(cfg, scenarios, cl, &bank, &sel.net);
  ExperimentConfig ecfg = cfg.experiment;
  FixedResult fixed;
  std::vector<LogRow> fixed_rows;
  timed(9, "ordering", 30 * 60, [&] {
    fixed = run_fixed_experiment(ecfg, in);
    write_fixed_logs(paths, fixed, in, ecfg);
    fixed_rows = fixed.log();
    for (const char* m : {"BestPi", "Selector", "RandPi"})
      if (std::find(ecfg.methods.begin(), ecfg.methods.end(), m) == ecfg.methods.end())
        return Outcome{false, std::string("method ") + m + " not configured"};
    std::vector<LogRow> test_rows;
    for (const auto& r : fixed_rows)
      if (r.set == "test") test_rows.push_back(r);
    const auto per = per_scenario_reward(test_rows);
    int violations = 0;
    std::string worst;
    for (const auto& [id, best] : per.at("BestPi")) {
      const double s = per.at("Selector").at(id);
      if (best < s) {
        ++violations;
        worst += " sc" + std::to_string(id);
      }
    }
    const auto summary = summarize(test_rows, ecfg.methods);
    auto mean_of = [&](const std::string& m) {
      for (const auto& s : summary)
        if (s.method == m) return s.reward;
      return 0.0;
    };
    const double b = mean_of("BestPi"), s = mean_of("Selector"), r = mean_of("RandPi");
    const std::size_t n_test = per.at("Selector").size();
    const bool enough = n_test >= 10 && ecfg.seeds.size() >= 3;
    return Outcome{violations == 0 && s >= r && enough,
                   std::to_string(n_test) + " test scenarios x " + std::to_string(ecfg.seeds.size()) +
                       " seeds: BestPi " + fmt("%.4f", b) + " / Selector " + fmt("%.4f", s) + " / RandPi " +
                       fmt("%.4f", r) + ", per-scenario violations " + std::to_string(violations) + worst};
  });

  timed(10, "improvement", 30 * 60, [&] {
    std::vector<LogRow> test_rows;
    for (const auto& r : fixed_rows)
      if (r.set == "test") test_rows.push_back(r);
    double s = 0, b = 0;
    for (const auto& row : summarize(test_rows, ecfg.methods)) {
      if (row.method == "Selector") s = row.reward;
      if (row.method == "BasicLB") b = row.reward;
    }
    if (b == 0.0) return Outcome{false, "BasicLB not configured"};
    const double gain = s / b - 1.0;
    return Outcome{gain >= 0.05, "Selector " + fmt("%.4f", s) + " vs BasicLB " + fmt("%.4f", b) + " (" +
                                     fmt("%+.2f%%", 100 * gain) + ", need +5%)"};
  });

  TransientResult transient;
  timed(11, "transient-recovery", 20 * 60, [&] {
    transient = run_transient_experiment(ecfg, in);
    write_transient_logs(paths, transient, in, ecfg);
    const auto rows = transient.log();
    const auto sw = switch_report(rows, ecfg.segment_length_days, in.best_match);
    long rec = 0;
    for (const auto& s : sw) rec += s.recovered;
    const double frac = sw.empty() ? 0.0 : static_cast<double>(rec) / sw.size();
    const double daily = total_reward(rows, "Selector"), once = total_reward(rows, "SelectorFirstDayOnly");
    const bool enough = ecfg.transient_seeds.size() >= 5 && ecfg.total_days / ecfg.segment_length_days >= 8;
    return Outcome{enough && frac >= 0.8 && daily >= once,
                   std::to_string(rec) + "/" + std::to_string(sw.size()) + " switches recovered (" +
                       fmt("%.2f", frac) + "), total daily " + fmt("%.3f", daily) + " vs first-day-only " +
                       fmt("%.3f", once)};
  });

  try {
    const ReportFiles files = render_report(out);
    std::printf("     report: %zu files under %s\n", files.written.size(), out.c_str());
  } catch (const std::exception& e) {
    std::printf("     report failed: %s\n", e.what());
    ++failures;
  }

  timed(12, "determinism", 30 * 60, [&] {
    std::vector<std::string> diff;
    const auto sc2 = stage_generate(cfg);
    {
      const std::string p = (paths.logs() / "rerun_scenarios.json").string();
      save_scenarios(p, sc2);
      if (io::read_file(p) != io::read_file(paths.scenarios())) diff.push_back("scenarios");
      fs::remove(p);
    }
    const ClusterStage cl2 = stage_cluster(cfg, sc2);
    if (cluster_json(cl2, sc2).dump() != cluster_json(cl, scenarios).dump()) diff.push_back("clusters");
    // One bank entry retrained from scratch must reproduce the stored record.
    PolicyBank first;
    const auto xs = training_set(scenarios, cl.split);
    first.entries.push_back(train_bank_entry(*xs[0], 0, cl.labels.at(cl.split.train[0]), cfg.context(),
                                             cfg.ppo_config()));
    PolicyBank stored_first;
    stored_first.entries.push_back(bank.entries[0]);
    if (bytes_of_bank(first) != bytes_of_bank(stored_first)) diff.push_back("bank entry 0");
    if (!(stage_collect(cfg, bank, scenarios, cl) == ds)) diff.push_back("dataset");
    const SelectorTraining sel2 = stage_train_selector(cfg, ds, bank.size());
    std::ostringstream a, b;
    sel.net.save(a);
    sel2.net.save(b);
    if (a.str() != b.str()) diff.push_back("selector");
    ExperimentConfig other = ecfg;
    other.threads = ecfg.threads == 1 ? 2 : 1;  // scheduling must not matter
    if (bytes_of_log(run_fixed_experiment(other, in).log()) != bytes_of_log(fixed_rows)) diff.push_back("fixed log");
    if (bytes_of_log(run_transient_experiment(other, in).log()) != bytes_of_log(transient.log()))
      diff.push_back("transient log");
    std::string d;
    for (const auto& s : diff) d += " " + s;
    return Outcome{diff.empty(), diff.empty() ? "scenarios, clusters, bank entry, dataset, selector, logs identical"
                                              : "differs:" + d};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
