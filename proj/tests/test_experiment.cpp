#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "lbreuse/pipeline.hpp"

using namespace lbreuse;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  std::vector<ScenarioSpec> scenarios = generate_scenario_set(default_archetypes(), 2, 42);
  PolicyBank bank;
  SelectorNet selector{SelectorNetShape{288, {16}, 3}};
  ExperimentInputs in;

  Fixture() {
    for (int i = 0; i < 3; ++i) {
      BankEntry e;
      e.policy_id = i;
      e.scenario_id = 2 * i;
      e.group = i + 1;
      e.net.init(300 + i, -0.5, 1.0);
      bank.entries.push_back(std::move(e));
    }
    selector.init(4);
    in.scenarios = &scenarios;
    in.split = {{0, 2, 4}, {1, 3, 5}};
    in.bank = &bank;
    in.selector = &selector;
    in.ctx.sim.inner_steps_per_hour = 10;
    for (int i = 0; i < 6; ++i) in.best_match[i] = i / 2;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

ExperimentConfig small_cfg() {
  ExperimentConfig c;
  c.methods = {"BasicLB", "AdaptLB", "RandPi", "BestPi", "Selector", "SelectorFirstDayOnly"};
  c.days = 3;
  c.seeds = {1, 2};
  c.segment_length_days = 2;
  c.total_days = 8;
  c.transient_seeds = {1, 2};
  c.threads = 1;
  return c;
}

LogRow row(const std::string& method, std::uint64_t seed, int scenario, int day, const std::string& policy,
           double reward) {
  LogRow r;
  r.method = method;
  r.set = "transient";
  r.seed = seed;
  r.scenario_id = scenario;
  r.day = day;
  r.hour = 0;
  r.policy_id = policy;
  r.reward = reward;
  return r;
}

std::string slurp(const fs::path& p) { return io::read_file(p.string()); }

}  // namespace

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c = small_cfg();
  EXPECT_NO_THROW(c.validate());
  c.methods = {};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_cfg();
  c.methods = {"BasicLB", "Oracle"};
  EXPECT_THROW(c.validate(), ConfigError);
  c.methods = {"BasicLB", "BasicLB"};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_cfg();
  c.total_days = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_cfg();
  c.transient_methods = {"BestPi"};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_cfg();
  c.days = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ExperimentConfig, JsonRoundTripRejectsUnknownKeys) {
  const ExperimentConfig c = small_cfg();
  nlohmann::json j = c;
  EXPECT_EQ(nlohmann::json(j.get<ExperimentConfig>()), j);
  j["dayz"] = 3;
  EXPECT_THROW(j.get<ExperimentConfig>(), ConfigError);
}

TEST(ParallelFor, CoversAllAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](int i) { hit[i] += 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 3, [](int i) { if (i == 7) throw NumericalError("x"); }), NumericalError);
}

TEST(FixedExperiment, CellsDayOneAndThreadIndependence) {
  const auto& f = fixture();
  ExperimentConfig c = small_cfg();
  const FixedResult a = run_fixed_experiment(c, f.in);
  EXPECT_EQ(a.cells.size(), 6u * 6u * 2u);
  for (const auto& cell : a.cells) {
    ASSERT_EQ(cell.run.days(), 3);
    EXPECT_EQ(cell.run.day_label[0], "BasicLB");
    EXPECT_EQ(cell.set, cell.scenario_id % 2 == 0 ? "train" : "test");
  }
  const auto* first = a.find("SelectorFirstDayOnly", 3, 2);
  ASSERT_NE(first, nullptr);
  EXPECT_EQ(first->run.day_policy[1], first->run.day_policy[2]);
  const auto* best = a.find("BestPi", 1, 1);
  ASSERT_NE(best, nullptr);
  EXPECT_EQ(best->bank_means.size(), 3u);
  for (double m : best->bank_means) EXPECT_LE(m, best->run.mean_reward_from(1));

  c.threads = 3;
  const FixedResult b = run_fixed_experiment(c, f.in);
  std::ostringstream sa, sb;
  write_log_csv(sa, a.log());
  write_log_csv(sb, b.log());
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(FixedExperiment, MissingArtifactsAreReported) {
  ExperimentInputs in = fixture().in;
  in.selector = nullptr;
  EXPECT_THROW(run_fixed_experiment(small_cfg(), in), ArtifactError);
  ExperimentConfig c = small_cfg();
  c.methods = {"BasicLB", "AdaptLB"};
  EXPECT_NO_THROW(run_fixed_experiment(c, in));
}

TEST(Transient, SequenceLengthAndDeterminism) {
  const auto& sc = fixture().scenarios;
  const auto s = transient_sequence(sc, 24 / 3, 2024, 1);
  EXPECT_EQ(s.size(), 8u);
  EXPECT_EQ(s, transient_sequence(sc, 8, 2024, 1));
  EXPECT_NE(s, transient_sequence(sc, 8, 2024, 2));
}

TEST(Transient, RunsFollowTheSequence) {
  const auto& f = fixture();
  const ExperimentConfig c = small_cfg();
  const TransientResult r = run_transient_experiment(c, f.in);
  ASSERT_EQ(r.runs.size(), 2u);
  for (const auto& run : r.runs) {
    EXPECT_EQ(run.sequence.size(), 4u);
    for (const auto& m : c.transient_methods) {
      const RunResult& x = run.runs.at(m);
      ASSERT_EQ(x.days(), 8);
      EXPECT_EQ(x.day_label[0], "BasicLB");
      for (int d = 0; d < 8; ++d) EXPECT_EQ(x.day_scenario[d], run.sequence[d / 2]);
    }
    const RunResult& first = run.runs.at("SelectorFirstDayOnly");
    EXPECT_EQ(std::set<int>(first.day_policy.begin() + 1, first.day_policy.end()).size(), 1u);
  }
}

TEST(SwitchReport, CountsOnlyRealSwitchesAndChecksNextDay) {
  std::vector<LogRow> rows;
  // Segments of 2 days: scenarios 4,4 | 4,4 | 7,7 | 9,9 ; best match 7 -> 1, 9 -> 2.
  const int seq[] = {4, 4, 4, 4, 7, 7, 9, 9};
  const char* pick[] = {"BasicLB", "0", "0", "0", "0", "1", "1", "0"};
  for (int d = 0; d < 8; ++d) rows.push_back(row("Selector", 5, seq[d], d + 1, pick[d], 0.1));
  rows.push_back(row("BasicLB", 5, 7, 5, "BasicLB", 0.1));
  const auto sw = switch_report(rows, 2, {{4, 0}, {7, 1}, {9, 2}});
  ASSERT_EQ(sw.size(), 2u);
  EXPECT_EQ(sw[0].switch_day, 5);
  EXPECT_EQ(sw[0].chosen_next_day, 1);
  EXPECT_TRUE(sw[0].recovered);
  EXPECT_EQ(sw[1].switch_day, 7);
  EXPECT_EQ(sw[1].to_scenario, 9);
  EXPECT_FALSE(sw[1].recovered);
}

TEST(Aggregation, SummaryUsesScoredDaysOnly) {
  std::vector<LogRow> rows;
  for (int d = 1; d <= 3; ++d)
    for (int h = 0; h < 24; ++h) {
      LogRow r = row("X", 1, 0, d, "0", d == 1 ? 100.0 : 0.5 * d);
      r.set = "test";
      r.hour = h;
      rows.push_back(r);
    }
  const auto s = summarize(rows, {"X"});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].reward, 1.25);
  EXPECT_EQ(s[0].runs, 1);
  EXPECT_NEAR(total_reward(rows, "X"), 100.0 + 1.0 + 1.5, 1e-9);
}

TEST(Report, LogRoundTripAndByteIdenticalRerender) {
  const auto& f = fixture();
  const ExperimentConfig c = small_cfg();
  const fs::path dir = fs::temp_directory_path() / "lbreuse_report_test";
  fs::remove_all(dir);
  PipelinePaths paths(dir.string());
  paths.create();
  const FixedResult fr = run_fixed_experiment(c, f.in);
  const TransientResult tr = run_transient_experiment(c, f.in);
  write_fixed_logs(paths, fr, f.in, c);
  write_transient_logs(paths, tr, f.in, c);

  const auto back = read_log_csv(paths.fixed_log());
  const auto orig = fr.log();
  ASSERT_EQ(back.size(), orig.size());
  for (std::size_t k = 0; k < back.size(); k += 97) {
    EXPECT_EQ(back[k].method, orig[k].method);
    EXPECT_EQ(back[k].policy_id, orig[k].policy_id);
    EXPECT_NEAR(back[k].reward, orig[k].reward, 1e-8 * std::abs(orig[k].reward) + 1e-12);
    EXPECT_NEAR(back[k].metrics.g_sd, orig[k].metrics.g_sd, 1e-8 * std::abs(orig[k].metrics.g_sd) + 1e-12);
  }
  // Re-aggregating the parsed log matches aggregating the in-memory log.
  const auto s1 = summarize(back, c.methods), s2 = summarize(orig, c.methods);
  ASSERT_EQ(s1.size(), s2.size());
  for (std::size_t k = 0; k < s1.size(); ++k) EXPECT_NEAR(s1[k].reward, s2[k].reward, 1e-8);

  const ReportFiles r1 = render_report(dir.string());
  std::map<std::string, std::string> first;
  for (const auto& p : r1.written) first[p] = slurp(p);
  EXPECT_TRUE(first.count((dir / "tables" / "summary.md").string()));
  EXPECT_TRUE(first.count((dir / "tables" / "transient_switches.csv").string()));
  const ReportFiles r2 = render_report(dir.string());
  EXPECT_EQ(r1.written, r2.written);
  for (const auto& p : r2.written) EXPECT_EQ(slurp(p), first[p]) << p;
  fs::remove_all(dir);
}

TEST(Report, MissingLogsAndBadHeader) {
  const fs::path dir = fs::temp_directory_path() / "lbreuse_report_empty";
  fs::remove_all(dir);
  fs::create_directories(dir / "logs");
  EXPECT_THROW(render_report(dir.string()), ArtifactError);
  io::atomic_write((dir / "logs" / "fixed_hourly.csv").string(), [](std::ostream& os) { os << "a,b\n"; });
  EXPECT_THROW(render_report(dir.string()), ArtifactError);
  fs::remove_all(dir);
}
