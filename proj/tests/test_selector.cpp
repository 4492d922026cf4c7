#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "lbreuse/selector.hpp"

using namespace lbreuse;

namespace {

TrainContext fast_ctx() {
  TrainContext ctx;
  ctx.sim.inner_steps_per_hour = 10;
  return ctx;
}

PolicyBank untrained_bank(int m) {
  PolicyBank bank;
  for (int i = 0; i < m; ++i) {
    BankEntry e;
    e.policy_id = i;
    e.net.init(100 + i, -0.5, 1.0);
    bank.entries.push_back(std::move(e));
  }
  return bank;
}

// Four Gaussian classes in 288 dimensions, means differing in a few coordinates.
std::vector<SelectorSample> synthetic(int per_class, std::uint64_t seed, bool shuffle_labels) {
  Rng rng(seed);
  std::vector<SelectorSample> out;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < per_class; ++i) {
      SelectorSample s;
      s.features.resize(288);
      for (int k = 0; k < 288; ++k) s.features[k] = rng.normal(0, 0.3) + (k % 4 == c ? 0.8 : 0.0);
      s.label = c;
      out.push_back(std::move(s));
    }
  if (shuffle_labels) {
    std::vector<int> labels;
    for (const auto& s : out) labels.push_back(s.label);
    rng.shuffle(labels);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].label = labels[i];
  }
  return out;
}

SelectorConfig quick_cfg() {
  SelectorConfig c;
  c.hidden = {32, 16};
  c.batch_size = 64;
  c.max_epochs = 40;
  return c;
}

}  // namespace

TEST(DatasetCounts, Formula) {
  EXPECT_EQ(expected_raw_frames(9, 9), 15120);
  EXPECT_EQ(expected_windows(9, 9, 24), 13050);
  EXPECT_EQ(expected_raw_frames(1, 1), 336);
  EXPECT_EQ(expected_windows(1, 1, 24), 290);
}

TEST(DatasetCounts, CollectedMatchesFormula) {
  const auto sc = generate_scenario_set(default_archetypes(), 1, 2);
  const PolicyBank bank1 = untrained_bank(1);
  const auto one = collect_dataset(bank1, {&sc[0]}, 1, fast_ctx());
  EXPECT_EQ(one.raw_frames(), 336);
  EXPECT_EQ(one.window_count(), 290);
  EXPECT_EQ(make_windows(one).size(), 290u);

  const PolicyBank bank = untrained_bank(2);
  const auto ds = collect_dataset(bank, {&sc[0], &sc[1], &sc[2]}, 1, fast_ctx());
  EXPECT_EQ(ds.raw_frames(), expected_raw_frames(2, 3));
  EXPECT_EQ(ds.window_count(), expected_windows(2, 3, 24));
  const auto w = make_windows(ds);
  ASSERT_EQ(static_cast<long>(w.size()), ds.window_count());
  std::set<int> policies;
  for (const auto& s : w) {
    EXPECT_EQ(s.features.size(), 288u);
    EXPECT_EQ(sc[s.label].id, s.scenario_id);  // BasicLB windows carry the scenario's own label
    policies.insert(s.policy_id);
  }
  EXPECT_EQ(policies, (std::set<int>{kBasicLbPolicyId, 0, 1}));
}

TEST(DatasetCounts, WindowsNeverSpanRuns) {
  SelectorDataset ds;
  ds.num_labels = 2;
  for (int r = 0; r < 2; ++r) {
    DatasetRun run;
    run.label = r;
    for (int k = 0; k < 30; ++k) {
      Frame f{};
      f.fill(r * 100.0 + k);
      run.frames.push_back(f);
    }
    ds.runs.push_back(run);
  }
  const auto w = make_windows(ds);
  ASSERT_EQ(w.size(), 14u);
  for (const auto& s : w) {
    EXPECT_EQ(s.features.front(), s.label * 100.0 + s.start_hour);
    EXPECT_EQ(s.features.back(), s.label * 100.0 + s.start_hour + 23);
  }
}

TEST(DatasetIo, RoundTripAndCorruption) {
  const auto dir = std::filesystem::temp_directory_path() / "lbreuse_ds_test";
  std::filesystem::create_directories(dir);
  const auto sc = generate_scenario_set(default_archetypes(), 2, 2);
  const PolicyBank bank = untrained_bank(1);
  const auto ds = collect_dataset(bank, {&sc[3], &sc[5]}, 4, fast_ctx());
  const auto bin = (dir / "d.bin").string(), man = (dir / "d.json").string();
  save_dataset(ds, bin, man);
  EXPECT_TRUE(load_dataset(bin, man) == ds);
  std::string bytes = io::read_file(bin);
  bytes[0] = 'Q';
  io::atomic_write(bin, [&](std::ostream& os) { os << bytes; });
  EXPECT_THROW(load_dataset(bin, man), ArtifactError);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_dataset(bin, man), ArtifactError);
}

TEST(SelectorNet, SoftmaxIsProbabilityVector) {
  SelectorNet net(SelectorNetShape{288, {16, 8}, 5});
  net.init(3);
  const Mat x = Mat::Random(50, 288) * 5.0;
  const Mat p = net.predict_proba(x);
  for (int r = 0; r < p.rows(); ++r) {
    EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-9);
    EXPECT_GE(p.row(r).minCoeff(), 0.0);
  }
}

TEST(SelectorNet, ZeroNetTieBreaksToIdZero) {
  SelectorNet net;
  std::vector<Frame> day(24);
  for (auto& f : day) f.fill(0.37);
  EXPECT_EQ(select_policy(net, day), 0);
}

TEST(SelectorNet, InferenceIndependentOfBatch) {
  SelectorNet net(SelectorNetShape{288, {16, 8}, 4});
  net.init(5);
  const Mat x = Mat::Random(12, 288);
  const Mat all = net.predict_proba(x);
  for (int r = 0; r < 12; ++r) {
    const Mat one = net.predict_proba(x.row(r));
    for (int c = 0; c < 4; ++c) EXPECT_EQ(one(0, c), all(r, c));
  }
}

TEST(SelectorNet, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SelectorNet net(SelectorNetShape{20, {8, 6}, 4});
    net.init(seed);
    Rng rng(seed + 50);
    auto& p = net.params();
    for (double& v : p) v += rng.normal(0, 0.05);  // move BN scale/shift off their initial values
    Mat x(16, 20);
    std::vector<int> labels(16);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 20; ++c) x(r, c) = rng.normal();
      labels[r] = static_cast<int>(rng.below(4));
    }
    std::vector<double> g;
    net.loss(p, x, labels, &g);
    auto loss = [&](const std::vector<double>& q) { return net.loss(q, x, labels, nullptr); };
    EXPECT_LT(finite_difference_check(p, g, loss, 200, seed).max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(SelectorNet, SaveLoadPreservesPredictions) {
  const auto s = synthetic(60, 2, false);
  auto cfg = quick_cfg();
  cfg.max_epochs = 3;
  const auto t = train_selector(s, 4, cfg);
  std::ostringstream os;
  t.net.save(os);
  std::istringstream is(os.str());
  const SelectorNet back = SelectorNet::load(is);
  std::vector<int> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  const Mat x = stack_features(s, idx, 288);
  EXPECT_EQ(back.predict_proba(x), t.net.predict_proba(x));
}

TEST(TrainSelector, SeparableGroupsReachHighAccuracy) {
  const auto r = train_selector(synthetic(300, 1, false), 4, quick_cfg());
  EXPECT_GE(r.report.val_accuracy, 0.9);
  EXPECT_EQ(r.report.val_samples, 360);
  EXPECT_EQ(r.report.train_samples, 840);
}

TEST(TrainSelector, ShuffledLabelsGiveChanceAccuracy) {
  const auto r = train_selector(synthetic(300, 1, true), 4, quick_cfg());
  EXPECT_NEAR(r.report.val_accuracy, 0.25, 0.1);
}

TEST(TrainSelector, DeterministicAndRejectsDegenerateData) {
  const auto s = synthetic(40, 3, false);
  auto cfg = quick_cfg();
  cfg.max_epochs = 5;
  const auto a = train_selector(s, 4, cfg), b = train_selector(s, 4, cfg);
  EXPECT_EQ(a.report.val_curve, b.report.val_curve);
  EXPECT_EQ(a.net.params(), b.net.params());

  auto single = s;
  for (auto& x : single) x.label = 2;
  EXPECT_THROW(train_selector(single, 4, cfg), InvalidArgument);
  auto bad = s;
  bad[7].features[3] = std::nan("");
  EXPECT_THROW(train_selector(bad, 4, cfg), NumericalError);
  auto range = s;
  range[0].label = 4;
  EXPECT_THROW(train_selector(range, 4, cfg), InvalidArgument);
}

TEST(Select, RejectsWrongLengthAndNonFinite) {
  SelectorNet net;
  EXPECT_THROW(select_policy(net, std::vector<Frame>(23)), InvalidArgument);
  std::vector<Frame> day(24);
  day[5][2] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(select_policy(net, day), InvalidArgument);
}

TEST(SelectionLoop, DailyAndFirstDayOnly) {
  const auto sc = generate_scenario_set(default_archetypes(), 1, 6);
  const PolicyBank bank = untrained_bank(3);
  SelectorNet net(SelectorNetShape{288, {16}, 3});
  net.init(9);
  const auto daily = run_selection_loop(net, bank, sc[1], 7, SelectionMode::Daily, 3, fast_ctx());
  ASSERT_EQ(daily.days(), 7);
  EXPECT_EQ(daily.day_policy[0], kBasicLbPolicyId);
  for (int d = 1; d < 7; ++d) EXPECT_EQ(daily.day_policy[d], select_policy(net, daily.day_frames[d - 1]));

  const auto first = run_selection_loop(net, bank, sc[1], 7, SelectionMode::FirstDayOnly, 3, fast_ctx());
  std::set<int> ids(first.day_policy.begin() + 1, first.day_policy.end());
  EXPECT_EQ(ids.size(), 1u);
  EXPECT_EQ(*ids.begin(), daily.day_policy[1]);
  EXPECT_THROW(run_selection_loop(net, bank, sc[1], 1, SelectionMode::Daily, 3, fast_ctx()), InvalidArgument);
}
