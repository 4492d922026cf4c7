#include <gtest/gtest.h>

#include <sstream>

#include "lbreuse/env.hpp"

using namespace lbreuse;

namespace {

SimConfig fast() {
  SimConfig c;
  c.inner_steps_per_hour = 10;
  return c;
}

ScenarioSpec scenario() { return generate_scenario_set(default_archetypes(), 1, 5)[0]; }

ScenarioSpec zero_traffic() {
  ScenarioSpec s;
  s.id = 99;
  s.hours.assign(kHoursPerWeek, HourProfile{});
  return s;
}

}  // namespace

TEST(Env, ResetGivesFourFrameHistory) {
  const auto sc = scenario();
  LbEnv env(SectorTopology::standard(), fast());
  const EnvState s = env.reset(sc, 10, 1);
  EXPECT_EQ(s.history.size(), 48u);
  EXPECT_EQ(s.hour_of_week, 10);
  for (double v : s.history) EXPECT_TRUE(std::isfinite(v));
}

TEST(Env, ResetDeterministic) {
  const auto sc = scenario();
  LbEnv a(SectorTopology::standard(), fast()), b(SectorTopology::standard(), fast());
  EXPECT_EQ(a.reset(sc, 0, 3), b.reset(sc, 0, 3));
  EXPECT_NE(a.reset(sc, 0, 3), b.reset(sc, 0, 4));
}

TEST(Env, ResetRejectsBadStartHour) {
  const auto sc = scenario();
  LbEnv env(SectorTopology::standard(), fast());
  EXPECT_THROW(env.reset(sc, -1, 1), InvalidArgument);
  EXPECT_THROW(env.reset(sc, 168, 1), InvalidArgument);
  ScenarioSpec short_sc = sc;
  short_sc.hours.resize(10);
  EXPECT_THROW(env.reset(short_sc, 0, 1), InvalidArgument);
  EXPECT_THROW(env.step(ActionVector(36, 0.0)), InvalidArgument);  // before reset
}

TEST(Env, ZeroTrafficGivesZeroFeaturesAndFloorReward) {
  const auto sc = zero_traffic();
  LbEnv env(SectorTopology::standard(), fast());
  const EnvState s = env.reset(sc, 0, 1);
  for (double v : s.history) EXPECT_EQ(v, 0.0);
  const Transition t = env.step(ActionVector(36, 0.0));
  for (double v : t.s_next.history) EXPECT_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(t.r, 0.25);
}

TEST(Action, ZeroActionDecodesToMidpoints) {
  const LbBounds b;
  const LbParams p = decode_action(ActionVector(36, 0.0), b);
  for (auto [i, j] : ordered_pairs()) {
    EXPECT_DOUBLE_EQ(p.cio_db[i][j], 0.5 * (b.cio_min_db + b.cio_max_db));
    EXPECT_DOUBLE_EQ(p.beta_dbm[i][j], 0.5 * (b.threshold_min_dbm + b.threshold_max_dbm));
    EXPECT_DOUBLE_EQ(p.gamma_dbm[i][j], 0.5 * (b.threshold_min_dbm + b.threshold_max_dbm));
  }
}

TEST(Action, LayoutIsBlockedByParameterThenPair) {
  const LbBounds b;
  ActionVector a(36, -1.0);
  a[0] = 1.0;        // a(0,1)
  a[12 + 11] = 1.0;  // beta(3,2)
  a[24 + 5] = 1.0;   // gamma(1,3)
  const LbParams p = decode_action(a, b);
  EXPECT_EQ(p.cio_db[0][1], b.cio_max_db);
  EXPECT_EQ(p.cio_db[0][2], b.cio_min_db);
  EXPECT_EQ(p.beta_dbm[3][2], b.threshold_max_dbm);
  EXPECT_EQ(p.gamma_dbm[1][3], b.threshold_max_dbm);
  EXPECT_EQ(p.gamma_dbm[1][2], b.threshold_min_dbm);
}

TEST(Action, RoundTripOnInBoundParams) {
  const LbBounds b;
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    LbParams p = LbParams::uniform(0, 0, 0);
    for (auto [i, j] : ordered_pairs()) {
      p.cio_db[i][j] = rng.uniform(b.cio_min_db, b.cio_max_db);
      p.beta_dbm[i][j] = rng.uniform(b.threshold_min_dbm, b.threshold_max_dbm);
      p.gamma_dbm[i][j] = rng.uniform(b.threshold_min_dbm, b.threshold_max_dbm);
    }
    const LbParams q = decode_action(encode_action(p, b), b);
    for (auto [i, j] : ordered_pairs()) {
      ASSERT_NEAR(q.cio_db[i][j], p.cio_db[i][j], 1e-9);
      ASSERT_NEAR(q.beta_dbm[i][j], p.beta_dbm[i][j], 1e-9);
      ASSERT_NEAR(q.gamma_dbm[i][j], p.gamma_dbm[i][j], 1e-9);
    }
  }
}

TEST(Action, RejectsMalformed) {
  const LbBounds b;
  EXPECT_THROW(decode_action(ActionVector(35, 0.0), b), InvalidArgument);
  ActionVector a(36, 0.0);
  a[7] = std::nan("");
  EXPECT_THROW(decode_action(a, b), InvalidArgument);
  a[7] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(decode_action(a, b), InvalidArgument);
  a[7] = 5.0;  // finite out-of-range entries are clamped
  EXPECT_EQ(decode_action(a, b).cio_db[2][1], b.cio_max_db);
}

TEST(Env, HorizonSetsDone) {
  const auto sc = scenario();
  LbEnv env(SectorTopology::standard(), fast());
  env.reset(sc, 0, 1);
  for (int k = 1; k <= 24; ++k) {
    const Transition t = env.step(ActionVector(36, 0.0));
    EXPECT_EQ(t.done, k == 24);
  }
  env.begin_episode();
  EXPECT_FALSE(env.step(ActionVector(36, 0.0)).done);
}

TEST(Env, RewardMatchesMetricsOfNewestInterval) {
  const auto sc = scenario();
  LbEnv env(SectorTopology::standard(), fast());
  env.reset(sc, 0, 1);
  for (int k = 0; k < 5; ++k) {
    const Transition t = env.step(ActionVector(36, 0.1 * k));
    const MetricsRecord m = compute_metrics(env.last_interval());
    EXPECT_EQ(t.r, compute_reward(m, RewardConfig{}));
    for (int c = 0; c < kNumCells; ++c)
      EXPECT_DOUBLE_EQ(t.s_next.history[36 + 3 * c + 2] * 10.0, m.per_cell_throughput_mbps[c]);
  }
  MetricsRecord hand = compute_metrics(std::array<double, kNumCells>{4e6, 2e6, 0.5e6, 1.5e6}, 1.0);
  EXPECT_NEAR(compute_reward(hand, {}), 0.25 * (0.2 + 0.05 + (1.0 / std::sqrt(1.625)) / 10.0 + 0.75), 1e-12);
}

// After n steps the window holds the observations of steps n-3..n, oldest first.
TEST(FrameHistory, SlidingWindowSemantics) {
  FrameHistory h(4);
  for (int n = 1; n <= 10; ++n) {
    Frame f{};
    f.fill(static_cast<double>(n));
    h.push(f);
    const auto flat = h.flatten();
    const int have = std::min(n, 4);
    ASSERT_EQ(static_cast<int>(flat.size()), have * kFrameSize);
    for (int k = 0; k < have; ++k) EXPECT_EQ(flat[k * kFrameSize], n - have + 1 + k);
    EXPECT_EQ(h.full(), n >= 4);
  }
}

TEST(Env, StateWindowTracksObservations) {
  const auto sc = scenario();
  LbEnv env(SectorTopology::standard(), fast());
  env.reset(sc, 0, 2);
  std::vector<Frame> seen;
  for (int k = 0; k < 6; ++k) {
    env.step(ActionVector(36, 0.0));
    seen.push_back(normalize_frame(env.last_interval().observations, env.config()));
  }
  const auto h = env.state().history;
  for (int k = 0; k < 4; ++k)
    for (int c = 0; c < kFrameSize; ++c) EXPECT_EQ(h[k * kFrameSize + c], seen[2 + k][c]);
}

TEST(Env, SameSeedSameActionsSameTransitions) {
  const auto sc = scenario();
  auto run = [&] {
    LbEnv env(SectorTopology::standard(), fast());
    env.reset(sc, 5, 9);
    Rng rng(1);
    std::ostringstream os;
    std::vector<Transition> ts;
    for (int k = 0; k < 8; ++k) {
      ActionVector a(36);
      for (auto& v : a) v = rng.uniform(-1, 1);
      ts.push_back(env.step(a));
    }
    write_ndjson(os, ts);
    return os.str();
  };
  EXPECT_EQ(run(), run());
}

TEST(EnvConfig, Validation) {
  EnvConfig c;
  c.history_k = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.ue_norm = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}
