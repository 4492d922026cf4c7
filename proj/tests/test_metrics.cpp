#include <gtest/gtest.h>

#include <algorithm>

#include "lbreuse/metrics.hpp"
#include "lbreuse/rng.hpp"
#include "oracles.hpp"

using namespace lbreuse;

namespace {
MetricsRecord from_mbps(std::array<double, 4> t, double eps = 1.0) {
  std::array<double, 4> bits{};
  for (int c = 0; c < 4; ++c) bits[c] = t[c] * 1e6 * 10.0;
  return compute_metrics(bits, 10.0, eps);
}
}  // namespace

TEST(Metrics, UniformCase) {
  const auto m = from_mbps({2, 2, 2, 2});
  EXPECT_DOUBLE_EQ(m.g_avg, 2.0);
  EXPECT_DOUBLE_EQ(m.g_min, 2.0);
  EXPECT_DOUBLE_EQ(m.g_sd, 0.0);
  EXPECT_DOUBLE_EQ(m.g_cong, 1.0);
}

TEST(Metrics, HandCase) {
  const auto m = from_mbps({4.0, 2.0, 0.5, 1.5});
  EXPECT_NEAR(m.g_avg, 2.0, 1e-12);
  EXPECT_NEAR(m.g_min, 0.5, 1e-12);
  EXPECT_NEAR(m.g_sd, std::sqrt(1.625), 1e-12);
  EXPECT_NEAR(m.g_sd, 1.2748, 5e-5);
  EXPECT_DOUBLE_EQ(m.g_cong, 0.75);
}

TEST(Metrics, MatchesDirectSummationOracle) {
  Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    std::array<double, 4> t{};
    for (auto& x : t) x = rng.uniform(0.0, 20.0);
    const auto m = from_mbps(t);
    const auto o = oracle::kpis({t.begin(), t.end()}, 1.0);
    ASSERT_LE(oracle::rel_err(m.g_avg, o.avg), 1e-12);
    ASSERT_LE(oracle::rel_err(m.g_min, o.min), 1e-12);
    ASSERT_LE(oracle::rel_err(m.g_sd, o.sd), 1e-12);
    ASSERT_EQ(m.g_cong, o.cong);
    ASSERT_LE(m.g_min, m.g_avg);
    ASSERT_LE(m.g_avg, *std::max_element(t.begin(), t.end()));
    ASSERT_GE(m.g_sd, 0.0);
  }
}

TEST(Metrics, PermutationInvariance) {
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    std::array<double, 4> t{};
    for (auto& x : t) x = rng.uniform(0.0, 5.0);
    const auto base = from_mbps(t);
    std::sort(t.begin(), t.end());
    do {
      const auto m = from_mbps(t);
      ASSERT_NEAR(m.g_avg, base.g_avg, 1e-12);
      ASSERT_EQ(m.g_min, base.g_min);
      ASSERT_NEAR(m.g_sd, base.g_sd, 1e-12);
      ASSERT_EQ(m.g_cong, base.g_cong);
    } while (std::next_permutation(t.begin(), t.end()));
  }
}

TEST(Metrics, ScalingInvariance) {
  Rng rng(6);
  for (int k = 0; k < 200; ++k) {
    std::array<double, 4> t{}, s{};
    const double c = rng.uniform(0.1, 10.0);
    for (int i = 0; i < 4; ++i) {
      t[i] = rng.uniform(0.0, 5.0);
      s[i] = c * t[i];
    }
    const auto a = from_mbps(t), b = from_mbps(s);
    ASSERT_NEAR(b.g_avg, c * a.g_avg, 1e-12 * (1 + b.g_avg));
    ASSERT_NEAR(b.g_min, c * a.g_min, 1e-12 * (1 + b.g_min));
    ASSERT_NEAR(b.g_sd, c * a.g_sd, 1e-11 * (1 + b.g_sd));
    double cong = 0;
    for (double x : s) cong += x > 1.0;
    ASSERT_EQ(b.g_cong, cong / 4);
  }
}

TEST(Metrics, CongestionTakesQuarterSteps) {
  Rng rng(8);
  for (int k = 0; k < 500; ++k) {
    std::array<double, 4> t{};
    for (auto& x : t) x = rng.uniform(0.0, 2.0);
    const double g = from_mbps(t).g_cong;
    ASSERT_EQ(g * 4, std::round(g * 4));
  }
}

TEST(Metrics, RejectsNonPositiveInterval) {
  EXPECT_THROW(compute_metrics(std::array<double, kNumCells>{1, 1, 1, 1}, 0.0), InvalidArgument);
}

TEST(Reward, Examples) {
  const RewardConfig cfg;
  MetricsRecord m;
  EXPECT_DOUBLE_EQ(compute_reward(m, cfg), 0.25);  // zero throughput: only the sd term
  m.g_avg = m.g_min = cfg.t_ref_mbps;
  m.g_sd = 0.0;
  m.g_cong = 1.0;
  EXPECT_DOUBLE_EQ(compute_reward(m, cfg), 1.0);
}

TEST(Reward, SdTermCapsAtOne) {
  RewardConfig cfg;
  cfg.w_avg = cfg.w_min = cfg.w_cong = 0.0;
  cfg.w_sd = 1.0;
  MetricsRecord m;
  m.g_sd = 0.0;
  EXPECT_DOUBLE_EQ(compute_reward(m, cfg), 1.0);
  m.g_sd = 1.0;
  EXPECT_DOUBLE_EQ(compute_reward(m, cfg), 1.0 / cfg.sd_reciprocal_cap);
}

TEST(Reward, Monotonicity) {
  const RewardConfig cfg;
  Rng rng(9);
  for (int k = 0; k < 500; ++k) {
    MetricsRecord m;
    m.g_avg = rng.uniform(0, 15);
    m.g_min = rng.uniform(0, m.g_avg);
    m.g_sd = rng.uniform(0, 5);
    m.g_cong = 0.25 * static_cast<int>(rng.below(5));
    const double r = compute_reward(m, cfg);
    const double d = rng.uniform(0.0, 1.0);
    MetricsRecord x = m;
    x.g_avg += d;
    ASSERT_GE(compute_reward(x, cfg), r);
    x = m;
    x.g_min += d;
    ASSERT_GE(compute_reward(x, cfg), r);
    x = m;
    x.g_cong = std::min(1.0, x.g_cong + 0.25);
    ASSERT_GE(compute_reward(x, cfg), r);
    x = m;
    x.g_sd += d;
    ASSERT_LE(compute_reward(x, cfg), r);
  }
}

TEST(Reward, ConfigValidation) {
  RewardConfig c;
  c.w_avg = c.w_min = c.w_sd = c.w_cong = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.t_ref_mbps = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(MetricsCsv, RowFormat) {
  const auto m = from_mbps({4.0, 2.0, 0.5, 1.5});
  EXPECT_EQ(std::string(metrics_csv_header()), "scenario_id,day,hour,policy_id,g_avg,g_min,g_sd,g_cong,reward");
  EXPECT_EQ(metrics_csv_row(3, 2, 5, "7", m, 0.5), "3,2,5,7,2,0.5,1.27475488,0.75,0.5");
}
