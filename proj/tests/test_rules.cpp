#include <gtest/gtest.h>

#include "lbreuse/rules.hpp"
#include "lbreuse/sim.hpp"
#include "oracles.hpp"

using namespace lbreuse;

TEST(HandoverRule, Examples) {
  EXPECT_TRUE(handover_triggered(-95, -90, 0, 3));
  EXPECT_FALSE(handover_triggered(-95, -92, 0, 3));  // exact boundary
  for (double d = -10; d <= 10; d += 0.5) EXPECT_FALSE(handover_triggered(-90, -90 + d, 20, 3));
}

TEST(ReselectionRule, Examples) {
  EXPECT_TRUE(reselection_triggered(-100, -88, -98, -90));
  for (double fj = -120; fj <= -40; fj += 5) EXPECT_FALSE(reselection_triggered(-100, fj, -150, -90));
  EXPECT_FALSE(reselection_triggered(-98, -80, -98, -90));  // f_i == beta
  EXPECT_FALSE(reselection_triggered(-100, -90, -98, -90));  // f_j == gamma
}

TEST(RuleOracle, ExhaustiveGridMatchesBruteForce) {
  const auto g = oracle::rule_grid(
      [](double fi, double fj, double a, double h) { return handover_triggered(fi, fj, a, h); },
      [](double fi, double fj, double b, double c) { return reselection_triggered(fi, fj, b, c); });
  EXPECT_EQ(g.checked, 9L * 9 * (13 * 13 + 9 * 9));
  EXPECT_EQ(g.mismatches, 0);
}

TEST(BasicLb, FixedWithinBoundsAndUniform) {
  const LbParams a = basic_lb(), b = basic_lb();
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.within(LbBounds{}));
  for (auto [i, j] : ordered_pairs()) {
    EXPECT_EQ(a.cio_db[i][j], a.cio_db[0][1]);
    EXPECT_EQ(a.beta_dbm[i][j], a.beta_dbm[0][1]);
    EXPECT_EQ(a.gamma_dbm[i][j], a.gamma_dbm[0][1]);
  }
}

namespace {
CellObservations utils(std::array<double, 4> u) {
  CellObservations o{};
  for (int c = 0; c < 4; ++c) o[c].prb_utilization = u[c];
  return o;
}
}  // namespace

TEST(AdaptLb, EqualUtilizationLeavesParamsUnchanged) {
  const LbParams p = basic_lb();
  for (double u : {0.0, 0.3, 0.6, 0.95}) EXPECT_EQ(adapt_lb(utils({u, u, u, u}), p, {}, {}), p);
}

TEST(AdaptLb, OverloadedCellOffloadsToIdleNeighbours) {
  const AdaptLbConfig cfg;
  const LbParams p = basic_lb();
  const LbParams n = adapt_lb(utils({0.9, 0.1, 0.1, 0.1}), p, cfg, {});
  for (int j = 1; j < 4; ++j) {
    EXPECT_DOUBLE_EQ(n.cio_db[0][j], p.cio_db[0][j] - cfg.cio_step_db);
    EXPECT_DOUBLE_EQ(n.cio_db[j][0], p.cio_db[j][0] + cfg.cio_step_db);
  }
  EXPECT_EQ(n.cio_db[1][2], p.cio_db[1][2]);
}

TEST(AdaptLb, RepeatedSaturationPinsAtBound) {
  const LbBounds b;
  LbParams p = basic_lb();
  for (int k = 0; k < 50; ++k) {
    p = adapt_lb(utils({1.0, 0.0, 0.0, 0.0}), p, {}, b);
    ASSERT_TRUE(p.within(b));
  }
  for (int j = 1; j < 4; ++j) EXPECT_EQ(p.cio_db[0][j], b.cio_min_db);
}

TEST(AdaptLb, PureFunctionReplay) {
  Rng rng(3);
  LbParams p = basic_lb(), q = basic_lb();
  for (int k = 0; k < 200; ++k) {
    const auto o = utils({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    p = adapt_lb(o, p, {}, {});
    q = adapt_lb(o, q, {}, {});
    ASSERT_EQ(p, q);
    ASSERT_TRUE(p.within(LbBounds{}));
  }
}
