#include <gtest/gtest.h>

#include "lbreuse/errors.hpp"
#include "lbreuse/rng.hpp"
#include "lbreuse/traffic.hpp"

using namespace lbreuse;

TEST(HourProfile, DefaultIsValid) { EXPECT_EQ(HourProfile{}.violation(), ""); }

TEST(HourProfile, RangeChecks) {
  HourProfile p;
  p.ue_count = -1;
  EXPECT_NE(p.violation(), "");
  p = {};
  p.mean_interarrival_ms = 9.9;
  EXPECT_NE(p.violation(), "");
  p.mean_interarrival_ms = 320.1;
  EXPECT_NE(p.violation(), "");
  p = {};
  p.packet_size_min_kb = 40.0;
  EXPECT_NE(p.violation(), "");
  p = {};
  p.packet_size_max_kb = 2500.0;
  EXPECT_NE(p.violation(), "");
  p = {};
  p.packet_size_min_kb = 500.0;
  p.packet_size_max_kb = 100.0;
  EXPECT_NE(p.violation(), "");
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(HourProfile, HotspotFractionsMustNotExceedOne) {
  HourProfile p;
  p.hotspots = {{{0, 0}, 10, 0.6}, {{5, 5}, 10, 0.4}};
  EXPECT_EQ(p.violation(), "");
  p.hotspots[1].ue_fraction = 0.41;
  EXPECT_NE(p.violation(), "");
  p.hotspots[1] = {{5, 5}, 0.0, 0.1};
  EXPECT_NE(p.violation(), "");
}

TEST(Rng, MixSeedSeparatesStreams) {
  EXPECT_EQ(mix_seed(1, 2), mix_seed(1, 2));
  EXPECT_NE(mix_seed(1, 2), mix_seed(1, 3));
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 2));
}

TEST(Rng, VariatesHaveExpectedMoments) {
  Rng r(1);
  double su = 0, se = 0, sn = 0, sn2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    se += r.exponential(4.0);
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(se / n, 0.25, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.01);
}

TEST(Rng, BelowAndShuffle) {
  Rng r(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  Rng a(3), b(3);
  auto x = v, y = v;
  a.shuffle(x);
  b.shuffle(y);
  EXPECT_EQ(x, y);
  std::sort(x.begin(), x.end());
  EXPECT_EQ(x, v);
}
