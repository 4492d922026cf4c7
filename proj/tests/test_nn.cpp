#include <gtest/gtest.h>

#include <sstream>

#include "lbreuse/nn.hpp"
#include "lbreuse/serialize.hpp"

using namespace lbreuse;

TEST(ParamLayout, OffsetsAreContiguous) {
  ParamLayout l;
  const auto a = l.add("w", 3, 4);
  const auto b = l.add("b", 3);
  EXPECT_EQ(l[a].offset, 0u);
  EXPECT_EQ(l[b].offset, 12u);
  EXPECT_EQ(l.total(), 15u);
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
  ParamLayout l;
  const auto w = l.add("w", 5, 7);
  const auto b = l.add("b", 5);
  std::vector<double> p(l.total());
  Rng rng(3);
  init_dense(p, l[w], l[b], 1.0, rng);
  for (std::size_t k = 0; k < l[b].size(); ++k) p[l[b].offset + k] = rng.normal(0, 0.3);
  Mat x = Mat::Random(6, 7);
  Mat target = Mat::Random(6, 5);
  auto loss = [&](const std::vector<double>& q) {
    return 0.5 * (dense_forward(x, q, l[w], l[b]).array().tanh().matrix() - target).squaredNorm();
  };
  std::vector<double> g(p.size(), 0.0);
  const Mat y = dense_forward(x, p, l[w], l[b]).array().tanh();
  const Mat dy = (y - target).array() * (1.0 - y.array().square());
  dense_backward(x, dy, p, g, l[w], l[b]);
  EXPECT_LT(finite_difference_check(p, g, loss, 40, 1).max_relative_error, 1e-6);
}

TEST(ClipGlobalNorm, ScalesOnlyWhenAbove) {
  std::vector<double> g{3, 4};
  clip_global_norm(g, 10.0);
  EXPECT_EQ(g, (std::vector<double>{3, 4}));
  clip_global_norm(g, 1.0);
  EXPECT_NEAR(global_norm(g), 1.0, 1e-12);
  EXPECT_NEAR(g[0] / g[1], 0.75, 1e-12);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{1.0, -2.0};
  Adam adam(2, AdamConfig{0.1});
  adam.step(p, {5.0, -0.001});
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -1.9, 1e-4);
  EXPECT_THROW(adam.step(p, {1.0}), InvalidArgument);
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<double> p{4.0, -3.0, 0.5};
  Adam adam(3, AdamConfig{0.05});
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> g(3);
    for (int k = 0; k < 3; ++k) g[k] = 2.0 * (p[k] - k);
    adam.step(p, g);
  }
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p[k], k, 1e-3);
}

TEST(Envelope, RoundTripAndCorruption) {
  NetEnvelope e;
  e.magic = "TEST";
  e.version = kEnvelopeVersion;
  e.layout.add("w", 2, 3);
  e.values = {1, 2, 3, 4, 5, 6.5};
  e.meta = {{"k", 1}};
  std::ostringstream os;
  write_envelope(os, e);
  const std::string bytes = os.str();
  std::istringstream is(bytes);
  const NetEnvelope back = read_envelope(is, "TEST");
  EXPECT_EQ(back.values, e.values);
  EXPECT_EQ(back.meta, e.meta);
  EXPECT_EQ(back.layout.total(), 6u);

  std::istringstream wrong(bytes);
  EXPECT_THROW(read_envelope(wrong, "LBPN"), ArtifactError);
  std::istringstream cut(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_envelope(cut, "TEST"), ArtifactError);
  std::string bumped = bytes;
  bumped[4] = static_cast<char>(kEnvelopeVersion + 1);
  std::istringstream ver(bumped);
  EXPECT_THROW(read_envelope(ver, "TEST"), ArtifactError);
}

TEST(ConfigHash, StableAndSensitive) {
  EXPECT_EQ(config_hash({{"a", 1}, {"b", 2}}), config_hash({{"b", 2}, {"a", 1}}));
  EXPECT_NE(config_hash({{"a", 1}}), config_hash({{"a", 2}}));
}
