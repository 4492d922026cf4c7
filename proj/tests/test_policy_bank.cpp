#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "lbreuse/policy_bank.hpp"

using namespace lbreuse;

namespace {

PolicyBank random_bank(int m, std::uint64_t seed) {
  Rng rng(seed);
  PolicyBank bank;
  for (int i = 0; i < m; ++i) {
    PolicyNetShape s{48, 4 + static_cast<int>(rng.below(8)), 4 + static_cast<int>(rng.below(8)), kActionSize};
    BankEntry e;
    e.policy_id = i;
    e.net = PolicyNet(s);
    e.net.init(rng());
    e.scenario_id = static_cast<int>(rng.below(21));
    e.group = static_cast<int>(rng.below(3)) + 1;
    e.config_hash = "h" + std::to_string(i);
    e.seed = rng();
    for (int k = 0; k < 5; ++k) e.curve.push_back(rng.uniform());
    bank.entries.push_back(std::move(e));
  }
  return bank;
}

std::string bytes_of(const PolicyBank& b) {
  std::ostringstream os;
  b.save(os);
  return os.str();
}

PolicyBank from_bytes(const std::string& s) {
  std::istringstream is(s);
  return PolicyBank::load(is);
}

}  // namespace

TEST(PolicyBank, RoundTripRandomBanks) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PolicyBank b = random_bank(1 + static_cast<int>(seed % 5), seed);
    EXPECT_TRUE(from_bytes(bytes_of(b)) == b);
  }
}

TEST(PolicyBank, FileRoundTripIsAtomic) {
  const auto dir = std::filesystem::temp_directory_path() / "lbreuse_bank_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "bank.lbpb").string();
  const PolicyBank b = random_bank(3, 4);
  b.save(path);
  EXPECT_TRUE(PolicyBank::load(path) == b);
  for (const auto& f : std::filesystem::directory_iterator(dir)) EXPECT_EQ(f.path().filename(), "bank.lbpb");
  std::filesystem::remove_all(dir);
  EXPECT_THROW(PolicyBank::load(path), ArtifactError);
}

TEST(PolicyBank, TruncatedFileRejected) {
  const std::string s = bytes_of(random_bank(2, 5));
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, s.size() / 2, s.size() - 1})
    EXPECT_THROW(from_bytes(s.substr(0, cut)), ArtifactError) << cut;
}

TEST(PolicyBank, BadMagicAndVersionRejected) {
  std::string s = bytes_of(random_bank(1, 6));
  std::string m = s;
  m[0] = 'X';
  EXPECT_THROW(from_bytes(m), ArtifactError);
  PolicyBank b = random_bank(1, 6);
  b.version = kBankVersion + 1;
  EXPECT_THROW(from_bytes(bytes_of(b)), ArtifactError);
}

TEST(PolicyBank, DuplicateAndSparseIdsRejected) {
  PolicyBank b = random_bank(3, 7);
  b.entries[2].policy_id = 1;
  EXPECT_THROW(from_bytes(bytes_of(b)), ArtifactError);
  b.entries[2].policy_id = 5;
  EXPECT_THROW(from_bytes(bytes_of(b)), ArtifactError);
}

TEST(PolicyBank, OutOfRangeLookup) {
  const PolicyBank b = random_bank(2, 8);
  EXPECT_NO_THROW(b.get(1));
  EXPECT_THROW(b.get(2), InvalidArgument);
  EXPECT_THROW(b.get(-1), InvalidArgument);
}

TEST(PolicyBank, BuildIsOnePerScenarioAndByteReproducible) {
  const auto sc = generate_scenario_set(default_archetypes(), 1, 3);
  TrainContext ctx;
  ctx.sim.inner_steps_per_hour = 10;
  PpoConfig cfg;
  cfg.total_interactions = 240;
  cfg.epochs_per_iter = 1;
  const std::vector<const ScenarioSpec*> x{&sc[0], &sc[2]};
  const PolicyBank a = build_bank(x, {1, 3}, ctx, cfg);
  ASSERT_EQ(a.size(), 2);
  EXPECT_EQ(a.entries[1].scenario_id, 2);
  EXPECT_EQ(a.entries[1].group, 3);
  EXPECT_EQ(a.entries[0].seed, policy_seed_for(cfg.seed, sc[0]));
  EXPECT_EQ(bytes_of(build_bank(x, {1, 3}, ctx, cfg)), bytes_of(a));
  const PolicyBank one = build_bank({&sc[1]}, {2}, ctx, cfg);
  EXPECT_EQ(one.size(), 1);
  EXPECT_THROW(build_bank({}, {}, ctx, cfg), InvalidArgument);
  EXPECT_THROW(build_bank(x, {1}, ctx, cfg), InvalidArgument);
}
