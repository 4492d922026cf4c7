#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

#ifndef LBREUSE_CLI
#define LBREUSE_CLI "lbreuse"
#endif

std::string cli() { return LBREUSE_CLI; }

int run(const std::string& args) {
  const int status = std::system((cli() + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("scenario generate --bogus"), 2);
}

TEST(Cli, MissingArtifactsExitThree) {
  const fs::path d = scratch("lbreuse_cli_missing");
  EXPECT_EQ(run("--out " + d.string() + " bank inspect"), 3);
  EXPECT_EQ(run("--out " + d.string() + " report render"), 3);
  EXPECT_EQ(run("--out " + d.string() + " selector train"), 3);
  fs::remove_all(d);
}

TEST(Cli, BadConfigExitsTwo) {
  const fs::path d = scratch("lbreuse_cli_config");
  const fs::path cfg = d / "c.json";
  std::ofstream(cfg) << R"({"ppo": {"clip_ratio": -1}})";
  EXPECT_EQ(run("--config " + cfg.string() + " --out " + d.string() + " scenario generate"), 2);
  std::ofstream(cfg) << R"({"unknown_key": 1})";
  EXPECT_EQ(run("--config " + cfg.string() + " --out " + d.string() + " scenario generate"), 2);
  std::ofstream(cfg) << "{ not json";
  EXPECT_EQ(run("--config " + cfg.string() + " --out " + d.string() + " scenario generate"), 2);
  EXPECT_EQ(run("--config " + (d / "nope.json").string() + " --out " + d.string() + " scenario generate"), 2);
  fs::remove_all(d);
}

TEST(Cli, GenerateThenValidate) {
  const fs::path d = scratch("lbreuse_cli_gen");
  ASSERT_EQ(run("-q --out " + d.string() + " scenario generate"), 0);
  EXPECT_TRUE(fs::exists(d / "logs" / "scenarios.json"));
  EXPECT_EQ(run("-q --out " + d.string() + " scenario validate"), 0);
  std::ofstream(d / "logs" / "scenarios.json") << R"([{"id": 0, "hours": []}])";
  EXPECT_NE(run("-q --out " + d.string() + " scenario validate"), 0);
  fs::remove_all(d);
}

TEST(Cli, ShippedConfigLoads) {
#ifndef LBREUSE_CONFIG_DIR
  GTEST_SKIP() << "LBREUSE_CONFIG_DIR not defined";
#else
  const char* dir = LBREUSE_CONFIG_DIR;
  const fs::path d = scratch("lbreuse_cli_shipped");
  EXPECT_EQ(run("-q --config " + (fs::path(dir) / "default.json").string() + " --out " + d.string() +
                " scenario generate"),
            0);
  fs::remove_all(d);
#endif
}
