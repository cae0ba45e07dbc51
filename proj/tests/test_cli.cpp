#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(OSCLAB_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(OSCLAB_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("osclab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }
  std::string out(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const char* kSmallRate = R"({
  "label": "cli-small",
  "seed": 3,
  "model": {"kind": "tar", "a": 0.5, "b": -0.3, "innovation": {"kind": "gaussian"}},
  "n_grid": [1024, 2048],
  "bandwidth": {"rule": "power_law", "eta": 0.5},
  "replicates": 3,
  "marginal": {"reference_size": 100000},
  "checks": {"rate_slope": false}
})";

}  // namespace

TEST_F(Cli, SelftestPasses) {
  const auto r = run("selftest");
  EXPECT_EQ(r.code, 0) << r.output;
}

TEST_F(Cli, OscillatePrintsTheWorkedValue) {
  const auto r = run("oscillate -c " + config("oscillate_worked.json") + " -o " + out("o"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("0.7071067812"), std::string::npos) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "o" / "verdict.json"));
  EXPECT_TRUE(fs::exists(dir_ / "o" / "run-manifest.json"));
}

TEST_F(Cli, CheckConditionsPrintsTheCauchyIntegral) {
  const auto r = run("check-conditions -c " + config("conditions_cauchy.json") + " -o " + out("c"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("1.25"), std::string::npos) << r.output;
}

TEST_F(Cli, UnknownConfigKeyIsExitTwo) {
  const auto cfg = write("bad.json", R"({"label": "x", "oscillate": {"sample": [0.5], "b": 1, "bee": 2}})");
  const auto r = run("oscillate -c " + cfg.string() + " -o " + out("o"));
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("oscillate.bee"), std::string::npos) << r.output;
}

TEST_F(Cli, UnknownFlagIsExitTwo) {
  EXPECT_EQ(run("rate --no-such-flag").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
  const auto args = "oscillate -c " + config("oscillate_worked.json") + " -o " + out("o");
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(run(args).code, 2);
  EXPECT_EQ(run(args + " --force").code, 0);
}

TEST_F(Cli, MissingCapabilityIsExitThree) {
  const auto cfg = write("dep.json", R"({
    "model": {"kind": "tar", "a": 0.5, "b": -0.3, "innovation": {"kind": "uniform", "lo": -1, "hi": 1}},
    "dependence": {"lags": 4, "replicates": 200, "cf_terms": true}
  })");
  const auto r = run("dependence -c " + cfg.string() + " -o " + out("d"));
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST_F(Cli, ReplayReproducesRawOutput) {
  const auto cfg = write("rate.json", kSmallRate);
  ASSERT_EQ(run("rate -c " + cfg.string() + " -o " + out("a")).code, 0);
  const auto r = run("rate --replay " + out("a") + "/run-manifest.json -o " + out("b"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(slurp(dir_ / "a" / "raw.csv"), slurp(dir_ / "b" / "raw.csv"));
}

TEST_F(Cli, ThreadCountDoesNotChangeRawOutput) {
  const auto cfg = write("rate.json", kSmallRate);
  ASSERT_EQ(run("rate -c " + cfg.string() + " -j 1 -o " + out("a")).code, 0);
  ASSERT_EQ(run("rate -c " + cfg.string() + " -j 8 -o " + out("b")).code, 0);
  const auto a = slurp(dir_ / "a" / "raw.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir_ / "b" / "raw.csv"));
}

TEST_F(Cli, SeedFlagOverridesTheConfig) {
  const auto cfg = write("rate.json", kSmallRate);
  ASSERT_EQ(run("rate -c " + cfg.string() + " -o " + out("a")).code, 0);
  ASSERT_EQ(run("rate -c " + cfg.string() + " --seed 4 -o " + out("b")).code, 0);
  EXPECT_NE(slurp(dir_ / "a" / "raw.csv"), slurp(dir_ / "b" / "raw.csv"));
  EXPECT_NE(slurp(dir_ / "b" / "run-manifest.json").find("\"seed\": 4"), std::string::npos);
}
