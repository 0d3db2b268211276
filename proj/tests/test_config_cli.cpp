#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "vdsa/config.hpp"

namespace fs = std::filesystem;
using namespace vdsa;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vdsa_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the CLI with stdout and stderr captured; returns the exit status.
int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(VDSA_SIM_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kQuick =
    "sim.duration_s = 1\n"
    "sim.warmup_s = 0.2\n"
    "traffic.density_per_km_lane = 5\n";

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const Config d;
  const fs::path dir = scratch("defaults");
  write(dir / "all.cfg", d.dump(true));
  EXPECT_EQ(Config::load(dir / "all.cfg").dump(), d.dump());
}

TEST(Config, IncludeIsRelativeAndOverridable) {
  const fs::path dir = scratch("include");
  fs::create_directories(dir / "sub");
  write(dir / "sub" / "base.cfg", "sim.duration_s = 42\ntraffic.density_per_km_lane = 7\n");
  write(dir / "top.cfg", "include sub/base.cfg\nsim.duration_s = 10 # trailing comment\n");
  const Config c = Config::load(dir / "top.cfg");
  EXPECT_DOUBLE_EQ(c.num("sim.duration_s"), 10.0);
  EXPECT_DOUBLE_EQ(c.num("traffic.density_per_km_lane"), 7.0);
}

TEST(Config, UnknownKeyNamesLocation) {
  const fs::path dir = scratch("unknown");
  write(dir / "bad.cfg", "sim.duration_s = 1\nsim.durration_s = 2\n");
  try {
    Config::load(dir / "bad.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.cfg:2"), std::string::npos) << e.what();
  }
}

TEST(Config, BadValues) {
  Config c;
  c.set("sim.duration_s", "ten");
  EXPECT_THROW(simulation_config_from(c), ConfigError);
  Config d;
  d.set("sim.use_case", "d");
  EXPECT_THROW(simulation_config_from(d), ConfigError);
  EXPECT_THROW(Config().set("no.such_key", "1"), ConfigError);
}

TEST(Config, RemFileResolvedAgainstConfig) {
  const fs::path dir = scratch("remfile");
  save_rem((dir / "map.rem").string(), synthesize_rem({}));
  write(dir / "s.cfg", "rem.file = map.rem\n");
  const auto cfg = simulation_config_from(Config::load(dir / "s.cfg"));
  EXPECT_TRUE(*cfg.rem == synthesize_rem({}));
}

TEST(Cli, MinimalRunWritesOutputs) {
  const fs::path dir = scratch("cli_run");
  write(dir / "q.cfg", kQuick);
  ASSERT_EQ(cli("run --config " + (dir / "q.cfg").string() + " --out " + (dir / "out").string() + " --seeds 3",
                dir / "log"),
            0)
      << slurp(dir / "log");
  for (const char* f : {"reception_vs_position.csv", "dtt_sir_samples.csv", "band_changes.csv", "summary.csv",
                        "effective_config.cfg"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
}

TEST(Cli, MissingConfigNamesPath) {
  const fs::path dir = scratch("cli_missing");
  const std::string path = (dir / "nope.cfg").string();
  EXPECT_EQ(cli("run --config " + path + " --out " + (dir / "out").string(), dir / "log"), 1);
  EXPECT_NE(slurp(dir / "log").find(path), std::string::npos);
}

TEST(Cli, UsageErrors) {
  const fs::path dir = scratch("cli_usage");
  EXPECT_EQ(cli("run --out x", dir / "log"), 1);
  EXPECT_EQ(cli("frobnicate", dir / "log"), 1);
  EXPECT_EQ(cli("verify-sensing --pfa 0.01", dir / "log"), 1);
  EXPECT_EQ(cli("verify-sensing --pfa 1.5 --pd 0.9 --sinr-db 0", dir / "log"), 1);
  write(dir / "bad.cfg", "sim.bogus = 1\n");
  EXPECT_EQ(cli("run --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string(), dir / "log"), 1);
}

TEST(Cli, PrintDefaults) {
  const fs::path dir = scratch("cli_defaults");
  ASSERT_EQ(cli("--print-defaults", dir / "log"), 0);
  write(dir / "d.cfg", slurp(dir / "log"));
  EXPECT_EQ(Config::load(dir / "d.cfg").dump(), Config().dump());
}

TEST(Cli, ThreeSeedsMerge) {
  const fs::path dir = scratch("cli_seeds");
  write(dir / "q.cfg", kQuick);
  ASSERT_EQ(cli("run --config " + (dir / "q.cfg").string() + " --out " + (dir / "out").string() +
                    " --seeds 1,2,3 --use-case a",
                dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_NE(slurp(dir / "out" / "summary.csv").find("\nruns,3\n"), std::string::npos);
  for (const char* s : {"seed_1", "seed_2", "seed_3"}) EXPECT_TRUE(fs::exists(dir / "out" / s / "summary.csv"));
}

TEST(Cli, EffectiveConfigReproducesRun) {
  const fs::path dir = scratch("cli_effective");
  write(dir / "q.cfg", kQuick);
  ASSERT_EQ(cli("run --config " + (dir / "q.cfg").string() + " --out " + (dir / "a").string() + " --seeds 4",
                dir / "log"),
            0);
  ASSERT_EQ(cli("run --config " + (dir / "a" / "effective_config.cfg").string() + " --out " + (dir / "b").string() +
                    " --seeds 4",
                dir / "log"),
            0)
      << slurp(dir / "log");
  for (const char* f : {"reception_vs_position.csv", "dtt_sir_samples.csv", "band_changes.csv", "summary.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Cli, VerifyCommands) {
  const fs::path dir = scratch("cli_verify");
  EXPECT_EQ(cli("verify-sensing --pfa 0.01 --pd 0.99 --sinr-db 0 --trials 100000", dir / "log"), 0)
      << slurp(dir / "log");
  EXPECT_EQ(cli("verify-allocator --scenario " VDSA_DATA_DIR "/fixtures/two_platoons.cfg", dir / "log"), 0)
      << slurp(dir / "log");
  EXPECT_EQ(cli("verify-allocator --scenario " VDSA_DATA_DIR "/fixtures/tie.cfg", dir / "log"), 0);
  EXPECT_EQ(cli("verify-allocator --scenario " + (dir / "missing.cfg").string(), dir / "log"), 1);
}

TEST(Cli, VerificationFailureExitCode) {
  // Averaging 16 real squared samples gives a chi-square statistic whose tail
  // the Gaussian closed form does not describe, so the check must fail.
  const fs::path dir = scratch("cli_fail");
  EXPECT_EQ(cli("verify-sensing --pfa 0.01 --pd 0.99 --sinr-db 10 --trials 100000 --raw-samples", dir / "log"), 2);
}
