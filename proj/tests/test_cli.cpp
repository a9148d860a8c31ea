#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "conewave/cli.hpp"

using namespace conewave;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() /
            (std::string("conewave_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string write_config(const std::string& name, const std::string& text) {
    const auto path = root_ / name;
    std::ofstream(path) << text;
    return path.string();
  }

  int run(const std::string& command, const std::string& config, const std::string& out,
          std::optional<unsigned> threads = 1) {
    CliOptions o;
    o.command = command;
    o.config_path = config;
    o.out_dir = (root_ / out).string();
    o.threads = threads;
    errors_.str("");
    return run_command(o, errors_);
  }

  std::map<std::string, std::string> summary(const std::string& out) {
    std::ifstream in(root_ / out / "summary");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
  }

  std::string slurp(const fs::path& p) {
    std::ifstream in(root_ / p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path root_;
  std::ostringstream errors_;
};

const char* kTruncatedRun = R"(
[problem]
n = 3
p = 2
[grid]
R = 4
J = 512
t0 = -1
t_end = -0.04
snapshot_log_range = -1, -0.04
snapshots_per_decade = 32
[data]
kind = truncated_ode
M = 2
w = 0.25
[diagnostics]
t_star = -0.5, -0.25, -0.125
window_lo = -0.5
window_hi = -0.08
)";

}  // namespace

TEST(ParseIni, SectionsCommentsAndLists) {
  std::istringstream in("# header\n[grid]\n  J = 64 ; trailing\n\n[diagnostics]\nt_star = 1, 2 ,4\n");
  const auto doc = parse_ini(in);
  EXPECT_EQ(doc.at("grid").at("J"), "64");
  const auto c = RunConfig::from_document(doc);
  EXPECT_EQ(c.J, 64);
  EXPECT_EQ(c.t_star, (std::vector<double>{1, 2, 4}));
  EXPECT_EQ(c.n, 3);
}

TEST(ParseIni, RejectsMalformedInput) {
  auto bad = [](const std::string& text) {
    std::istringstream in(text);
    return RunConfig::from_document(parse_ini(in));
  };
  EXPECT_THROW(bad("J = 3\n"), ConfigError);
  EXPECT_THROW(bad("[grid]\nJ = 3\nJ = 4\n"), ConfigError);
  EXPECT_THROW(bad("[grid\nJ = 3\n"), ConfigError);
  EXPECT_THROW(bad("[grid]\nJ\n"), ConfigError);
  EXPECT_THROW(bad("[grid]\nJJ = 3\n"), ConfigError);
  EXPECT_THROW(bad("[mesh]\nJ = 3\n"), ConfigError);
  EXPECT_THROW(bad("[grid]\nJ = 3.5\n"), ConfigError);
  EXPECT_THROW(bad("[grid]\nR = four\n"), ConfigError);
  EXPECT_THROW(bad("[verify]\nseed = -1\n"), ConfigError);
  EXPECT_THROW(bad("[verify]\ncases = -3\n"), ConfigError);
}

TEST(RunConfigSchedule, MergesExplicitUniformAndLogTimes) {
  RunConfig c;
  c.t0 = 0.0;
  c.t_end = 1.0;
  c.snapshot_step = 0.5;
  c.snapshot_times = {0.25, 0.5};
  EXPECT_EQ(c.snapshot_schedule(), (std::vector<double>{0.0, 0.25, 0.5, 1.0}));
  c.snapshot_log_range = {-1.0, -0.1};
  c.snapshots_per_decade = 1;
  EXPECT_EQ(c.snapshot_schedule().front(), -1.0);
}

TEST(ResolveThreads, FlagThenEnvironment) {
  ::setenv("CONEWAVE_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(std::nullopt), 3u);
  EXPECT_EQ(resolve_threads(5u), 5u);
  ::setenv("CONEWAVE_THREADS", "zero", 1);
  EXPECT_THROW(resolve_threads(std::nullopt), ConfigError);
  EXPECT_THROW(resolve_threads(0u), ConfigError);
  ::unsetenv("CONEWAVE_THREADS");
  EXPECT_GE(resolve_threads(std::nullopt), 1u);
}

TEST_F(CliTest, VerifyCarlemanTwoHundredCasesPass) {
  const auto cfg = write_config("c.ini", "[verify]\ncases = 200\nseed = 7\n");
  ASSERT_EQ(run("verify-carleman", cfg, "out"), exit_ok) << errors_.str();
  std::istringstream csv(slurp("out/carleman.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "case_id,a,p,n,lhs,rhs_bulk,rhs_boundary,slack,err_est,pass");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "true") << line;
  }
  EXPECT_EQ(rows, 200);
  EXPECT_EQ(summary("out")["passed"], "200");
}

TEST_F(CliTest, InvertedAnnulusIsAConfigError) {
  const auto cfg =
      write_config("c.ini", "[data]\nkind = ode\n[diagnostics]\nsigma0 = 0.5\nsigma1 = 0.25\n");
  EXPECT_EQ(run("verify-localized", cfg, "out"), exit_config);
  EXPECT_NE(errors_.str().find("sigma0 < sigma1"), std::string::npos) << errors_.str();
}

TEST_F(CliTest, SimulateZeroData) {
  const auto cfg = write_config(
      "c.ini", "[grid]\nR = 2\nJ = 64\nt0 = 0\nt_end = 1\nsnapshot_times = 0, 0.5, 1\n");
  ASSERT_EQ(run("simulate", cfg, "out"), exit_ok) << errors_.str();
  auto kv = summary("out");
  EXPECT_EQ(kv["status"], "completed");
  EXPECT_EQ(kv["snapshots"], "3");
  EXPECT_EQ(kv["snapshots_all_zero"], "true");
  EXPECT_EQ(kv["max_phi"], "0");
  EXPECT_TRUE(fs::exists(root_ / "out/snapshot_0002.txt"));
  EXPECT_EQ(slurp("out/run.csv").substr(0, 24), "status,t_b,J,dt,max_phi\n");
}

TEST_F(CliTest, ExitCodesSeparateFailureKinds) {
  EXPECT_EQ(run("simulate", (root_ / "missing.ini").string(), "out"), exit_io);
  EXPECT_EQ(run("simulate", write_config("p.ini", "[output]\nprecision = 6\n"), "out"),
            exit_config);
  EXPECT_EQ(run("simulate", write_config("f.ini", "[data]\nkind = file\npath = /nonexistent\n"),
                "out"),
            exit_io);
  EXPECT_EQ(run("frobnicate", write_config("z.ini", ""), "out"), exit_config);
  // dt / dr above 1 is reported by the solver, not rejected up front.
  EXPECT_EQ(run("simulate", write_config("cfl.ini", "[grid]\nJ = 32\ncfl = 1.5\nt_end = -0.5\n"),
                "cfl"),
            exit_assertion);
  EXPECT_EQ(summary("cfl")["status"], "cfl_violation");
  // Overflow to inf before the (huge) threshold is reached.
  EXPECT_EQ(run("simulate",
                write_config("inf.ini",
                             "[problem]\np = 9\n[grid]\nJ = 64\nt_end = -0.01\nphi_max = 1e308\n"
                             "[data]\nkind = gaussian\nA = 1e10\ns = 0.5\n"),
                "inf"),
            exit_assertion);
}

TEST_F(CliTest, OutputIsByteIdenticalAcrossRunsAndThreadCounts) {
  const auto cfg = write_config("c.ini", "[verify]\ncases = 40\nseed = 11\n");
  ASSERT_EQ(run("verify-carleman", cfg, "a", 1), exit_ok);
  ASSERT_EQ(run("verify-carleman", cfg, "b", 3), exit_ok);
  EXPECT_EQ(slurp("a/carleman.csv"), slurp("b/carleman.csv"));
  EXPECT_EQ(slurp("a/summary"), slurp("b/summary"));

  const auto sim = write_config(
      "s.ini",
      "[grid]\nR = 4\nJ = 128\nt0 = 0\nt_end = 1\nsnapshot_step = 0.25\n[data]\nkind = gaussian\n"
      "A = 0.5\ns = 0.4\n");
  ASSERT_EQ(run("simulate", sim, "s1"), exit_ok);
  ASSERT_EQ(run("simulate", sim, "s2"), exit_ok);
  for (const char* f : {"axis.csv", "energy.csv", "run.csv", "snapshot_0003.txt"})
    EXPECT_EQ(slurp(fs::path("s1") / f), slurp(fs::path("s2") / f)) << f;
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  const auto cfg = write_config("c.ini", "[verify]\ncases = 5\nseed = 7\n");
  CliOptions o;
  o.command = "verify-carleman";
  o.config_path = cfg;
  o.out_dir = (root_ / "s8").string();
  o.seed = 8;
  o.threads = 1;
  ASSERT_EQ(run_command(o, errors_), exit_ok);
  ASSERT_EQ(run("verify-carleman", cfg, "s7"), exit_ok);
  EXPECT_EQ(summary("s8")["seed"], "8");
  EXPECT_NE(slurp("s8/carleman.csv"), slurp("s7/carleman.csv"));
}

TEST_F(CliTest, ShiftedModeKeepsKUnderRescaling) {
  const auto cfg = write_config(
      "c.ini", "[diagnostics]\nt_star = 1, 2, 4\n[verify]\nmode = shifted\nfields = 5\n");
  ASSERT_EQ(run("verify-carleman", cfg, "out"), exit_ok) << errors_.str();
  auto kv = summary("out");
  EXPECT_EQ(kv["passed"], "5");
  EXPECT_LE(std::stod(kv["max_K_spread"]), 2.0);
}

TEST_F(CliTest, LocalizedRatioOnTruncatedRun) {
  const auto cfg = write_config("c.ini", kTruncatedRun);
  ASSERT_EQ(run("verify-localized", cfg, "out"), exit_ok) << errors_.str();
  EXPECT_LT(std::stod(summary("out")["max_relative_deviation"]), 0.2);
}

TEST_F(CliTest, SupWindowBeyondTheRunIsRejected) {
  std::string text = kTruncatedRun;
  std::string late = text;
  late.replace(late.find("t_star = -0.5, -0.25, -0.125"), 28, "t_star = -0.03");
  EXPECT_EQ(run("verify-localized", write_config("late.ini", late), "late"), exit_config);
  text.replace(text.find("window_hi = -0.08"), 17, "window_hi = -0.05");
  EXPECT_EQ(run("energy-profile", write_config("w.ini", text), "ep"), exit_config);
  EXPECT_NE(errors_.str().find("not covered"), std::string::npos) << errors_.str();
}

TEST_F(CliTest, RateFitOfBallQuantityIsFlat) {
  const auto cfg = write_config("c.ini", kTruncatedRun);
  ASSERT_EQ(run("rate-fit", cfg, "out"), exit_ok) << errors_.str();
  auto kv = summary("out");
  EXPECT_NEAR(std::stod(kv["slope"]), 0.0, 0.1);
  EXPECT_NEAR(std::stod(kv["eps_hat"]), 36.84, 0.5);
  EXPECT_EQ(slurp("out/rate.csv").substr(0, 9), "t,mz_q\n-0");
}

TEST_F(CliTest, EnergyProfileOnClosedForm) {
  const auto cfg = write_config(
      "c.ini", "[data]\nkind = ode\n[diagnostics]\nwindow_lo = -0.5\nwindow_hi = -0.05\n");
  ASSERT_EQ(run("energy-profile", cfg, "out"), exit_ok) << errors_.str();
  const auto csv = slurp("out/energy.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,annulus_q,slab_q,mz_q,lhs_1_6,rhs_1_6,ratio,err_est");
}

TEST_F(CliTest, DecayOfSmallData) {
  const auto cfg = write_config("c.ini", R"(
[grid]
R = 48
J = 1024
t0 = 1
t_end = 32
snapshot_step = 0.125
[data]
kind = gaussian
A = 1e-3
s = 0.5
[diagnostics]
sigma = 0.5
T = 4, 8, 16, 32
)");
  ASSERT_EQ(run("decay", cfg, "out"), exit_ok) << errors_.str();
  auto kv = summary("out");
  EXPECT_EQ(kv["D_increments_decreasing"], "true");
  EXPECT_EQ(slurp("out/decay.csv").substr(0, 6), "T,D,L\n");
}

TEST_F(CliTest, SweepOverJFitsSecondOrder) {
  const auto cfg = write_config("c.ini", R"(
[grid]
t0 = -1
t_end = -0.5
[data]
kind = truncated_ode
[sweep]
scenario = convergence
J = 512, 1024, 2048
)");
  ASSERT_EQ(run("sweep", cfg, "out", 2), exit_ok) << errors_.str();
  EXPECT_NEAR(std::stod(summary("out")["fitted_order"]), 2.0, 0.3);
  EXPECT_TRUE(fs::exists(root_ / "out/cell_2/summary"));
  const auto csv = slurp("out/sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "cell,p,M,J,gamma,a,exit_code,headline");
}

TEST_F(CliTest, SweepOverAOnCarleman) {
  const auto cfg = write_config(
      "c.ini", "[verify]\ncases = 20\n[sweep]\nscenario = verify-carleman\na = 0.05, 0.25, 0.45\n");
  ASSERT_EQ(run("sweep", cfg, "out", 2), exit_ok) << errors_.str();
  EXPECT_EQ(summary("out")["passed"], "3");
}

TEST_F(CliTest, EmptySweepGridIsAConfigError) {
  EXPECT_EQ(run("sweep", write_config("c.ini", "[sweep]\nscenario = simulate\n"), "out"),
            exit_config);
  EXPECT_EQ(run("sweep", write_config("d.ini", "[sweep]\nscenario = nope\np = 2\n"), "out"),
            exit_config);
}
