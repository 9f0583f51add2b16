#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using testing_support::data_path;

namespace {

struct Invocation {
  int status = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is folded into the captured text.
Invocation cli(const std::string& args) {
  Invocation r;
  const std::string cmd = std::string(PCAAI_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<std::string> data_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  bool header = true;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

std::vector<std::string> fields(const std::string& row) {
  std::vector<std::string> out;
  std::stringstream ss(row);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

std::string tmp(const std::string& name) { return testing::TempDir() + "pcaai_cli_" + name; }

}  // namespace

TEST(Cli, ValidateExampleCircuit) {
  const Invocation r = cli("validate --circuit " + data_path("fig2a.json"));
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("smooth ✓ decomposable ✓"), std::string::npos) << r.out;
}

TEST(Cli, ValidateReportsViolation) {
  const Invocation r = cli("validate --circuit " + data_path("not_smooth.json"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("unit 5"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("smooth ✗"), std::string::npos);
}

TEST(Cli, MissingAndMalformedFilesExitTwo) {
  const Invocation missing = cli("validate --circuit /no/such/circuit.json");
  EXPECT_EQ(missing.status, 2);
  EXPECT_NE(missing.out.find("/no/such/circuit.json"), std::string::npos);

  const std::string bad = tmp("bad.json");
  std::ofstream(bad) << "{\"units\": [\n";
  const Invocation r = cli("validate --circuit " + bad);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("line"), std::string::npos) << r.out;

  EXPECT_EQ(cli("sweep --circuit " + data_path("fig2a.json")).status, 2);  // missing required flags
  EXPECT_EQ(cli("no-such-command").status, 2);
}

TEST(Cli, DomainViolationsExitOne) {
  EXPECT_EQ(cli("sweep --circuit " + data_path("fig2a.json") + " --exp-bits 40 --man-bits 30 --samples 10").status, 1);
  EXPECT_EQ(cli("resolution --mv 0.5 --epsilon 0.2").status, 1);
  EXPECT_EQ(cli("sweep --circuit " + data_path("not_smooth.json") + " --exp-bits 8 --man-bits 8 --samples 10").status, 1);
  EXPECT_EQ(cli("calibrate --circuit " + data_path("fig2a.json") + " --plan bogus").status, 1);
}

TEST(Cli, EnergyGrid) {
  const Invocation r = cli("energy");
  ASSERT_EQ(r.status, 0);
  const auto rows = data_rows(r.out);
  ASSERT_EQ(rows.size(), 80u);
  bool exact88 = false, aai92 = false;
  for (const auto& row : rows) {
    const auto f = fields(row);
    ASSERT_EQ(f.size(), 7u);
    if (f[0] == "8" && f[1] == "8") exact88 = std::abs(std::stod(f[4]) - 0.02747) < 5e-6;
    if (f[0] == "9" && f[1] == "2") aai92 = std::abs(std::stod(f[5]) - 0.00154) < 5e-6;
  }
  EXPECT_TRUE(exact88);
  EXPECT_TRUE(aai92);
  EXPECT_NE(r.out.find("# baseline_uW=371.8"), std::string::npos);
}

TEST(Cli, Resolution) {
  const Invocation r = cli("resolution --mv 9.5367431640625e-07 --epsilon 0.01");
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("\"F_min\": 26"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\"E_min\": 5"), std::string::npos);
  EXPECT_NE(r.out.find("\"M_req\": 10"), std::string::npos);
  EXPECT_EQ(cli("resolution --circuit " + data_path("fig2a.json") + " --epsilon 0.1").status, 0);
}

TEST(Cli, CalibrateExactPlanIsZero) {
  const Invocation r = cli("calibrate --circuit " + data_path("fig2a.json") + " --exp-bits 11 --man-bits 52 --plan all-exact --samples 500");
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("\"log2_epsilon\": 0.0"), std::string::npos) << r.out;
}

TEST(Cli, SweepBaselineCell) {
  const Invocation r = cli("sweep --circuit " + data_path("fig2a.json") + " --exp-bits 11 --man-bits 52 --mode exact --samples 300");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto rows = data_rows(r.out);
  ASSERT_EQ(rows.size(), 1u);
  const auto f = fields(rows[0]);
  EXPECT_EQ(f[4], "0");  // mean error
  EXPECT_EQ(f[6], "1");  // MAP accuracy
  EXPECT_EQ(f[7], "1");  // normalized energy
  EXPECT_NE(r.out.find("# seed=0"), std::string::npos);
}

TEST(Cli, SweepPowerOfTwoCircuitHasNoError) {
  const Invocation r = cli("sweep --circuit " + data_path("pow2.json") + " --exp-bits 5..8 --man-bits 2..6 --mode aai --samples 200");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto rows = data_rows(r.out);
  ASSERT_EQ(rows.size(), 20u);
  for (const auto& row : rows) {
    const auto f = fields(row);
    EXPECT_EQ(f[4], "0") << row;
    EXPECT_EQ(f[6], "1") << row;
  }
}

TEST(Cli, SweepIsReproducible) {
  const std::string circuit = tmp("tree.json");
  ASSERT_EQ(cli("generate --kind tree --vars 8 --depth 3 --seed 5 --out " + circuit).status, 0);
  const std::string args = "sweep --circuit " + circuit + " --exp-bits 6..8 --man-bits 4,8 --samples 300 --seed 9 --correction mc:500:2";
  const Invocation a = cli(args), b = cli(args);
  ASSERT_EQ(a.status, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(data_rows(a.out).size(), 12u);
  EXPECT_NE(cli(args + " --seed 10").out, a.out);
}

TEST(Cli, TradeoffStartsFromZero) {
  const std::string circuit = tmp("tree2.json");
  ASSERT_EQ(cli("generate --vars 8 --depth 3 --seed 6 --out " + circuit).status, 0);
  const Invocation r = cli("tradeoff --circuit " + circuit + " --fraction 0,0.5,1 --random-seeds 2 --samples 200");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto rows = data_rows(r.out);
  ASSERT_EQ(rows.size(), 9u);
  for (const auto& row : rows) {
    const auto f = fields(row);
    if (f[2] == "0") {
      EXPECT_EQ(f[5], "0") << row;
    }
  }
  EXPECT_NE(r.out.find("# random_seeds=0..1"), std::string::npos);
}

TEST(Cli, PlanFileFeedsSweepAndEval) {
  const std::string circuit = tmp("tree3.json"), plan = tmp("plan.json"), data = tmp("data.csv");
  ASSERT_EQ(cli("generate --vars 8 --depth 3 --seed 7 --out " + circuit).status, 0);
  ASSERT_EQ(cli("plan --circuit " + circuit + " --fraction 0.4 --out " + plan).status, 0);
  const Invocation sweep = cli("sweep --circuit " + circuit + " --exp-bits 8 --man-bits 8 --plan " + plan + " --samples 100");
  ASSERT_EQ(sweep.status, 0) << sweep.out;
  EXPECT_EQ(data_rows(sweep.out).size(), 1u);

  ASSERT_EQ(cli("sample --circuit " + circuit + " --samples 20 --seed 3 --out " + data).status, 0);
  const Invocation mar = cli("eval --circuit " + circuit + " --data " + data + " --exp-bits 8 --man-bits 8 --plan " + plan);
  ASSERT_EQ(mar.status, 0) << mar.out;
  EXPECT_EQ(data_rows(mar.out).size(), 20u);
  const Invocation map = cli("eval --query map --circuit " + circuit + " --data " + data + " --plan all-exact");
  ASSERT_EQ(map.status, 0) << map.out;
  for (const auto& row : data_rows(map.out)) EXPECT_EQ(row.back(), '1');
}

TEST(Cli, AnalyzeAndFailure) {
  const Invocation a = cli("analyze --circuit " + data_path("fig2a.json") + " --exp-bits 8 --man-bits 12 --samples 2000 --kl");
  ASSERT_EQ(a.status, 0) << a.out;
  EXPECT_NE(a.out.find("\"delta_dc\""), std::string::npos);
  EXPECT_NE(a.out.find("\"kl_bruteforce\""), std::string::npos);
  const Invocation f = cli("failure --delta-e 2 --samples 10000");
  ASSERT_EQ(f.status, 0);
  EXPECT_EQ(data_rows(f.out), std::vector<std::string>{"2,1,0,0"});
}
