#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(DCE_SIM_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("dce_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

double json_value(const std::string& out) { return nlohmann::json::parse(out)["value"].get<double>(); }

}  // namespace

TEST(Cli, EvalClosedForms) {
  auto r = run("eval gamma_dce --set drive.f_d=10GHz --set drive.velocity_ratio=0.05 --json");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(json_value(r.out), 1e10 / 6.0 * 0.0025, 1e-3);
  EXPECT_NEAR(json_value(r.out), 4.17e6, 0.01e6);

  r = run("eval sigma2_analytic --json");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(json_value(r.out), 0.025, 0.001);

  r = run("eval R --length 0 --json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["re"].get<double>(), -1.0);
  EXPECT_DOUBLE_EQ(j["im"].get<double>(), 0.0);

  r = run("eval LJ");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("LJ = 2.3e-10 H"), std::string::npos) << r.out;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("eval nonsense").code, 1);
  EXPECT_EQ(run("run -c /nonexistent/config.json").code, 1);
  EXPECT_EQ(run("eval LJ --set ampliffier.gain=2").code, 2);
  EXPECT_EQ(run("eval LJ --set thermal.temperature=-1").code, 2);
  EXPECT_EQ(run("eval LJ --set version=2").code, 2);
  EXPECT_EQ(run("eval LJ --flux 0.5Phi0").code, 3);
  EXPECT_EQ(run("eval n_out --freq 30GHz").code, 3);
  EXPECT_EQ(run("version").code, 0);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, SchemaAndVersion) {
  const auto s = run("schema");
  ASSERT_EQ(s.code, 0);
  const auto j = nlohmann::json::parse(s.out);
  EXPECT_EQ(j["version"], 1);
  EXPECT_GT(j["fields"].size(), 20u);
  const auto v = run("version");
  EXPECT_EQ(v.out.rfind("dce-sim ", 0), 0u);
}

TEST(Cli, PrintConfigRoundTrips) {
  const auto dir = scratch("print");
  const auto a = run("run --print-config --set drive.f_d=11.3GHz -o " + dir.string());
  ASSERT_EQ(a.code, 0);
  const auto cfg = write_config(dir, a.out);
  const auto b = run("run --print-config -c " + cfg.string());
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, RunWritesFilesAndSummary) {
  const auto dir = scratch("run");
  const auto r = run("run --mode both -j 2 -o " + dir.string() +
                     " --set digitizer.samples_per_channel=1000000 --set sweep.delta_lens.count=3");
  // The range form needs start/stop, so the bad override must fail as a schema error.
  EXPECT_EQ(r.code, 2);

  const auto ok = run("run --mode both -j 2 -o " + dir.string() + " --set digitizer.samples_per_channel=1000000");
  ASSERT_EQ(ok.code, 0);
  for (const char* f : {"squeezing_vs_power.jsonl", "squeezing_vs_power.csv", "squeezing_vs_power.plan.json",
                        "squeezing_vs_power.config.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  // "sigma2 at max drive (...) = V +- SE (amplifier-subtracted); ...; tanh(2 asinh|S|) = T"
  std::smatch m;
  const std::regex re(R"(= ([-0-9.e]+) \+- ([0-9.e-]+) \(amplifier-subtracted\).*tanh\(2 asinh\|S\|\) = ([0-9.e-]+))");
  ASSERT_TRUE(std::regex_search(ok.out, m, re)) << ok.out;
  const double v = std::stod(m[1]), se = std::stod(m[2]), t = std::stod(m[3]);
  EXPECT_LT(std::abs(v - t) / se, 4.0) << ok.out;
}

TEST(Cli, MonteCarloRunsAreChecksumIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::string common = " --mode montecarlo --set protocol=phase_map --set digitizer.samples_per_channel=50000";
  ASSERT_EQ(run("run -j 1 -o " + a.string() + common).code, 0);
  ASSERT_EQ(run("run -j 3 -o " + b.string() + common).code, 0);
  for (const char* f : {"phase_map.jsonl", "phase_map.csv", "phase_map.plan.json"}) {
    const auto x = slurp(a / f);
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
}

TEST(Cli, TheoryModeIndependentOfSeed) {
  const auto a = scratch("seed_a"), b = scratch("seed_b");
  ASSERT_EQ(run("run --mode theory --set seed=1 -o " + a.string()).code, 0);
  ASSERT_EQ(run("run --mode theory --set seed=999 -o " + b.string()).code, 0);
  EXPECT_EQ(slurp(a / "squeezing_vs_power.jsonl"), slurp(b / "squeezing_vs_power.jsonl"));
}

TEST(Cli, SampleWritesRecordAndResult) {
  const auto dir = scratch("sample");
  const auto rec = dir / "rec.bin", res = dir / "res.json";
  const auto r = run("sample --set digitizer.samples_per_channel=20000 --record " + rec.string() + " --result " +
                     res.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(fs::file_size(rec) > 4u * 20000u * 8u, true);
  const auto j = nlohmann::json::parse(slurp(res));
  EXPECT_EQ(j["samples"], 20000);
  EXPECT_NE(r.out.find("sigma2 = "), std::string::npos);
}
