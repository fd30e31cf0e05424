#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "detlab/cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
  json summary() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "detlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = detlab::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("detlab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, MdeFlatGoe) {
  const Result r = run({"mde", "--flat-goe", "--z-imag", "1.0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = r.summary();
  EXPECT_EQ(s["schema_version"], 1);
  EXPECT_NEAR(s["result"]["m"]["im"].get<double>(), 0.618034, 1e-6);
  EXPECT_NEAR(s["result"]["m"]["re"].get<double>(), 0.0, 1e-12);
}

TEST(Cli, DemboPrintsOracle) {
  const Result r = run({"dembo", "--n", "8", "--p", "4", "--samples", "20000"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.summary()["result"]["oracle"].get<double>(), 0.41015625);
}

TEST(Cli, DetGrowthReportsSemicircleOracle) {
  const Result r = run({"detgrowth", "--model", "wigner", "--n", "100", "--samples", "30", "--energy", "0",
                        "--tolerance", "0.1"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(r.summary()["result"]["oracle"].get<double>(), -0.5, 1e-9);
}

TEST(Cli, FailedAcceptanceExitsOne) {
  const Result r = run({"detgrowth", "--n", "30", "--samples", "30", "--tolerance", "0"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.summary()["passed"].get<bool>());
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"nosuch"}).code, 2);
  EXPECT_EQ(run({"detgrowth", "--n", "abc"}).code, 2);
  EXPECT_EQ(run({"detgrowth", "--model", "tree"}).code, 2);
  EXPECT_EQ(run({"dembo", "--n", "2", "--p", "4"}).code, 2);
  EXPECT_EQ(run({"mde"}).code, 2);
  EXPECT_EQ(run({"mde", "--config", "/nonexistent/config.json"}).code, 2);
  const Result r = run({"detgrowth", "--n", "-3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--n"), std::string::npos);
}

TEST(Cli, ModuleErrorsExitThreeWithRecord) {
  const Result r = run({"detgrowth", "--model", "d-regular", "--n", "5", "--degree", "3"});
  ASSERT_EQ(r.code, 3);
  const json s = r.summary();
  EXPECT_EQ(s["error"]["code"], "invalid-spec");
  EXPECT_EQ(s["schema_version"], 1);
  const Result v = run({"variational", "--alpha", "1e-12", "--trace-points", "0"});
  EXPECT_EQ(v.code, 3);
  EXPECT_EQ(v.summary()["error"]["code"], "unbounded-domain-no-decay");
}

TEST(Cli, DryRunResolvesPlanWithoutSampling) {
  const Result r = run({"detgrowth", "--model", "band", "--n", "400", "--dry-run"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = r.summary();
  EXPECT_TRUE(s["dry_run"].get<bool>());
  EXPECT_EQ(s["params"]["bandwidth"], 37);
  EXPECT_EQ(s["spec"]["model"], "band");
  EXPECT_FALSE(s.contains("result"));
  for (const char* cmd : {"dembo", "wegner", "mde", "freeconv", "variational", "laplace", "products", "moments",
                          "decomp-test", "counterexample"})
    EXPECT_EQ(run({cmd, "--dry-run"}).code, 0) << cmd;
}

TEST(Cli, ConfigFileWithOverrides) {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "c.json");
    f << R"({"command": "detgrowth", "seed": 7, "samples": 30,
             "spec": {"model": "wigner", "N": 40, "dist": "rademacher", "E": 1.0}})";
  }
  const Result r = run({"detgrowth", "--config", (dir / "c.json").string(), "--tolerance", "0.2"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const json s = r.summary();
  EXPECT_EQ(s["seed"], 7);
  EXPECT_EQ(s["params"]["tolerance"], 0.2);
  EXPECT_NEAR(s["result"]["oracle"].get<double>(), -0.25, 1e-9);
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"bogus": 1})";
  }
  EXPECT_EQ(run({"detgrowth", "--config", (dir / "bad.json").string()}).code, 2);
  {
    std::ofstream f(dir / "other.json");
    f << R"({"command": "dembo"})";
  }
  EXPECT_EQ(run({"detgrowth", "--config", (dir / "other.json").string()}).code, 2);
  // The config's command stands in for a missing subcommand.
  const Result bare = run({"--config", (dir / "c.json").string()});
  EXPECT_EQ(bare.code, 0) << bare.err;
  EXPECT_EQ(bare.summary()["command"], "detgrowth");
  EXPECT_EQ(run({"--config", (dir / "missing.json").string()}).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, OutputIndependentOfThreadCount) {
  const fs::path a = scratch("t1"), b = scratch("t3");
  const std::vector<std::string> base = {"detgrowth", "--n", "60", "--samples", "40", "--keep-samples", "--seed", "99"};
  auto with = [&](const std::string& threads, const fs::path& out) {
    auto args = base;
    args.insert(args.end(), {"--threads", threads, "--out", out.string()});
    return run(args);
  };
  const Result r1 = with("1", a), r3 = with("3", b);
  EXPECT_EQ(r1.out, r3.out);
  for (const char* f : {"summary.json", "report.csv", "samples.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, SeedIsSaltedByCommand) {
  const Result r = run({"dembo", "--samples", "100", "--seed", "5"});
  const Result d = run({"detgrowth", "--n", "20", "--samples", "30", "--seed", "5"});
  EXPECT_NE(r.summary()["result"]["seed"], d.summary()["result"]["seed"]);
}

TEST(Cli, HelpDocumentsColumns) {
  const Result r = run({"detgrowth", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("samples.csv columns"), std::string::npos);
}

TEST(Cli, OtherSubcommandsRun) {
  EXPECT_EQ(run({"freeconv", "--z-real", "0.5"}).code, 0);
  EXPECT_EQ(run({"decomp-test", "--energy", "1", "--eta", "0.01", "--points", "2001"}).code, 0);
  EXPECT_EQ(run({"decomp-test", "--check", "truncation", "--n", "50", "--samples", "30"}).code, 0);
  const Result v = run({"variational", "--alpha", "10", "--restricted", "--trace-points", "5"});
  ASSERT_EQ(v.code, 0);
  EXPECT_NEAR(v.summary()["result"]["u"][0].get<double>(), 2.0, 1e-6);
  EXPECT_EQ(run({"moments", "--samples", "500"}).code, 0);
  EXPECT_EQ(run({"products", "--n", "40", "--samples", "30", "--tolerance", "0.3"}).code, 0);
  EXPECT_EQ(run({"counterexample", "--which", "kernel", "--n", "20", "--samples", "100", "--tolerance", "0.3"}).code, 0);
  EXPECT_EQ(run({"counterexample", "--which", "nope"}).code, 2);
}
