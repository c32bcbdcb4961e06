#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "tandem/cli.hpp"

using namespace tandem;
using namespace tandem::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tandem-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json dm2_config(const std::string& command) {
  return {{"command", command},
          {"model",
           {{"arrivals", {{"type", "renewal"}, {"dist", {{"kind", "deterministic"}, {"value", 2.0}}}}},
            {"services", {{{"kind", "exponential"}, {"rate", 1.0}}, {{"kind", "exponential"}, {"rate", 1.0}}}}}},
          {"sim", {{"runs", 200}, {"path_len", 200}, {"seed", 5}}},
          {"x_grid", {0.0, 1.0, 2.0, 4.0}}};
}

int run_quiet(const RunConfig& c) {
  std::ostringstream log;
  return run(c, log);
}

}  // namespace

TEST(CliParse, ConfigAndOverrides) {
  auto j = dm2_config("compare");
  j["bounds"] = {"polyexp", "ld"};
  j["format"] = "json";
  auto c = parse_run_config(j);
  EXPECT_EQ(c.command, Command::compare);
  EXPECT_EQ(c.sim.runs, 200u);
  EXPECT_EQ(c.sim.x_grid.size(), 4u);
  EXPECT_EQ(c.bound_kinds.size(), 2u);
  EXPECT_EQ(c.format, OutputFormat::json);
  Overrides o;
  o.seed = 9;
  o.runs = 300;
  o.format = "csv";
  apply(c, o);
  EXPECT_EQ(c.sim.seed, 9u);
  EXPECT_EQ(c.sim.runs, 300u);
  EXPECT_EQ(c.format, OutputFormat::csv);
  EXPECT_THROW(parse_run_config({{"command", "plot"}}), Error);
  EXPECT_THROW(parse_run_config({{"bounds", {"chernoff"}}}), Error);
}

TEST(CliParse, SetLoadRescalesArrivals) {
  auto spec = *parse_run_config(dm2_config("bound")).model;
  set_load(spec, 0.75);
  EXPECT_NEAR(spec.mean_interarrival(), 1.0 / 0.75, 1e-12);
  spec.services[1] = Distribution::exponential(0.5);
  set_load(spec, 0.5);
  EXPECT_NEAR(spec.mean_interarrival(), 4.0, 1e-12);
}

TEST(CliParse, ApplicableBounds) {
  const auto two = *parse_run_config(dm2_config("bound")).model;
  EXPECT_EQ(applicable_bounds(two, Metric::waiting),
            (std::vector<BoundKind>{BoundKind::polyexp, BoundKind::ld}));
  TandemSpec one{Renewal{Distribution::exponential(0.5)}, {Distribution::exponential(1.0)}};
  const auto k = applicable_bounds(one, Metric::waiting);
  EXPECT_NE(std::find(k.begin(), k.end(), BoundKind::ross), k.end());
}

TEST_F(CliTest, BoundCsvHeaderAndKinds) {
  auto c = parse_run_config(dm2_config("bound"));
  c.output_path = path("b.csv");
  ASSERT_EQ(run_quiet(c), 0);
  const auto text = slurp(c.output_path);
  EXPECT_EQ(text.substr(0, text.find('\n')), "x,value,stderr,kind");
  EXPECT_NE(text.find("polyexp-bound"), std::string::npos);
  EXPECT_NE(text.find("ld-bound"), std::string::npos);
}

TEST_F(CliTest, JsonHasSchemaVersion) {
  auto c = parse_run_config(dm2_config("bound"));
  c.format = OutputFormat::json;
  c.output_path = path("b.json");
  ASSERT_EQ(run_quiet(c), 0);
  const auto j = nlohmann::json::parse(slurp(c.output_path));
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(j.at("command"), "bound");
  EXPECT_TRUE(j.contains("fit"));
  EXPECT_EQ(j.at("curves").size(), 2u);
}

TEST_F(CliTest, CompareWritesDominanceSidecar) {
  auto c = parse_run_config(dm2_config("compare"));
  c.output_path = path("cmp.csv");
  ASSERT_EQ(run_quiet(c), 0);
  const auto side = nlohmann::json::parse(slurp(path("cmp.dominance.json")));
  EXPECT_TRUE(side.at("all_pass").get<bool>());
  EXPECT_EQ(side.at("reports").size(), 2u);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  for (const char* cmd : {"bound", "simulate", "compare"}) {
    for (auto fmt : {OutputFormat::csv, OutputFormat::json}) {
      auto c = parse_run_config(dm2_config(cmd));
      c.format = fmt;
      c.output_path = path("a.out");
      ASSERT_EQ(run_quiet(c), 0);
      const auto first = slurp(c.output_path);
      c.output_path = path("b.out");
      ASSERT_EQ(run_quiet(c), 0);
      EXPECT_EQ(slurp(c.output_path), first) << cmd;
    }
  }
}

TEST_F(CliTest, ExitCodes) {
  auto unstable = parse_run_config(dm2_config("simulate"));
  unstable.model->arrivals = Renewal{Distribution::deterministic(0.8)};
  EXPECT_EQ(run_quiet(unstable), 2);

  auto bad_rho = parse_run_config(dm2_config("simulate"));
  bad_rho.rho = 1.2;
  EXPECT_EQ(run_quiet(bad_rho), 1);

  auto no_grid = parse_run_config(dm2_config("bound"));
  no_grid.sim.x_grid.clear();
  EXPECT_EQ(run_quiet(no_grid), 1);

  auto no_model = RunConfig{};
  EXPECT_EQ(run_quiet(no_model), 1);

  auto bad_bound = parse_run_config(dm2_config("bound"));
  bad_bound.bound_kinds = {BoundKind::ross};
  EXPECT_EQ(run_quiet(bad_bound), 1);

  // An unreachable pass fraction forces a failed verification.
  auto verify = parse_run_config(dm2_config("verify"));
  verify.verify.checks = {"fixed-point"};
  verify.verify.n_mc = 2000;
  verify.verify.min_pass_fraction = 1.01;
  verify.output_path = path("v.json");
  EXPECT_EQ(run_quiet(verify), 3);
  EXPECT_FALSE(nlohmann::json::parse(slurp(verify.output_path)).at("all_pass").get<bool>());
}

TEST_F(CliTest, VerifyEightInequalitiesPasses) {
  auto c = parse_run_config(dm2_config("verify"));
  c.output_path = path("v.json");
  ASSERT_EQ(run_quiet(c), 0);
  const auto j = nlohmann::json::parse(slurp(c.output_path));
  EXPECT_TRUE(j.at("all_pass").get<bool>());
  EXPECT_EQ(j.at("reports").size(), 8u);
}

TEST_F(CliTest, FigureFileNames) {
  RunConfig c;
  c.command = Command::figure;
  c.figure_model = "e2m2";
  c.rho = 0.5;
  c.sim.runs = 100;
  c.sim.path_len = 200;
  c.output_path = dir_.string();
  ASSERT_EQ(run_quiet(c), 0);
  const auto file = path("figure-e2m2-rho0.50.csv");
  ASSERT_TRUE(fs::exists(file));
  const auto text = slurp(file);
  EXPECT_NE(text.find("simulation"), std::string::npos);
  c.figure_model = "mm1";
  EXPECT_EQ(run_quiet(c), 1);
}

TEST_F(CliTest, BinaryEndToEnd) {
  const auto cfg = path("cfg.json");
  std::ofstream(cfg) << dm2_config("bound").dump();
  const std::string bin = TANDEM_CLI_PATH;
  auto sh = [&](const std::string& args) {
    return std::system((bin + " " + args + " >" + path("stdout.txt") + " 2>&1").c_str());
  };
  ASSERT_EQ(sh("--config " + cfg + " --out " + path("x.csv") + " bound"), 0);
  const auto first = slurp(path("x.csv"));
  ASSERT_EQ(sh("--config " + cfg + " --out " + path("y.csv") + " bound"), 0);
  EXPECT_EQ(slurp(path("y.csv")), first);
  auto unstable = dm2_config("simulate");
  unstable["model"]["arrivals"]["dist"]["value"] = 0.5;
  std::ofstream(path("unstable.json")) << unstable.dump();
  EXPECT_EQ(WEXITSTATUS(sh("--config " + path("unstable.json") + " simulate")), 2);
  EXPECT_EQ(WEXITSTATUS(sh("--config " + cfg + " --rho 1.5 simulate")), 1);
  EXPECT_EQ(WEXITSTATUS(sh("--config " + cfg + " --format yaml bound")), 1);
  EXPECT_EQ(WEXITSTATUS(sh("nonsense")), 1);
}
