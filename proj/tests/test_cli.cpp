#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "roughwall/boundary.hpp"
#include "roughwall/common.hpp"
#include "runner.hpp"

using namespace roughwall;
using namespace roughwall::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool names(const std::vector<Diagnostic>& d, const std::string& a, const std::string& b = "") {
  for (const auto& x : d)
    if (x.field.find(a) != std::string::npos && (b.empty() || x.field.find(b) != std::string::npos)) return true;
  return false;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("roughwall_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, DefaultsAreValid) {
  for (const auto& e : experiment_names()) EXPECT_TRUE(validate(ExperimentConfig::defaults(e)).empty()) << e;
}

TEST(Cli, WindowShorterThanTwoKappa) {
  auto c = ExperimentConfig::defaults("scalar-couple");
  c.set("window", "3");
  EXPECT_TRUE(names(validate(c), "window", "kappa"));
}

TEST(Cli, EmptyEpsList) {
  auto c = ExperimentConfig::defaults("wall-law");
  c.set("eps_list", "");
  EXPECT_TRUE(names(validate(c), "eps_list"));
}

TEST(Cli, UnresolvedGridAndLargeFlux) {
  auto c = ExperimentConfig::defaults("wall-law");
  c.set("h", "0.75");
  c.set("phi", "2");
  const auto d = validate(c);
  EXPECT_TRUE(names(d, "h", "bump_half_width"));
  EXPECT_TRUE(names(d, "phi"));
}

TEST(Cli, ParseFractionsCommentsAndUnknownKeys) {
  const auto c = ExperimentConfig::parse("experiment = wall-law\n# comment\neps_list = 1/4, 1/8 ,1/16,1/32\nphi=0.05  # inline\n");
  EXPECT_EQ(c.experiment, "wall-law");
  EXPECT_EQ(c.list("eps_list"), (std::vector<double>{0.25, 0.125, 0.0625, 0.03125}));
  EXPECT_DOUBLE_EQ(c.num("phi"), 0.05);
  EXPECT_THROW(ExperimentConfig::parse("experiment = cell\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("h = 1\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("experiment = cell\n", "green"), ConfigError);
}

TEST(Cli, HashIgnoresWorkers) {
  auto a = ExperimentConfig::defaults("alpha"), b = a;
  b.workers = 4;
  EXPECT_EQ(a.hash(), b.hash());
  b.set("seed", "2");
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Cli, InvalidConfigIsAUsageError) {
  auto c = ExperimentConfig::defaults("wall-law");
  c.set("eps_list", "1/8");
  try {
    run(c, scratch("bad"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("eps_list"), std::string::npos);
  }
}

TEST(Cli, KernelsCheckReportPasses) {
  const auto dir = scratch("kernels");
  const auto m = run(ExperimentConfig::defaults("kernels-check"), dir);
  const auto j = nlohmann::json::parse(slurp(dir / "kernels_check.json"));
  EXPECT_TRUE(j["all_pass"].get<bool>());
  EXPECT_EQ(m.summary.at("failed"), 0);
  const auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(man["files"].size(), m.files.size());
  for (const auto& f : man["files"]) EXPECT_TRUE(fs::exists(dir / f["name"].get<std::string>()));
  std::size_t on_disk = 0;
  for (const auto& e : fs::directory_iterator(dir)) on_disk += e.path().filename() != "manifest.json";
  EXPECT_EQ(on_disk, m.files.size());
  EXPECT_EQ(man["config"]["seed"], "1");
}

TEST(Cli, SameConfigSameBytesAnyWorkerCount) {
  auto c = ExperimentConfig::defaults("scalar-couple");
  c.set("pairs", "3");
  c.set("paths", "200");
  c.set("n_list", "4,8");
  const auto a = scratch("det_a"), b = scratch("det_b");
  c.workers = 1;
  const auto ma = run(c, a);
  c.workers = 3;
  const auto mb = run(c, b);
  ASSERT_EQ(ma.files.size(), mb.files.size());
  for (std::size_t k = 0; k < ma.files.size(); ++k) {
    EXPECT_EQ(ma.files[k].fnv1a, mb.files[k].fnv1a) << ma.files[k].name;
    EXPECT_EQ(slurp(a / ma.files[k].name), slurp(b / mb.files[k].name));
  }
}

TEST(Cli, GeneratedBoundaryReadsBack) {
  auto c = ExperimentConfig::defaults("gen-boundary");
  c.set("period", "16");
  const auto dir = scratch("gen");
  run(c, dir);
  std::ifstream f(dir / "boundary.csv");
  const auto b = boundary::read_csv(f, 16.0);
  EXPECT_EQ(b.size(), 64u);
  EXPECT_LT(b.max(), 0);
}
