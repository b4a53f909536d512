#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "diffmean/analysis.hpp"
#include "diffmean/checks.hpp"
#include "diffmean/cli.hpp"
#include "diffmean/serialize.hpp"

using namespace diffmean;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "diffmean");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("diffmean_cli_" + name);
}

}  // namespace

TEST(Checks, NormalizationAcrossFamilies) {
  for (double t : {0.5, 1.0, 2.0}) EXPECT_TRUE(check_normalization(KernelSpec::sphere(2, t)).passed);
  EXPECT_TRUE(check_normalization(KernelSpec::sphere(3, 1.0)).passed);
  EXPECT_TRUE(check_normalization(KernelSpec::circle(0.5)).passed);
  EXPECT_LT(check_normalization(KernelSpec::circle(0.5)).error, 1e-8);
  EXPECT_TRUE(check_normalization(KernelSpec::euclidean(3, 0.7)).passed);
  EXPECT_TRUE(check_normalization(KernelSpec::hyperbolic3(0.5)).passed);
}

TEST(Checks, SemigroupDerivativesGradient) {
  EXPECT_TRUE(check_semigroup(0.5, 0.5).passed);
  EXPECT_TRUE(check_kernel_derivatives(2, 1.0).passed);
  EXPECT_TRUE(check_likelihood_gradient(2, 1.0, 5, RandomSeed{1}).passed);
}

TEST(Cli, BoundsMatchLibraryBitExactly) {
  const CliRun r = cli({"bounds", "--lambda", "--dim", "2", "--t", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["result"]["lambda"].get<double>(), lambda_bound(2, 3.0));
  EXPECT_EQ(j["config"]["t"].get<double>(), 3.0);
}

TEST(Cli, CheckNormalizationSucceeds) {
  const CliRun r = cli({"check", "--normalization", "--dim", "2", "--t", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_LT(j["result"]["checks"][0]["error"].get<double>(), 1e-6);
}

TEST(Cli, MeanFromFileEmitsReport) {
  const auto path = temp_path("pts.csv");
  std::ofstream(path) << "lat,lon\n80,0\n85,40\n75,-30\n";
  const CliRun r = cli({"mean", "--kernel", "sphere", "--dim", "2", "--t", "3", "--input", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j["result"]["converged"].get<bool>());
  EXPECT_EQ(j["result"]["point"].size(), 3u);
  EXPECT_EQ(j["config"]["optimizer"]["restarts"].get<int>(), 5);
  std::filesystem::remove(path);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({"mean", "--no-such-flag"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"mean", "--kernel", "sphere"}).code, 2);
  EXPECT_EQ(cli({"bounds"}).code, 2);
}

TEST(Cli, NumericalFailureExitsOneWithDiagnostic) {
  const CliRun r = cli({"kernel", "--t", "0.01", "--max-terms", "3", "--x", "0.2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("truncation-not-converged"), std::string::npos) << r.err;
}

TEST(Cli, SeedDeterminesOutput) {
  const auto a = cli({"sample", "--dist", "bimodal", "--n", "5", "--seed", "3"});
  const auto b = cli({"sample", "--dist", "bimodal", "--n", "5", "--seed", "3"});
  const auto c = cli({"sample", "--dist", "bimodal", "--n", "5", "--seed", "4"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
}

TEST(Cli, ProfileCsvWithSidecar) {
  const auto path = temp_path("profile.csv");
  const CliRun r = cli({"profile", "--alpha", "0.2", "--t", "3", "--grid", "11", "--out", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 12);
  std::ifstream side(path.string() + ".config.json");
  const Json cfg = Json::parse(side);
  EXPECT_EQ(cfg["config"]["grid"].get<int>(), 11);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".config.json");
}

TEST(Cli, ConfigFileSuppliesOptions) {
  const auto path = temp_path("run.toml");
  std::ofstream(path) << "[bounds]\nlambda = true\nt = 5.0\n";
  const CliRun r = cli({"--config", path.string(), "bounds"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out)["result"]["lambda"].get<double>(), lambda_bound(2, 5.0));
  std::filesystem::remove(path);
}

TEST(Cli, GraphEndpointCase) {
  const auto path = temp_path("p3.txt");
  std::ofstream(path) << "0 1\n1 2\n";
  const CliRun r = cli({"graph", "--edges", path.string(), "--probs", "0.5,0,0.5", "--t", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out)["result"]["means"], Json::array({1}));
  std::filesystem::remove(path);
}
