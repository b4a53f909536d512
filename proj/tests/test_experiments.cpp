#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "diffmean/analysis.hpp"
#include "diffmean/error.hpp"
#include "diffmean/experiments.hpp"
#include "diffmean/serialize.hpp"

using namespace diffmean;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("diffmean_test_" + name);
}

OptimizerConfig quick_config() {
  OptimizerConfig cfg;
  cfg.restarts = 0;
  return cfg;
}

const DistributionSpec kBimodal{BimodalBrownianNormal{}, 2};

}  // namespace

TEST(EstimatorTag, LabelsRoundTrip) {
  for (const auto& tag : {EstimatorTag::frechet(), EstimatorTag::diffusion(0.4), EstimatorTag::joint()})
    EXPECT_EQ(EstimatorTag::parse(tag.label()), tag);
  EXPECT_EQ(EstimatorTag::diffusion(4).label(), "diffusion-t4");
  EXPECT_THROW(EstimatorTag::parse("median"), ParseError);
}

TEST(Slope, OlsOnExactPowerLaw) {
  const std::vector<int> n{10, 100, 1000};
  EXPECT_NEAR(fit_loglog_slope(n, {1.0, std::pow(10.0, 0.5), 10.0}), 0.5, 1e-12);
}

TEST(Bootstrap, EuclideanGaussianHasFlatSlope) {
  const auto tables = bootstrap_scaling(EuclideanGaussian{2, 1.0}, {EstimatorTag::frechet(), EstimatorTag::diffusion(1.0)},
                                        {30, 100, 300, 1000}, 60, quick_config(), RandomSeed{3});
  for (const auto& t : tables) {
    EXPECT_GT(t.fitted_slope, -0.15) << t.tag.label();
    EXPECT_LT(t.fitted_slope, 0.15) << t.tag.label();
    for (double v : t.scaled_variance) EXPECT_GE(v, 0.0);
  }
}

TEST(Bootstrap, DeterministicAndThreadIndependent) {
  BootstrapOptions one, three;
  one.threads = 1;
  three.threads = 3;
  const std::vector<int> grid{30, 60};
  const auto a = bootstrap_scaling(kBimodal, EstimatorTag::frechet(), grid, 20, quick_config(), RandomSeed{5}, one);
  const auto b = bootstrap_scaling(kBimodal, EstimatorTag::frechet(), grid, 20, quick_config(), RandomSeed{5}, three);
  const auto c = bootstrap_scaling(kBimodal, EstimatorTag::frechet(), grid, 20, quick_config(), RandomSeed{5}, one);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  const auto d = bootstrap_scaling(kBimodal, EstimatorTag::frechet(), grid, 20, quick_config(), RandomSeed{6}, one);
  EXPECT_NE(a.scaled_variance, d.scaled_variance);
}

TEST(Bootstrap, EmpiricalSourceResamples) {
  const auto data = draw(DistributionSpec{BrownianNormal{std::nullopt, 0.3}, 2}, 80, RandomSeed{1});
  const auto t = bootstrap_scaling(data, EstimatorTag::diffusion(1.0), {20, 40}, 20, quick_config(), RandomSeed{2});
  EXPECT_EQ(t.n_grid, (std::vector<int>{20, 40}));
  EXPECT_GT(t.scaled_variance[0], 0.0);
}

TEST(Bootstrap, PreconditionsEnforced) {
  EXPECT_THROW(bootstrap_scaling(kBimodal, EstimatorTag::frechet(), {30, 60}, 10, quick_config(), RandomSeed{0}),
               DomainError);
  EXPECT_THROW(bootstrap_scaling(kBimodal, EstimatorTag::frechet(), {60, 30}, 20, quick_config(), RandomSeed{0}),
               DomainError);
}

TEST(Bootstrap, NonconvergenceAborts) {
  OptimizerConfig cfg = quick_config();
  cfg.max_iters = 1;
  cfg.grad_tol = 1e-300;
  EXPECT_THROW(bootstrap_scaling(kBimodal, EstimatorTag::diffusion(1.0), {30, 60}, 20, cfg, RandomSeed{0}),
               NumericalError);
}

TEST(Export, JsonRoundTripAndCsvRefit) {
  const auto t = bootstrap_scaling(kBimodal, EstimatorTag::diffusion(2.0), {30, 60, 120}, 20, quick_config(), RandomSeed{7});
  const auto json_path = temp_path("table.json");
  const auto csv_path = temp_path("table.csv");
  export_table(t, json_path, ExportFormat::JSON);
  export_table(t, csv_path, ExportFormat::CSV);
  EXPECT_EQ(import_scaling_table_json(json_path), t);
  std::ifstream in(csv_path);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_NEAR(import_scaling_table_csv(csv_path).fitted_slope, t.fitted_slope, 1e-12);
  EXPECT_NEAR(fit_loglog_slope(t.n_grid, t.scaled_variance), t.fitted_slope, 1e-12);
  std::filesystem::remove(json_path);
  std::filesystem::remove(csv_path);
  EXPECT_THROW(export_table(t, "/nonexistent/dir/x.csv", ExportFormat::CSV), IoError);
}

TEST(Export, ArtifactName) {
  EXPECT_EQ(artifact_name("fig1b", "frechet", RandomSeed{0}, ExportFormat::CSV), "fig1b_frechet_0.csv");
  EXPECT_EQ(artifact_name("fig5", "diffusion-t1", RandomSeed{12}, ExportFormat::JSON), "fig5_diffusion-t1_12.json");
}

TEST(TTrace, TwoPolePopulationConverges) {
  const UnitVector mu = UnitVector::north_pole(2);
  for (double s : {0.8, 1.2}) {
    const DistributionSpec d{TwoPole{lambda_bound(2, s)}, 2};
    const auto tr = t_trace(d, mu, 2.5, OptimizerConfig{}, 0, RandomSeed{0});
    EXPECT_NEAR(tr.final_t, s, 0.05);
    EXPECT_EQ(tr.t.back(), tr.final_t);
    EXPECT_DOUBLE_EQ(tr.t.front(), 2.5);
    const auto direct = estimate_t(population_sample(d), mu, KernelSpec::sphere(2, 2.5), OptimizerConfig{}, 2.5);
    EXPECT_EQ(*direct.t, tr.final_t);
  }
}

TEST(TTrace, BrownianSampleNearVariance) {
  const DistributionSpec d{BrownianNormal{std::nullopt, 1.5}, 2};
  const auto tr = t_trace(d, UnitVector::north_pole(2), 2.5, OptimizerConfig{}, 5000, RandomSeed{0});
  EXPECT_NEAR(tr.final_t, 1.5, 0.2);
}
