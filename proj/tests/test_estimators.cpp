#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "diffmean/analysis.hpp"
#include "diffmean/error.hpp"
#include "diffmean/estimators.hpp"

using namespace diffmean;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix3d rotation(double a, double b) {
  Eigen::Matrix3d rz, rx;
  rz << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  rx << 1, 0, 0, 0, std::cos(b), -std::sin(b), 0, std::sin(b), std::cos(b);
  return rz * rx;
}

EmpiricalSample population_two_pole(double alpha, int m = 2) {
  return population_sample(DistributionSpec{TwoPole{alpha}, m});
}

}  // namespace

TEST(Likelihood, SinglePointEqualsNegativeLogKernel) {
  const UnitVector mu = UnitVector::north_pole(2);
  const auto spec = KernelSpec::sphere(2, 1.0);
  EXPECT_NEAR(sample_log_likelihood(EmpiricalSample({mu}), mu, spec), -sphere_log_heat(spec, 1.0, 0), 1e-14);
}

TEST(Likelihood, EuclideanClosedForm) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  std::vector<Vector> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(Vector::NullaryExpr(3, [&] { return n(gen); }));
  const EuclideanSample s(pts);
  const Vector y = Vector::Constant(3, 0.3);
  for (double t : {0.1, 1.0, 10.0}) {
    double msq = 0.0;
    for (const auto& p : pts) msq += (p - y).squaredNorm() / 10.0;
    EXPECT_NEAR(sample_log_likelihood(s, y, KernelSpec::euclidean(3, t)), 1.5 * std::log(4 * kPi * t) + msq / (4 * t),
                1e-12);
  }
}

TEST(Likelihood, RotationInvariant) {
  const auto s = draw(DistributionSpec{BrownianNormal{std::nullopt, 0.7}, 2}, 30, RandomSeed{2});
  const Eigen::Matrix3d r = rotation(0.4, 1.1);
  std::vector<UnitVector> rotated;
  for (const auto& p : s.points()) rotated.emplace_back(r * p.coords());
  const UnitVector y(Vector(Eigen::Vector3d(0.2, 0.9, -0.3)));
  const auto spec = KernelSpec::sphere(2, 0.8);
  EXPECT_NEAR(sample_log_likelihood(s, y, spec),
              sample_log_likelihood(EmpiricalSample(rotated), UnitVector(r * y.coords()), spec), 1e-12);
}

TEST(Gradient, VanishesAtAtomAndTwoPole) {
  const UnitVector mu = UnitVector::north_pole(2);
  const auto spec = KernelSpec::sphere(2, 1.0);
  EXPECT_LT(riemannian_gradient(EmpiricalSample({mu}), mu, spec).norm(), 1e-14);
  EXPECT_LT(riemannian_gradient(population_two_pole(0.3), mu, spec).norm(), 1e-14);
}

TEST(Gradient, DirectionalFiniteDifferences) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n;
  for (int c = 0; c < 20; ++c) {
    const auto s = draw(DistributionSpec{BrownianNormal{std::nullopt, 1.0}, 2}, 8, RandomSeed{100u + c});
    const UnitVector y(Vector(Eigen::Vector3d(n(gen), n(gen), n(gen))));
    const auto spec = KernelSpec::sphere(2, 0.5 + 0.1 * c);
    const TangentVector g = riemannian_gradient(s, y, spec);
    const TangentVector v = tangent_project(y, Vector(Eigen::Vector3d(n(gen), n(gen), n(gen))));
    const double h = 1e-5;
    const double fd = (sample_log_likelihood(s, exp_map(TangentVector(y, h * v.vec)), spec) -
                       sample_log_likelihood(s, exp_map(TangentVector(y, -h * v.vec)), spec)) / (2 * h);
    EXPECT_NEAR(g.vec.dot(v.vec), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(LikelihoodDt, FiniteDifferences) {
  for (int c = 0; c < 20; ++c) {
    const auto s = draw(DistributionSpec{BrownianNormal{std::nullopt, 0.5}, 2}, 6, RandomSeed{200u + c});
    const UnitVector y = UnitVector::north_pole(2);
    const double t = 0.4 + 0.15 * c, h = 1e-5;
    const double fd = (sample_log_likelihood(s, y, KernelSpec::sphere(2, t + h)) -
                       sample_log_likelihood(s, y, KernelSpec::sphere(2, t - h))) / (2 * h);
    EXPECT_NEAR(likelihood_dt(s, y, KernelSpec::sphere(2, t)), fd, 1e-5 * std::max(1e-3, std::abs(fd)));
  }
}

TEST(DiffusionMean, EuclideanEqualsAverage) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<Vector> pts;
    for (int i = 0; i < 25; ++i) pts.push_back(Vector::NullaryExpr(2, [&] { return 3.0 * n(gen); }));
    const EuclideanSample s(pts);
    for (double t : {0.1, 1.0, 10.0}) {
      const auto r = estimate_diffusion_mean(s, KernelSpec::euclidean(2, t));
      EXPECT_LT((r.point - s.mean()).norm(), 1e-10);
    }
  }
}

TEST(DiffusionMean, TwoPoleBelowThresholdConvergesToHeavyPole) {
  const double alpha = lambda_bound(2, 3.0) - 0.05;
  const auto pop = population_two_pole(alpha);
  OptimizerConfig cfg;
  cfg.restarts = 0;
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 20; ++i) {
    const UnitVector start(Vector(Eigen::Vector3d(n(gen), n(gen), n(gen))));
    const auto r = estimate_diffusion_mean(pop, KernelSpec::sphere(2, 3.0), cfg, start);
    EXPECT_TRUE(r.converged);
    EXPECT_LT(geodesic_distance(r.unit_point(), UnitVector::north_pole(2)), 1e-4);
  }
}

TEST(DiffusionMean, BalancedTwoPoleLandsOnEquator) {
  const auto r = estimate_diffusion_mean(population_two_pole(0.5), KernelSpec::sphere(2, 3.0));
  EXPECT_LT(std::abs(r.point[1]), 1e-4);
  EXPECT_TRUE(r.non_unique);
}

TEST(DiffusionMean, CircleFamily) {
  std::vector<UnitVector> pts;
  for (double a : {0.1, 0.3, -0.2}) pts.emplace_back(Vector(Eigen::Vector2d(std::cos(a), std::sin(a))));
  const auto r = estimate_diffusion_mean(EmpiricalSample(pts), KernelSpec::circle(0.05));
  EXPECT_NEAR(std::atan2(r.point[1], r.point[0]), 0.2 / 3.0, 5e-3);
}

TEST(DiffusionMean, ConfigValidation) {
  OptimizerConfig cfg;
  cfg.max_iters = 0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = {};
  cfg.t_min = 2.0;
  cfg.t_max = 1.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  EXPECT_THROW(estimate_diffusion_mean(population_two_pole(0.1), KernelSpec::sphere(3, 1.0)), DomainError);
}

TEST(FrechetMean, SinglePointAndMidpoint) {
  const UnitVector a(Vector(Eigen::Vector3d(1, 0.2, 0)));
  EXPECT_LT(geodesic_distance(estimate_frechet_mean(EmpiricalSample({a})).unit_point(), a), 1e-8);
  const UnitVector b(Vector(Eigen::Vector3d(0, 1, 1)));
  const UnitVector mid = exp_map(TangentVector(a, 0.5 * log_map(a, b).vec));
  EXPECT_LT(geodesic_distance(estimate_frechet_mean(EmpiricalSample({a, b})).unit_point(), mid), 1e-6);
}

TEST(FrechetMean, BimodalSampleNearHeavyPole) {
  const UnitVector mu = UnitVector::north_pole(2);
  const auto wide = draw(DistributionSpec{BimodalBrownianNormal{0.3, 0.2}, 2}, 2000, RandomSeed{0});
  EXPECT_LT(geodesic_distance(estimate_frechet_mean(wide).unit_point(), mu), 0.2);
  // With walk time 0.09 the southern mode is tight enough that μ stops being
  // the Fréchet mean: the minimizer moves onto a ring around μ.
  const auto tight = draw(DistributionSpec{BimodalBrownianNormal{0.09, 0.2}, 2}, 2000, RandomSeed{0});
  const auto r = estimate_frechet_mean(tight);
  EXPECT_GT(geodesic_distance(r.unit_point(), mu), 0.3);
  EXPECT_LT(r.objective, frechet_objective(tight, mu));
}

TEST(EstimateT, TwoPolePopulationRecoversTime) {
  OptimizerConfig cfg;
  const UnitVector mu = UnitVector::north_pole(2);
  const auto r = estimate_t(population_two_pole(lambda_bound(2, 1.0)), mu, KernelSpec::sphere(2, 1.0), cfg, 2.0);
  ASSERT_TRUE(r.t);
  EXPECT_NEAR(*r.t, 1.0, 0.05);
}

TEST(EstimateT, BrownianSampleNearVariance) {
  const auto s = draw(DistributionSpec{BrownianNormal{std::nullopt, 1.0}, 2}, 5000, RandomSeed{1});
  const auto r = estimate_t(s, UnitVector::north_pole(2), KernelSpec::sphere(2, 1.0), {}, 2.0);
  EXPECT_NEAR(*r.t, 1.0, 0.15);
}

TEST(EstimateT, PointMassHitsFloor) {
  const UnitVector mu = UnitVector::north_pole(2);
  const auto r = estimate_t(EmpiricalSample({mu}), mu, KernelSpec::sphere(2, 1.0), {}, 1.0);
  EXPECT_TRUE(r.boundary_hit);
  EXPECT_NEAR(*r.t, OptimizerConfig{}.t_min, 1e-12);
}

TEST(EstimateT, EuclideanClosedForm) {
  // argmin_t (m/2) ln t + msq/(4t) = msq / (2m)
  std::vector<Vector> pts{Vector::Constant(2, 1.0), Vector::Constant(2, -1.0)};
  const EuclideanSample s(pts);
  const auto r = estimate_t(s, Vector::Zero(2), KernelSpec::euclidean(2, 1.0), {}, 3.0);
  EXPECT_NEAR(*r.t, 2.0 / 4.0, 1e-6);
}

TEST(EstimateJoint, BrownianSample) {
  Vector c(3);
  c << 0.3, 0.8, 0.5;
  const UnitVector center(c);
  const auto s = draw(DistributionSpec{BrownianNormal{center, 0.5}, 2}, 5000, RandomSeed{2});
  OptimizerConfig cfg;
  cfg.restarts = 1;
  const auto r = estimate_joint(s, KernelSpec::sphere(2, 1.0), cfg);
  EXPECT_LT(geodesic_distance(r.unit_point(), center), 0.1);
  EXPECT_GE(*r.t, 0.3);
  EXPECT_LE(*r.t, 0.8);
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    EXPECT_LE(r.trace[i].objective, r.trace[i - 1].objective + 1e-12);
}

TEST(EstimateJoint, DegenerateSampleHitsFloor) {
  const UnitVector mu = UnitVector::north_pole(2);
  const auto r = estimate_joint(EmpiricalSample({mu, mu}), KernelSpec::sphere(2, 1.0), {});
  EXPECT_TRUE(r.boundary_hit);
}
