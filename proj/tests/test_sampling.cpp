#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "diffmean/error.hpp"
#include "diffmean/kernels.hpp"
#include "diffmean/sampling.hpp"

using namespace diffmean;

namespace {

constexpr double kPi = std::numbers::pi;

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("diffmean_test_" + name);
}

}  // namespace

TEST(RandomSeed, SplitIsDeterministicAndDistinct) {
  const RandomSeed s{42};
  EXPECT_EQ(s.split(3), s.split(3));
  EXPECT_FALSE(s.split(3) == s.split(4));
  EXPECT_FALSE(s.split(0) == s);
}

TEST(BrownianSample, DegenerateTimeStaysAtCenter) {
  const UnitVector mu = UnitVector::north_pole(2);
  const UnitVector p = brownian_sample(mu, 1e-12, 1, RandomSeed{1});
  EXPECT_LT(geodesic_distance(p, mu), 1e-5);
}

TEST(BrownianSample, MeanDirectionAlignsWithCenter) {
  const UnitVector mu = UnitVector::north_pole(2);
  Rng rng(RandomSeed{5});
  Vector acc = Vector::Zero(3);
  for (int i = 0; i < 10000; ++i) acc += brownian_sample(mu, 0.5, 50, rng).coords();
  EXPECT_GT(acc.dot(mu.coords()), 0.0);
}

TEST(BrownianSample, RadialHistogramMatchesKernel) {
  // Smaller version of the acceptance chi-square: 2e4 endpoints.
  const double t = 0.5;
  const int n = 20000, bins = 20;
  const UnitVector mu = UnitVector::north_pole(2);
  Rng rng(RandomSeed{11});
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < n; ++i) {
    const double d = geodesic_distance(mu, brownian_sample(mu, t, 200, rng));
    counts[std::min(bins - 1, static_cast<int>(d / kPi * bins))]++;
  }
  const auto spec = KernelSpec::sphere(2, t);
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double lo = kPi * b / bins, hi = kPi * (b + 1) / bins;
    double p = 0.0;
    const int k = 64;
    for (int j = 0; j < k; ++j) {
      const double th = lo + (hi - lo) * (j + 0.5) / k;
      p += 2 * kPi * std::sin(th) * sphere_heat(spec, std::cos(th)).value * (hi - lo) / k;
    }
    const double e = p * n;
    chi2 += (counts[b] - e) * (counts[b] - e) / e;
  }
  const boost::math::chi_squared dist(bins - 1);
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.99));
}

TEST(Draw, TwoPoleDegenerateAndBalanced) {
  const DistributionSpec zero{TwoPole{0.0}, 2};
  const auto z = draw(zero, 50, RandomSeed{0});
  for (const auto& p : z.points()) EXPECT_DOUBLE_EQ(p[1], 1.0);
  const DistributionSpec half{TwoPole{0.5}, 2};
  const auto s = draw(half, 10000, RandomSeed{2});
  int south = 0;
  for (const auto& p : s.points()) south += p[1] < 0;
  EXPECT_NEAR(south, 5000, 3 * std::sqrt(10000 * 0.25));
}

TEST(Draw, HemispherePartHasNonpositiveSecondCoordinate) {
  const DistributionSpec d{HemispherePointMass{0.6}, 2};
  int on_hemisphere = 0;
  const auto s = draw(d, 2000, RandomSeed{3});
  for (const auto& p : s.points()) {
    if (std::abs(p[1] - 1.0) < 1e-15) continue;
    EXPECT_LE(p[1], 0.0);
    ++on_hemisphere;
  }
  EXPECT_GT(on_hemisphere, 1000);
}

TEST(Draw, DeterministicForSeed) {
  const DistributionSpec d{BimodalBrownianNormal{}, 2};
  const auto a = draw(d, 20, RandomSeed{9});
  const auto b = draw(d, 20, RandomSeed{9});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.points()[i].coords(), b.points()[i].coords());
}

TEST(Draw, ValidationErrors) {
  EXPECT_THROW((DistributionSpec{TwoPole{0.7}, 2}.validate()), DomainError);
  EXPECT_THROW((DistributionSpec{BrownianNormal{std::nullopt, -1.0}, 2}.validate()), DomainError);
  EXPECT_THROW(draw(DistributionSpec{TwoPole{0.1}, 2}, 0, RandomSeed{0}), DomainError);
}

TEST(EmpiricalSample, Invariants) {
  const UnitVector mu = UnitVector::north_pole(2);
  EXPECT_THROW(EmpiricalSample({}), DomainError);
  EXPECT_THROW(EmpiricalSample({mu, UnitVector::north_pole(3)}), DomainError);
  EXPECT_THROW(EmpiricalSample({mu, mu}, std::vector<double>{0.5, 0.4}), DomainError);
  EXPECT_NO_THROW(EmpiricalSample({mu, mu}, std::vector<double>{0.5, 0.5}));
}

TEST(LatLon, PoleAndEquator) {
  std::istringstream in("lat,lon\n90,0\n0,0\n");
  const auto s = read_latlon_csv(in);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s.points()[0][2], 1.0, 1e-15);
  EXPECT_NEAR(s.points()[1][0], 1.0, 1e-15);
  EXPECT_FALSE(s.provenance().has_value());
}

TEST(LatLon, ErrorsCarryLineNumbers) {
  std::istringstream bad("10,20\n95,0\n");
  try {
    read_latlon_csv(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  std::istringstream junk("10,20\nabc,1\n");
  EXPECT_THROW(read_latlon_csv(junk), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(read_latlon_csv(empty), ParseError);
  EXPECT_THROW(ingest_latlon_csv("/nonexistent/file.csv"), IoError);
}

TEST(LatLon, ExportImportRoundTrip) {
  const auto s = draw(DistributionSpec{BrownianNormal{std::nullopt, 1.0}, 2}, 50, RandomSeed{4});
  const auto path = temp_file("roundtrip.csv");
  export_latlon_csv(path, s);
  const auto back = ingest_latlon_csv(path);
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    EXPECT_LT((back.points()[i].coords() - s.points()[i].coords()).norm(), 1e-9);
  std::filesystem::remove(path);
}

TEST(VectorsCsv, ReadsRowsOfEqualWidth) {
  std::istringstream in("x,y,z\n1,0,0\n0,2,0\n");
  const auto rows = read_vectors_csv(in);
  ASSERT_EQ(rows.size(), 2u);
  const auto s = to_sphere_sample(rows);
  EXPECT_NEAR(s.points()[1][1], 1.0, 1e-15);
  std::istringstream ragged("1,0,0\n0,1\n");
  EXPECT_THROW(read_vectors_csv(ragged), ParseError);
}
