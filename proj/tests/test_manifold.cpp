#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "diffmean/error.hpp"
#include "diffmean/manifold.hpp"

using namespace diffmean;

namespace {

constexpr double kPi = std::numbers::pi;

UnitVector random_unit(std::mt19937_64& gen, int m) {
  std::normal_distribution<double> n;
  Vector v(m + 1);
  for (int i = 0; i <= m; ++i) v[i] = n(gen);
  return UnitVector(v);
}

}  // namespace

TEST(UnitVector, NormalizesAndRejectsZero) {
  Vector v(3);
  v << 3.0, 0.0, 4.0;
  EXPECT_NEAR(UnitVector(v).coords().norm(), 1.0, 1e-15);
  EXPECT_THROW(UnitVector(Vector::Zero(3)), DomainError);
  EXPECT_THROW(UnitVector(Vector::Ones(1)), DomainError);
}

TEST(ExpMap, IdentityAntipodeAndQuarterTurn) {
  const UnitVector mu = UnitVector::north_pole(2);
  EXPECT_TRUE(exp_map(TangentVector(mu, Vector::Zero(3))).coords().isApprox(mu.coords()));
  Vector e = Vector::Zero(3);
  e[0] = 1.0;
  const UnitVector anti = exp_map(TangentVector(mu, kPi * e));
  EXPECT_NEAR((anti.coords() + mu.coords()).norm(), 0.0, 1e-12);
  const UnitVector q = exp_map(TangentVector(mu, 0.5 * kPi * e));
  EXPECT_NEAR((q.coords() - e).norm(), 0.0, 1e-12);
}

TEST(ExpMap, RejectsNonTangentVector) {
  const UnitVector mu = UnitVector::north_pole(2);
  EXPECT_THROW(TangentVector(mu, Vector::Ones(3)), DomainError);
}

TEST(LogMap, ZeroAtBaseAndCutLocus) {
  const UnitVector mu = UnitVector::north_pole(3);
  EXPECT_NEAR(log_map(mu, mu).norm(), 0.0, 1e-15);
  EXPECT_THROW(log_map(mu, mu.antipode()), CutLocusError);
}

TEST(LogMap, RoundTripWithExp) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 100; ++i) {
    const UnitVector a = random_unit(gen, 2 + i % 3);
    const UnitVector b = random_unit(gen, 2 + i % 3);
    const TangentVector v = log_map(a, b);
    EXPECT_NEAR(v.norm(), geodesic_distance(a, b), 1e-12);
    EXPECT_NEAR((exp_map(v).coords() - b.coords()).norm(), 0.0, 1e-10);
  }
}

TEST(GeodesicDistance, SpecialCases) {
  const UnitVector mu = UnitVector::north_pole(2);
  EXPECT_DOUBLE_EQ(geodesic_distance(mu, mu), 0.0);
  EXPECT_NEAR(geodesic_distance(mu, mu.antipode()), kPi, 1e-15);
  EXPECT_NEAR(geodesic_distance(mu, UnitVector::basis(2, 0)), kPi / 2, 1e-15);
  // atan2 form stays accurate for tiny angles where acos loses digits
  Vector v = mu.coords();
  v[0] = 1e-9;
  EXPECT_NEAR(geodesic_distance(mu, UnitVector(v)), 1e-9, 1e-20);
}

TEST(YDelta, EndpointsAndInnerProducts) {
  const UnitVector mu = UnitVector::north_pole(2);
  EXPECT_TRUE(y_delta(2, 0.0).coords().isApprox(mu.coords()));
  EXPECT_NEAR((y_delta(2, kPi).coords() + mu.coords()).norm(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(mu[1], 1.0);
  for (int i = 0; i <= 30; ++i) {
    const double d = kPi * i / 30.0;
    EXPECT_NEAR(mu.dot(y_delta(4, d)), std::cos(d), 1e-15);
  }
}

TEST(TangentProject, ZeroIdempotentOrthogonal) {
  const UnitVector mu = UnitVector::north_pole(2);
  EXPECT_NEAR(tangent_project(mu, mu.coords()).norm(), 0.0, 1e-15);
  Vector t = Vector::Zero(3);
  t[2] = 0.7;
  EXPECT_TRUE(tangent_project(mu, t).vec.isApprox(t));
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    const UnitVector b = random_unit(gen, 3);
    Vector w(4);
    for (int k = 0; k < 4; ++k) w[k] = n(gen);
    EXPECT_NEAR(tangent_project(b, w).vec.dot(b.coords()), 0.0, 1e-14);
  }
}
