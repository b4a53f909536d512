#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "diffmean/error.hpp"
#include "diffmean/kernels.hpp"

using namespace diffmean;

namespace {

constexpr double kPi = std::numbers::pi;

// Reference S^2 kernel: first `terms` terms with std::legendre.
double s2_direct(double x, double t, int terms = 50) {
  double sum = 0.0;
  for (int l = 0; l < terms; ++l)
    sum += (2.0 * l + 1.0) * std::legendre(l, x) * std::exp(-0.5 * l * (l + 1.0) * t);
  return sum / (4.0 * kPi);
}

// Reference S^3 kernel via Chebyshev U_l(cos θ) = sin((l+1)θ)/sin θ.
double s3_direct(double x, double t, int terms = 80) {
  const double th = std::acos(x);
  double sum = 0.0;
  for (int l = 0; l < terms; ++l) {
    const double u = std::abs(std::sin(th)) < 1e-12 ? l + 1.0 : std::sin((l + 1.0) * th) / std::sin(th);
    sum += (l + 1.0) * u * std::exp(-0.5 * l * (l + 2.0) * t);
  }
  return sum / (2.0 * kPi * kPi);
}

}  // namespace

TEST(Gegenbauer, ConstantAndUnitArgument) {
  EXPECT_DOUBLE_EQ(gegenbauer(0, 0.5, 0.3), 1.0);
  EXPECT_NEAR(gegenbauer(3, 0.5, 1.0), 1.0, 1e-14);
  // C_n^a(1) = Γ(n+2a) / (n! Γ(2a))
  const double a = 1.5;
  const double expected = std::tgamma(5 + 2 * a) / (std::tgamma(6.0) * std::tgamma(2 * a));
  EXPECT_NEAR(gegenbauer(5, a, 1.0), expected, 1e-12 * expected);
}

TEST(Gegenbauer, HalfParameterIsLegendre) {
  for (int i = 0; i <= 20; ++i) {
    const double x = -1.0 + 0.1 * i;
    EXPECT_NEAR(gegenbauer(4, 0.5, x), std::legendre(4, x), 1e-13);
  }
}

TEST(Gegenbauer, RejectsBadArguments) {
  EXPECT_THROW(gegenbauer(-1, 0.5, 0.0), DomainError);
  EXPECT_THROW(gegenbauer(2, 0.0, 0.0), DomainError);
}

TEST(SphereHeat, LargeTimeIsUniform) {
  const auto spec = KernelSpec::sphere(2, 40.0);
  for (double x : {-1.0, 0.0, 0.7})
    EXPECT_NEAR(sphere_heat(spec, x).value, 1.0 / (4.0 * kPi), 1e-12);
}

TEST(SphereHeat, MatchesDirectLegendreSum) {
  for (double t : {0.5, 1.0, 3.0})
    for (double x : {-1.0, -0.4, 0.0, 0.5, 1.0})
      EXPECT_NEAR(sphere_heat(KernelSpec::sphere(2, t), x).value, s2_direct(x, t), 1e-11) << t << ' ' << x;
}

TEST(SphereHeat, MatchesChebyshevSumOnS3) {
  for (double t : {0.3, 1.0, 2.0})
    for (double x : {-0.9, 0.0, 0.6, 1.0})
      EXPECT_NEAR(sphere_heat(KernelSpec::sphere(3, t), x).value, s3_direct(x, t), 1e-10) << t << ' ' << x;
}

TEST(SphereHeat, FixedTermsUsesExactlyThatMany) {
  const auto spec = KernelSpec::sphere(2, 1.0, FixedTerms{7});
  const auto r = sphere_heat(spec, 0.3);
  EXPECT_EQ(r.terms_used, 7);
  EXPECT_NEAR(r.value, s2_direct(0.3, 1.0, 7), 1e-14);
}

TEST(SphereHeat, SmallTimeStillAccurate) {
  // Cancellation regime: compare against a long direct sum.
  const double t = 0.1;
  for (double x : {0.9, 0.5, -0.5}) {
    const double ref = s2_direct(x, t, 200);
    EXPECT_NEAR(sphere_heat(KernelSpec::sphere(2, t), x).value, ref, 1e-9 * std::max(1.0, std::abs(ref)));
  }
}

TEST(SphereHeat, TailBudgetExhaustionThrows) {
  const auto spec = KernelSpec::sphere(2, 0.01, TailBound{1e-12, 5});
  EXPECT_THROW(sphere_heat(spec, 0.5), TruncationError);
}

TEST(SphereHeat, InvalidSpecRejected) {
  EXPECT_THROW(KernelSpec::sphere(1, 1.0).validate(), DomainError);
  EXPECT_THROW(KernelSpec::sphere(2, -1.0).validate(), DomainError);
  EXPECT_THROW(sphere_heat(KernelSpec::sphere(2, 1.0), 1.5), DomainError);
  EXPECT_THROW(family_from_string("torus"), UnsupportedFamily);
}

TEST(SphereHeat, DerivativeAgreesWithFiniteDifference) {
  const auto spec = KernelSpec::sphere(2, 1.5);
  const double h = 1e-5;
  const double fd = (sphere_heat(spec, h).value - sphere_heat(spec, -h).value) / (2 * h);
  const double an = sphere_heat_deriv(spec, 0.0, 1).value;
  EXPECT_NEAR(an, fd, 1e-6 * std::abs(an));
}

TEST(SphereHeat, DerivativeSigns) {
  EXPECT_GT(sphere_heat_deriv(KernelSpec::sphere(2, 1.0), -1.0, 2).value, 0.0);
  EXPECT_GT(sphere_heat_deriv(KernelSpec::sphere(3, 2.0), 0.5, 1).value, 0.0);
}

TEST(LogHeat, SignsOfLogDerivatives) {
  const auto spec = KernelSpec::sphere(2, 3.0);
  EXPECT_GT(sphere_log_heat(spec, 0.2, 1), 0.0);
  EXPECT_LT(sphere_log_heat(spec, 0.2, 2), 0.0);
  const auto spec22 = KernelSpec::sphere(2, 2.2);
  for (int i = 0; i <= 200; ++i) EXPECT_GE(sphere_log_heat(spec22, -1.0 + 0.01 * i, 3), 0.0);
}

TEST(LogHeat, AgreesWithLogOfValue) {
  const auto spec = KernelSpec::sphere(4, 0.7);
  EXPECT_NEAR(sphere_log_heat(spec, 0.1, 0), std::log(sphere_heat(spec, 0.1).value), 1e-13);
}

TEST(SphereHeatDt, FiniteDifferenceAndSigns) {
  const double h = 1e-5;
  const double fd = (sphere_heat(KernelSpec::sphere(2, 1.0 + h), 0.7).value -
                     sphere_heat(KernelSpec::sphere(2, 1.0 - h), 0.7).value) / (2 * h);
  const double an = sphere_heat_dt(KernelSpec::sphere(2, 1.0), 0.7);
  EXPECT_NEAR(an, fd, 1e-6 * std::abs(an));
  EXPECT_NEAR(sphere_heat_dt(KernelSpec::sphere(2, 40.0), 0.3), 0.0, 1e-12);
  EXPECT_LT(sphere_heat_dt(KernelSpec::sphere(2, 0.8), 1.0), 0.0);
}

TEST(SphereJet, ConsistentWithSeparateCalls) {
  const auto spec = KernelSpec::sphere(3, 1.2);
  const SphereJet j = sphere_jet(spec, -0.3, 3, true);
  EXPECT_NEAR(j.h[0], sphere_heat(spec, -0.3).value, 1e-15);
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(j.h[k], sphere_heat_deriv(spec, -0.3, k).value, 1e-13);
  EXPECT_NEAR(j.h_dt, sphere_heat_dt(spec, -0.3), 1e-14);
  EXPECT_EQ(j.precision_digits, 15);
}

TEST(CircleHeat, DiagonalValueAndPeriodicity) {
  const double v = circle_heat(0.4, 0.4, 0.25);
  double ref = 0.0;
  for (int k = -10; k <= 10; ++k) ref += std::exp(-std::pow(2 * kPi * k, 2) / (4 * 0.25));
  ref /= std::sqrt(4 * kPi * 0.25);
  EXPECT_NEAR(v, ref, 1e-14);
  EXPECT_NEAR(v, 1.0 / std::sqrt(kPi), 1e-10);
  EXPECT_NEAR(circle_heat(0.3 + 2 * kPi, 1.9, 0.7), circle_heat(0.3, 1.9, 0.7), 1e-14);
}

TEST(CircleHeat, MatchesFourierSeries) {
  // Poisson summation: (1/2π) Σ e^{-n² t} cos(n d).
  for (double t : {0.1, 0.5, 2.0})
    for (double d : {0.0, 1.0, 3.0}) {
      double ref = 0.5;
      for (int n = 1; n < 200; ++n) ref += std::exp(-n * n * t) * std::cos(n * d);
      ref /= kPi;
      EXPECT_NEAR(circle_heat(0.0, d, t), ref, 1e-13);
    }
}

TEST(CircleJet, DerivativesMatchFiniteDifference) {
  const double h = 1e-6;
  const CircleJet j = circle_jet(1.1, 0.6);
  EXPECT_NEAR(j.d_dist, (circle_jet(1.1 + h, 0.6).value - circle_jet(1.1 - h, 0.6).value) / (2 * h), 1e-8);
  EXPECT_NEAR(j.d_t, (circle_jet(1.1, 0.6 + h).value - circle_jet(1.1, 0.6 - h).value) / (2 * h), 1e-8);
}

TEST(EuclideanHeat, PrintedFormula) {
  const std::vector<double> x{0.2, -1.0}, y{0.2, 1.0};
  EXPECT_NEAR(euclidean_heat(x, y, 1.0), std::exp(-1.0) / (4 * kPi), 1e-15);
  const std::vector<double> a{3.0};
  EXPECT_NEAR(euclidean_heat(a, a, 1.0 / (4 * kPi)), 1.0, 1e-14);
  EXPECT_NEAR(euclidean_log_heat(4.0, 2, 1.0), std::log(std::exp(-1.0) / (4 * kPi)), 1e-14);
  EXPECT_THROW(euclidean_heat(x, a, 1.0), DomainError);
}

TEST(Hyperbolic3, LimitMonotoneAndSmallTime) {
  const double p0 = hyperbolic3_heat(0.0, 1.0);
  EXPECT_TRUE(std::isfinite(p0));
  EXPECT_GT(p0, 0.0);
  double prev = p0;
  for (double r : {0.5, 1.0, 2.0}) {
    const double p = hyperbolic3_heat(r, 1.0);
    EXPECT_LT(p, prev);
    prev = p;
  }
  // -4t ln p - ρ² -> 0 uniformly on [0, 2] (4t convention)
  double worst_prev = INFINITY;
  for (double t : {0.1, 0.03, 0.01}) {
    double worst = 0.0;
    for (int i = 0; i <= 20; ++i) {
      const double r = 0.1 * i;
      worst = std::max(worst, std::abs(-4 * t * std::log(hyperbolic3_heat(r, t)) - r * r));
    }
    EXPECT_LT(worst, worst_prev);
    worst_prev = worst;
  }
  EXPECT_LT(worst_prev, 0.15);
}
