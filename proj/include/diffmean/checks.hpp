#pragma once

#include <string>

#include "diffmean/kernels.hpp"
#include "diffmean/sampling.hpp"

namespace diffmean {

struct CheckResult {
  std::string name;
  double value = 0.0;      // the quadrature value or worst ratio being checked
  double error = 0.0;      // the quantity compared against tolerance
  double tolerance = 0.0;
  bool passed = false;
};

inline constexpr double kSphereNormalizationTol = 1e-6;
inline constexpr double kCircleNormalizationTol = 1e-8;
inline constexpr double kSemigroupTol = 1e-4;
inline constexpr double kDerivativeTol = 1e-5;

// |∫ p(x, y, t) dy - 1|. S^2: 64x128 product rule at a generic base point;
// S^m, m >= 3: polar Gauss-Legendre; circle: 4096-node trapezoid; Euclidean
// and Hyperbolic3: radial Gauss-Legendre.
CheckResult check_normalization(const KernelSpec& spec);

// max over a set of (x, y) pairs of |∫ p(x,z,s) p(z,y,t) dz - p(x,y,s+t)| / p(x,y,s+t) on S^2.
CheckResult check_semigroup(double s, double t, const TruncationPolicy& policy = TailBound{});

// Worst relative mismatch between analytic x-derivatives (orders 1..3), the
// t-derivative, and central finite differences on `grid` points of
// [-0.95, 0.95]. Near sign changes the denominator is floored at 1e-3 of the
// largest magnitude on the grid.
CheckResult check_kernel_derivatives(int m, double t, int grid = 20, const TruncationPolicy& policy = TailBound{});

// Directional finite differences of sample_log_likelihood against
// riemannian_gradient (and of dL/dt) on `configs` random configurations.
CheckResult check_likelihood_gradient(int m, double t, int configs, RandomSeed seed);

}  // namespace diffmean
