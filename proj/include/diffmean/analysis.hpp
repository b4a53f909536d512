#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "diffmean/estimators.hpp"
#include "diffmean/kernels.hpp"
#include "diffmean/sampling.hpp"

namespace diffmean {

// Piecewise time threshold above which ℓ_{t,m} is concave:
//   m = 2, 3: (2/(m+1)) ln((m+1) + 4(m+3));  m >= 4: ln(32(m+3) / (9(m+1))).
double delta_bound(int m);

// Λ_m(t) = h(-1)h'(1) / (h'(-1)h(1) + h(-1)h'(1)).
double lambda_bound(int m, double t, const TruncationPolicy& policy = TailBound{});

// Σ(t) = 2h'(1)h(0) / (h'(0)h(1) + 2h'(1)h(0)) on S^2.
double sigma_bound(double t, const TruncationPolicy& policy = TailBound{});

// Population likelihood at y_δ as a function of δ, sampled on a grid and
// re-evaluable anywhere in [0, π].
struct LikelihoodProfile {
  std::vector<double> delta_grid;
  std::vector<double> values;
  KernelSpec spec;
  DistributionSpec distribution;
  std::function<double(double)> evaluate;
};

// Uniform grid of n points on [lo, hi].
std::vector<double> uniform_grid(double lo, double hi, int n);

LikelihoodProfile two_pole_profile(int m, double t, double alpha, const std::vector<double>& grid,
                                   const TruncationPolicy& policy = TailBound{});

inline constexpr int kDefaultCrescentNodes = 48;
inline constexpr int kMaxCrescentNodes = 2048;

// C_+(δ) - C_-(δ) by tensor Gauss-Legendre with `nodes` points per axis.
double crescent_difference(double t, double delta, int nodes = kDefaultCrescentNodes,
                           const TruncationPolicy& policy = TailBound{});
// d/dδ (C_+ - C_-) from the single-integral form; exactly 0 at δ = 0.
double crescent_difference_derivative(double t, double delta, int nodes = kDefaultCrescentNodes,
                                      const TruncationPolicy& policy = TailBound{});

// Hemisphere-plus-atom mixture on S^2 through the crescent decomposition.
LikelihoodProfile hemisphere_profile(double t, double alpha, const std::vector<double>& grid,
                                     int quadrature_nodes = kDefaultCrescentNodes,
                                     const TruncationPolicy& policy = TailBound{});

enum class SmearinessClaim { NonSmeary, AtLeastTwoSmeary, Inconclusive };
const char* to_string(SmearinessClaim claim);

struct SmearinessReport {
  double second_derivative_at_zero = 0.0;
  double tolerance = 0.0;
  SmearinessClaim order_claim = SmearinessClaim::Inconclusive;
  double critical_alpha = 0.0;  // Λ_m(t) or Σ(t) for the profile's family
};

inline constexpr double kRichardsonStep = 1e-2;
inline constexpr int kRichardsonLevels = 3;
inline constexpr double kSmearinessRelTol = 1e-6;

// Throws DomainError if the profile's grid minimum is not at δ = 0.
SmearinessReport classify_smeariness(const LikelihoodProfile& profile);

// max over the grid of |-2t ℓ_{t,m}(cos δ) - δ²|; grid inside [0, 0.9π].
double small_t_gap(int m, double t, const std::vector<double>& delta_grid,
                   const TruncationPolicy& policy = TailBound{});

struct FrechetLimitPoint {
  double t = 0.0;
  double distance = 0.0;
};

// Geodesic distance between the diffusion t-mean and the Fréchet mean for
// each t, in the given order.
std::vector<FrechetLimitPoint> frechet_limit_check(const EmpiricalSample& sample, const std::vector<double>& t_sequence,
                                                   const OptimizerConfig& config = {},
                                                   const TruncationPolicy& policy = TailBound{});

}  // namespace diffmean
