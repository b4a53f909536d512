#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diffmean/kernels.hpp"
#include "diffmean/manifold.hpp"
#include "diffmean/sampling.hpp"

namespace diffmean {

enum class StepPolicy { Fixed, Backtracking };

struct OptimizerConfig {
  int max_iters = 1000;
  double grad_tol = 1e-8;
  double step_size = 1.0;  // β for Fixed; initial trial step for Backtracking
  StepPolicy step_policy = StepPolicy::Backtracking;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int restarts = 5;  // additional random initial points
  RandomSeed seed{0};
  // Box for the diffusion time in estimate_t and estimate_joint.
  double t_min = 0.01;
  double t_max = 50.0;

  void validate() const;
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double t = 0.0;
};

struct EstimateReport {
  Vector point;  // unit vector for S^m / S^1, plain vector for Euclidean data
  std::optional<double> t;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
  int restarts_best_of = 1;  // number of starts compared
  bool non_unique = false;   // distinct starts reached equally good points
  bool boundary_hit = false;  // t at t_min or t_max
  std::vector<std::string> warnings;

  UnitVector unit_point() const { return UnitVector(point); }
};

// Data in R^m for the Euclidean family.
class EuclideanSample {
 public:
  EuclideanSample(std::vector<Vector> points, std::optional<std::vector<double>> weights = std::nullopt);

  const std::vector<Vector>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  int dim() const noexcept { return static_cast<int>(points_.front().size()); }
  double weight(std::size_t i) const { return weights_ ? (*weights_)[i] : 1.0 / static_cast<double>(points_.size()); }
  Vector mean() const;

 private:
  std::vector<Vector> points_;
  std::optional<std::vector<double>> weights_;
};

// L_{t,n}(y) = -Σ w_i ln p(X_i, y, t). Sphere (spec.dim = sample dim) or
// Circle (sample on S^1).
double sample_log_likelihood(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec);
double sample_log_likelihood(const EuclideanSample& sample, const Vector& y, const KernelSpec& spec);

// Gradient of L_{t,n} at y in T_y.
TangentVector riemannian_gradient(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec);
Vector likelihood_gradient(const EuclideanSample& sample, const Vector& y, const KernelSpec& spec);

// dL_{t,n}(y)/dt = -Σ w_i ∂_t p / p.
double likelihood_dt(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec);
double likelihood_dt(const EuclideanSample& sample, const Vector& y, const KernelSpec& spec);

// Σ w_i dist(X_i, y)².
double frechet_objective(const EmpiricalSample& sample, const UnitVector& y);

EstimateReport estimate_diffusion_mean(const EmpiricalSample& sample, const KernelSpec& spec,
                                       const OptimizerConfig& config = {},
                                       const std::optional<UnitVector>& init = std::nullopt);
EstimateReport estimate_diffusion_mean(const EuclideanSample& sample, const KernelSpec& spec,
                                       const OptimizerConfig& config = {},
                                       const std::optional<Vector>& init = std::nullopt);

EstimateReport estimate_frechet_mean(const EmpiricalSample& sample, const OptimizerConfig& config = {},
                                     const std::optional<UnitVector>& init = std::nullopt);

// Minimizes t -> L_{t,n}(y) over [t_min, t_max]. `spec` fixes family,
// dimension and truncation; its t is ignored.
EstimateReport estimate_t(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec,
                          const OptimizerConfig& config, double t_init);
EstimateReport estimate_t(const EuclideanSample& sample, const Vector& y, const KernelSpec& spec,
                          const OptimizerConfig& config, double t_init);

// Alternates estimate_diffusion_mean and estimate_t. `spec` fixes the family;
// t_init defaults to mean squared distance / m from the initial point.
EstimateReport estimate_joint(const EmpiricalSample& sample, const KernelSpec& spec, const OptimizerConfig& config = {},
                              std::optional<double> t_init = std::nullopt);

}  // namespace diffmean
