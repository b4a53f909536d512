#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "diffmean/analysis.hpp"
#include "diffmean/estimators.hpp"
#include "diffmean/sampling.hpp"

namespace diffmean {

struct EstimatorTag {
  enum class Kind { Frechet, Diffusion, JointDiffusion };
  Kind kind = Kind::Frechet;
  double t = 0.0;  // Diffusion only

  static EstimatorTag frechet() { return {Kind::Frechet, 0.0}; }
  static EstimatorTag diffusion(double t) { return {Kind::Diffusion, t}; }
  static EstimatorTag joint() { return {Kind::JointDiffusion, 0.0}; }

  // "frechet", "diffusion-t<t>", "joint"
  std::string label() const;
  static EstimatorTag parse(const std::string& label);

  friend bool operator==(const EstimatorTag&, const EstimatorTag&) = default;
};

// Isotropic N(0, sigma2 I) in R^dim, estimated with the Euclidean kernel.
struct EuclideanGaussian {
  int dim = 2;
  double sigma2 = 1.0;
};

using ScalingSource = std::variant<DistributionSpec, EmpiricalSample, EuclideanGaussian>;

struct ScalingTable {
  std::vector<int> n_grid;
  std::vector<double> scaled_variance;  // n * trace of tangent-space covariance
  int replicates = 0;
  RandomSeed seed;
  double fitted_slope = 0.0;
  double slope_stderr = 0.0;  // bootstrap over replicate estimates
  EstimatorTag tag;
  std::vector<int> dropped;        // replicates on the cut locus of the base point, per n
  std::vector<int> nonconverged;   // per n

  friend bool operator==(const ScalingTable&, const ScalingTable&) = default;
};

struct BootstrapOptions {
  // 0: read DIFFMEAN_THREADS, falling back to 1.
  int threads = 0;
  // Resamples used for slope_stderr.
  int slope_resamples = 200;
  // Abort when more than this fraction of replicates at one n fail to converge.
  double max_nonconverged_fraction = 0.05;
};

inline constexpr int kMinReplicates = 20;

std::vector<int> default_n_grid();

// Thread count from DIFFMEAN_THREADS, or 1 when unset or invalid.
int default_thread_count();

// OLS slope of log(scaled_variance) on log(n).
double fit_loglog_slope(const std::vector<int>& n_grid, const std::vector<double>& scaled_variance);

// Every tag is evaluated on the same replicate datasets; replicate (k, b)
// uses seed.split(k).split(b), so results do not depend on thread count.
std::vector<ScalingTable> bootstrap_scaling(const ScalingSource& source, const std::vector<EstimatorTag>& tags,
                                            const std::vector<int>& n_grid, int replicates,
                                            const OptimizerConfig& config, RandomSeed seed,
                                            const BootstrapOptions& options = {});
ScalingTable bootstrap_scaling(const ScalingSource& source, const EstimatorTag& tag, const std::vector<int>& n_grid,
                               int replicates, const OptimizerConfig& config, RandomSeed seed,
                               const BootstrapOptions& options = {});

struct TTrace {
  std::vector<double> t;
  std::vector<double> objective;
  double final_t = 0.0;
  bool converged = false;
  bool boundary_hit = false;
};

// n = 0 uses the exact population weights (atomic distributions only).
TTrace t_trace(const DistributionSpec& source, const UnitVector& y, double t_init, const OptimizerConfig& config,
               std::size_t n, RandomSeed seed, const TruncationPolicy& policy = TailBound{});
TTrace t_trace(const EmpiricalSample& sample, const UnitVector& y, double t_init, const OptimizerConfig& config,
               const TruncationPolicy& policy = TailBound{});

enum class ExportFormat { CSV, JSON };

// <experiment>_<tag>_<seed>.<ext>
std::string artifact_name(const std::string& experiment, const std::string& tag, RandomSeed seed, ExportFormat format);

void export_table(const ScalingTable& table, const std::filesystem::path& path, ExportFormat format);
void export_table(const LikelihoodProfile& profile, const std::filesystem::path& path, ExportFormat format);
void export_table(const TTrace& trace, const std::filesystem::path& path, ExportFormat format);

ScalingTable import_scaling_table_json(const std::filesystem::path& path);
// Reads the CSV written by export_table; replicates/seed/tag are not stored
// per row and are left default.
ScalingTable import_scaling_table_csv(const std::filesystem::path& path);

}  // namespace diffmean
