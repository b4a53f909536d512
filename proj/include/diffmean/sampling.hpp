#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "diffmean/manifold.hpp"

namespace diffmean {

struct RandomSeed {
  std::uint64_t value = 0;

  // Independent child seed for stream `index`; used to give every bootstrap
  // replicate or restart its own generator.
  RandomSeed split(std::uint64_t index) const;

  friend bool operator==(const RandomSeed&, const RandomSeed&) = default;
};

// Per-task generator. Value object: copy it to fork the stream.
class Rng {
 public:
  explicit Rng(RandomSeed seed);

  double uniform();  // [0, 1)
  double normal();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// P(X = -μ) = alpha, P(X = μ) = 1 - alpha.
struct TwoPole {
  double alpha = 0.0;
};

// Brownian endpoints from -μ with probability alpha, from μ otherwise.
// sigma2 is the total diffusion time of each walk (per-axis variance).
struct BimodalBrownianNormal {
  double sigma2 = 0.3;
  double alpha = 0.2;
};

// Uniform on the lower hemisphere {q_1 <= 0} with mass alpha, atom at μ
// with mass 1 - alpha.
struct HemispherePointMass {
  double alpha = 0.5;
};

struct BrownianNormal {
  std::optional<UnitVector> center;  // defaults to μ
  double sigma2 = 1.0;
};

struct DistributionSpec {
  std::variant<TwoPole, BimodalBrownianNormal, HemispherePointMass, BrownianNormal> variant;
  int dim = 2;

  void validate() const;
  // Population location used as the reference point for tangent-space
  // variances (μ unless a BrownianNormal center is given).
  UnitVector reference_point() const;
  std::string name() const;
};

// Weighted data on S^m. Weights, when present, sum to 1.
class EmpiricalSample {
 public:
  EmpiricalSample(std::vector<UnitVector> points, std::optional<std::vector<double>> weights = std::nullopt,
                  std::optional<RandomSeed> provenance = std::nullopt);

  const std::vector<UnitVector>& points() const noexcept { return points_; }
  const std::optional<std::vector<double>>& weights() const noexcept { return weights_; }
  // nullopt means "external" data.
  const std::optional<RandomSeed>& provenance() const noexcept { return provenance_; }

  std::size_t size() const noexcept { return points_.size(); }
  int dim() const noexcept { return points_.front().dim(); }
  double weight(std::size_t i) const { return weights_ ? (*weights_)[i] : 1.0 / static_cast<double>(points_.size()); }

  // Weighted extrinsic average in R^{m+1} (not normalized).
  Vector extrinsic_average() const;

 private:
  std::vector<UnitVector> points_;
  std::optional<std::vector<double>> weights_;
  std::optional<RandomSeed> provenance_;
};

// Default step count for a walk of the given total time: 100 ceil(T), at least 100.
int default_brownian_steps(double total_time);

// Geodesic random walk: `steps` isotropic Gaussian tangent steps with
// per-coordinate variance total_time / steps, each applied via exp_map.
UnitVector brownian_sample(const UnitVector& center, double total_time, int steps, Rng& rng);
UnitVector brownian_sample(const UnitVector& center, double total_time, int steps, RandomSeed seed);

// Uniform point on S^m.
UnitVector uniform_on_sphere(int m, Rng& rng);

EmpiricalSample draw(const DistributionSpec& dist, std::size_t n, RandomSeed seed);

// Exact weighted representation of an atomic distribution (TwoPole only).
EmpiricalSample population_sample(const DistributionSpec& dist);

struct LatLonConvention {
  enum class Unit { Degrees, Radians };
  Unit unit = Unit::Degrees;
};

// Geographic convention: x = cos(lat) cos(lon), y = cos(lat) sin(lon), z = sin(lat).
UnitVector latlon_to_unit(double lat, double lon, const LatLonConvention& conv = {});
std::pair<double, double> unit_to_latlon(const UnitVector& p, const LatLonConvention& conv = {});

// Rows "lat,lon"; '#' comments and blank lines skipped; an optional header
// row is detected when the first data line does not parse as numbers.
EmpiricalSample read_latlon_csv(std::istream& in, const LatLonConvention& conv = {});

// Rows of comma-separated ambient coordinates, same comment/header rules.
// All rows must have the same length (>= 1).
std::vector<Vector> read_vectors_csv(std::istream& in);
std::vector<Vector> load_vectors_csv(const std::filesystem::path& path);
// Rows normalized onto S^m (length m+1 >= 2).
EmpiricalSample to_sphere_sample(const std::vector<Vector>& rows);
EmpiricalSample ingest_latlon_csv(const std::filesystem::path& path, const LatLonConvention& conv = {});
void write_latlon_csv(std::ostream& out, const EmpiricalSample& sample, const LatLonConvention& conv = {});
void export_latlon_csv(const std::filesystem::path& path, const EmpiricalSample& sample,
                       const LatLonConvention& conv = {});

}  // namespace diffmean
