#pragma once

#include <Eigen/Core>

namespace diffmean {

using Vector = Eigen::VectorXd;

// A point on S^m stored as a unit vector in R^{m+1}. Renormalized on
// construction; zero or non-finite input is rejected.
class UnitVector {
 public:
  explicit UnitVector(Vector coords);

  // μ = (0, 1, 0, ..., 0), the reference pole used throughout.
  static UnitVector north_pole(int m);
  // Standard basis vector e_i of R^{m+1}.
  static UnitVector basis(int m, int i);

  const Vector& coords() const noexcept { return coords_; }
  int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
  int ambient_dim() const noexcept { return static_cast<int>(coords_.size()); }
  double operator[](int i) const { return coords_[i]; }
  double dot(const UnitVector& other) const { return coords_.dot(other.coords_); }
  UnitVector antipode() const { return UnitVector(-coords_, 0); }

 private:
  UnitVector(Vector coords, int /*trusted*/) : coords_(std::move(coords)) {}
  Vector coords_;
};

// Element of T_base S^m, stored in ambient coordinates.
struct TangentVector {
  TangentVector(UnitVector base, Vector vec);

  UnitVector base;
  Vector vec;

  double norm() const { return vec.norm(); }
};

// Antipodal tolerance for cut-locus detection, in radians.
inline constexpr double kCutLocusTolerance = 1e-8;

UnitVector exp_map(const TangentVector& v);

// Throws CutLocusError when target is within kCutLocusTolerance of -base.
TangentVector log_map(const UnitVector& base, const UnitVector& target);

// Angle in [0, π]. Computed as 2 atan2(|x - y|, |x + y|), which equals the
// clamped arccos of ⟨x, y⟩ but keeps full accuracy near 0 and π.
double geodesic_distance(const UnitVector& x, const UnitVector& y);

// Point at distance delta from the north pole along the reference meridian:
// (-sin δ, cos δ, 0, ..., 0).
UnitVector y_delta(int m, double delta);

TangentVector tangent_project(const UnitVector& base, const Vector& w);

}  // namespace diffmean
