#include "diffmean/manifold.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "diffmean/error.hpp"

namespace diffmean {

namespace {

void require_same_dim(const UnitVector& x, const UnitVector& y) {
  if (x.ambient_dim() != y.ambient_dim()) throw DomainError("points live on spheres of different dimension");
}

}  // namespace

UnitVector::UnitVector(Vector coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) throw DomainError("unit vector needs at least two coordinates (S^1)");
  const double n = coords_.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cannot normalize a zero or non-finite vector");
  coords_ /= n;
}

UnitVector UnitVector::north_pole(int m) { return basis(m, 1); }

UnitVector UnitVector::basis(int m, int i) {
  if (m < 1) throw DomainError("sphere dimension must be at least 1");
  if (i < 0 || i > m) throw DomainError("basis index out of range");
  Vector v = Vector::Zero(m + 1);
  v[i] = 1.0;
  return UnitVector(std::move(v), 0);
}

TangentVector::TangentVector(UnitVector base_point, Vector v) : base(std::move(base_point)), vec(std::move(v)) {
  if (vec.size() != base.ambient_dim()) throw DomainError("tangent vector dimension mismatch");
  const double inner = base.coords().dot(vec);
  if (std::abs(inner) > 1e-10 * std::max(1.0, vec.norm())) {
    std::ostringstream os;
    os << "vector is not tangent at base (inner product " << inner << ")";
    throw DomainError(os.str());
  }
}

UnitVector exp_map(const TangentVector& v) {
  const double n = v.norm();
  if (n == 0.0) return v.base;
  return UnitVector(std::cos(n) * v.base.coords() + (std::sin(n) / n) * v.vec);
}

TangentVector log_map(const UnitVector& base, const UnitVector& target) {
  require_same_dim(base, target);
  const double dist = geodesic_distance(base, target);
  if (std::numbers::pi - dist < kCutLocusTolerance) {
    throw CutLocusError("log_map: target lies on the cut locus (antipode) of the base point");
  }
  Vector v = target.coords() - base.dot(target) * base.coords();
  // Remove the residual normal component left by rounding.
  v -= base.coords().dot(v) * base.coords();
  const double n = v.norm();
  if (n == 0.0 || dist == 0.0) return TangentVector(base, Vector::Zero(base.ambient_dim()));
  return TangentVector(base, (dist / n) * v);
}

double geodesic_distance(const UnitVector& x, const UnitVector& y) {
  require_same_dim(x, y);
  const double a = (x.coords() - y.coords()).norm();
  const double b = (x.coords() + y.coords()).norm();
  return 2.0 * std::atan2(a, b);
}

UnitVector y_delta(int m, double delta) {
  if (!(delta >= 0.0 && delta <= std::numbers::pi)) throw DomainError("delta must lie in [0, π]");
  if (m < 1) throw DomainError("sphere dimension must be at least 1");
  Vector v = Vector::Zero(m + 1);
  v[0] = -std::sin(delta);
  v[1] = std::cos(delta);
  return UnitVector(std::move(v));
}

TangentVector tangent_project(const UnitVector& base, const Vector& w) {
  if (w.size() != base.ambient_dim()) throw DomainError("tangent_project: dimension mismatch");
  Vector v = w - base.coords().dot(w) * base.coords();
  v -= base.coords().dot(v) * base.coords();
  return TangentVector(base, std::move(v));
}

}  // namespace diffmean
