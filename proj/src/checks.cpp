#include "diffmean/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "diffmean/error.hpp"
#include "diffmean/estimators.hpp"
#include "diffmean/quadrature.hpp"

namespace diffmean {

namespace {

CheckResult make(std::string name, double value, double error, double tol) {
  return CheckResult{std::move(name), value, error, tol, error < tol};
}

double sphere_kernel(const KernelSpec& spec, const UnitVector& x, const UnitVector& y) {
  return sphere_heat(spec, std::clamp(x.dot(y), -1.0, 1.0)).value;
}

// A base point away from the poles of the product rule.
UnitVector generic_point() {
  Vector v(3);
  v << 0.3, -0.5, 0.8;
  return UnitVector(v);
}

// ∫_0^R f(r) dr by composite Gauss-Legendre on `panels` equal pieces.
double radial_integral(const std::function<double(double)>& f, double R, int panels = 64, int order = 32) {
  const QuadratureRule gl = gauss_legendre(order, 0.0, R / panels);
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double off = p * R / panels;
    for (int i = 0; i < order; ++i) acc += gl.weights[i] * f(off + gl.nodes[i]);
  }
  return acc;
}

}  // namespace

CheckResult check_normalization(const KernelSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::Sphere: {
      double total = 0.0;
      if (spec.dim == 2) {
        const UnitVector x = generic_point();
        total = integrate_s2([&](const UnitVector& y) { return sphere_kernel(spec, x, y); });
      } else {
        // dy = A_{m-1} sin^{m-1}θ dθ around the base point.
        const QuadratureRule gl = gauss_legendre(256, 0.0, std::numbers::pi);
        const double a = sphere_area(spec.dim - 1);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
          const double th = gl.nodes[i];
          total += gl.weights[i] * a * std::pow(std::sin(th), spec.dim - 1) * sphere_heat(spec, std::cos(th)).value;
        }
      }
      return make("normalization", total, std::abs(total - 1.0), kSphereNormalizationTol);
    }
    case Family::Circle: {
      const double x = 0.7;
      const double total = integrate_circle([&](double y) { return circle_heat(x, y, spec.t, spec.truncation); });
      return make("normalization", total, std::abs(total - 1.0), kCircleNormalizationTol);
    }
    case Family::Euclidean: {
      const double R = 20.0 * std::sqrt(spec.t) + 1.0;
      const double a = sphere_area(spec.dim - 1);
      const double total = radial_integral(
          [&](double r) { return a * std::pow(r, spec.dim - 1) * std::exp(euclidean_log_heat(r * r, spec.dim, spec.t)); },
          R);
      return make("normalization", total, std::abs(total - 1.0), kSphereNormalizationTol);
    }
    case Family::Hyperbolic3: {
      // Volume element 4π sinh²ρ dρ.
      const double R = 2.0 * spec.t + 20.0 * std::sqrt(spec.t) + 2.0;
      const double total = radial_integral(
          [&](double r) { return 4.0 * std::numbers::pi * std::sinh(r) * std::sinh(r) * hyperbolic3_heat(r, spec.t); },
          R);
      return make("normalization", total, std::abs(total - 1.0), kSphereNormalizationTol);
    }
  }
  throw UnsupportedFamily("normalization check not available for this family");
}

CheckResult check_semigroup(double s, double t, const TruncationPolicy& policy) {
  if (!(s > 0.0 && t > 0.0)) throw DomainError("semigroup check needs s, t > 0");
  const KernelSpec ks = KernelSpec::sphere(2, s, policy);
  const KernelSpec kt = KernelSpec::sphere(2, t, policy);
  const KernelSpec kst = KernelSpec::sphere(2, s + t, policy);
  const SphereRule rule = s2_product_rule();
  const UnitVector x = generic_point();
  double worst = 0.0;
  double value = 0.0;
  for (double angle : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    // y at geodesic distance `angle` from x.
    Vector w(3);
    w << 1.0, 0.2, -0.3;
    const TangentVector v = tangent_project(x, w);
    const UnitVector y = exp_map(TangentVector(x, v.vec * (angle / v.vec.norm())));
    double integral = 0.0;
    for (std::size_t i = 0; i < rule.points.size(); ++i)
      integral += rule.weights[i] * sphere_kernel(ks, x, rule.points[i]) * sphere_kernel(kt, rule.points[i], y);
    const double direct = sphere_kernel(kst, x, y);
    const double rel = std::abs(integral - direct) / direct;
    if (rel >= worst) {
      worst = rel;
      value = integral;
    }
  }
  return make("semigroup", value, worst, kSemigroupTol);
}

CheckResult check_kernel_derivatives(int m, double t, int grid, const TruncationPolicy& policy) {
  if (grid < 2) throw DomainError("derivative grid needs at least two points");
  const KernelSpec spec = KernelSpec::sphere(m, t, policy);
  constexpr double hx = 1e-5;
  const double ht = 1e-5 * t;
  // analytic[q][i], numeric[q][i] for q = h', h'', h''', ∂_t h.
  std::vector<std::array<double, 4>> analytic(grid), numeric(grid);
  for (int i = 0; i < grid; ++i) {
    const double x = -0.95 + 1.9 * i / (grid - 1);
    const SphereJet c = sphere_jet(spec, x, 3, true);
    const SphereJet p = sphere_jet(spec, x + hx, 2);
    const SphereJet n = sphere_jet(spec, x - hx, 2);
    const double tp = sphere_jet(spec.with_t(t + ht), x, 0).h[0];
    const double tn = sphere_jet(spec.with_t(t - ht), x, 0).h[0];
    for (int k = 0; k < 3; ++k) {
      analytic[i][k] = c.h[k + 1];
      numeric[i][k] = (p.h[k] - n.h[k]) / (2.0 * hx);
    }
    analytic[i][3] = c.h_dt;
    numeric[i][3] = (tp - tn) / (2.0 * ht);
  }
  double worst = 0.0;
  for (int q = 0; q < 4; ++q) {
    double scale = 0.0;
    for (int i = 0; i < grid; ++i) scale = std::max(scale, std::abs(analytic[i][q]));
    for (int i = 0; i < grid; ++i) {
      const double denom = std::max(std::abs(analytic[i][q]), 1e-3 * scale);
      worst = std::max(worst, std::abs(analytic[i][q] - numeric[i][q]) / denom);
    }
  }
  return make("kernel-derivatives", worst, worst, kDerivativeTol);
}

CheckResult check_likelihood_gradient(int m, double t, int configs, RandomSeed seed) {
  const KernelSpec spec = KernelSpec::sphere(m, t);
  double worst = 0.0;
  for (int c = 0; c < configs; ++c) {
    Rng rng(seed.split(static_cast<std::uint64_t>(c)));
    std::vector<UnitVector> pts;
    const int n = 5 + static_cast<int>(rng.uniform() * 10);
    for (int i = 0; i < n; ++i) pts.push_back(uniform_on_sphere(m, rng));
    const EmpiricalSample sample(std::move(pts));
    const UnitVector y = uniform_on_sphere(m, rng);
    Vector w(m + 1);
    for (int i = 0; i <= m; ++i) w[i] = rng.normal();
    Vector dir = tangent_project(y, w).vec;
    dir /= dir.norm();
    const TangentVector g = riemannian_gradient(sample, y, spec);
    constexpr double h = 1e-5;
    const double lp = sample_log_likelihood(sample, exp_map(TangentVector(y, h * dir)), spec);
    const double ln = sample_log_likelihood(sample, exp_map(TangentVector(y, -h * dir)), spec);
    const double fd = (lp - ln) / (2.0 * h);
    const double an = g.vec.dot(dir);
    worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), 1e-3 * g.norm(), 1e-12}));

    const double ht = 1e-5 * t;
    const double fdt = (sample_log_likelihood(sample, y, spec.with_t(t + ht)) -
                        sample_log_likelihood(sample, y, spec.with_t(t - ht))) /
                       (2.0 * ht);
    const double ant = likelihood_dt(sample, y, spec);
    worst = std::max(worst, std::abs(ant - fdt) / std::max(std::abs(ant), 1e-12));
  }
  return make("likelihood-gradient", worst, worst, kDerivativeTol);
}

}  // namespace diffmean
