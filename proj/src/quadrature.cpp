#include "diffmean/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "diffmean/error.hpp"

namespace diffmean {

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_legendre: n must be at least 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  // Stores P_n(x) in pn and returns P_n'(x).
  auto legendre_dp = [n](double x, double& pn) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    pn = p1;
    return n * (x * p1 - p0) / (x * x - 1.0);
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pn = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double d = legendre_dp(x, pn);
      const double step = pn / d;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double dp = legendre_dp(x, pn);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

SphereRule s2_product_rule(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw DomainError("s2_product_rule: node counts must be positive");
  const QuadratureRule gl = gauss_legendre(n_theta);
  SphereRule rule;
  rule.points.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  rule.weights.reserve(rule.points.capacity());
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double z = gl.nodes[i];
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = (j + 0.5) * dphi;
      Vector v(3);
      v << r * std::cos(phi), r * std::sin(phi), z;
      rule.points.emplace_back(std::move(v));
      rule.weights.push_back(gl.weights[i] * dphi);
    }
  }
  return rule;
}

double integrate_s2(const std::function<double(const UnitVector&)>& f, int n_theta, int n_phi) {
  const SphereRule rule = s2_product_rule(n_theta, n_phi);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.points.size(); ++i) acc += rule.weights[i] * f(rule.points[i]);
  return acc;
}

double integrate_circle(const std::function<double(double)>& f, int n) {
  if (n < 1) throw DomainError("integrate_circle: n must be positive");
  const double h = 2.0 * std::numbers::pi / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f(i * h);
  return acc * h;
}

}  // namespace diffmean
