#pragma once

#include <functional>
#include <vector>

#include "diffmean/manifold.hpp"

namespace diffmean {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Product rule on S^2: Gauss-Legendre in cos(theta) times a uniform
// trapezoid in phi. Integrates f(y) dy against the area measure.
double integrate_s2(const std::function<double(const UnitVector&)>& f, int n_theta = 64, int n_phi = 128);

// Nodes and area weights of the same product rule, for repeated use.
struct SphereRule {
  std::vector<UnitVector> points;
  std::vector<double> weights;
};
SphereRule s2_product_rule(int n_theta = 64, int n_phi = 128);

// Trapezoid rule over one period [0, 2π).
double integrate_circle(const std::function<double(double)>& f, int n = 4096);

}  // namespace diffmean
