#include "diffmean/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "diffmean/error.hpp"
#include "diffmean/quadrature.hpp"

namespace diffmean {

namespace {

void check_grid(const std::vector<double>& grid, double hi) {
  if (grid.empty()) throw DomainError("delta grid must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= hi)) {
      std::ostringstream os;
      os << "delta grid value " << grid[i] << " outside [0, " << hi << "]";
      throw DomainError(os.str());
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("delta grid must be strictly increasing");
  }
}

void check_nodes(int nodes) {
  if (nodes < 2 || nodes > kMaxCrescentNodes) {
    std::ostringstream os;
    os << "quadrature budget exceeded: " << nodes << " nodes per axis (allowed 2.." << kMaxCrescentNodes << ")";
    throw DomainError(os.str());
  }
}

double ell(const KernelSpec& spec, double x) { return sphere_jet(spec, std::clamp(x, -1.0, 1.0), 0).log_h[0]; }

LikelihoodProfile tabulate(const std::vector<double>& grid, KernelSpec spec, DistributionSpec dist,
                           std::function<double(double)> f) {
  LikelihoodProfile p;
  p.delta_grid = grid;
  p.values.reserve(grid.size());
  for (double d : grid) {
    const double v = f(d);
    if (!std::isfinite(v)) throw NumericalError("profile value is not finite");
    p.values.push_back(v);
  }
  p.spec = std::move(spec);
  p.distribution = std::move(dist);
  p.evaluate = std::move(f);
  return p;
}

}  // namespace

double delta_bound(int m) {
  if (m < 2) throw DomainError("delta_bound requires m >= 2");
  if (m <= 3) return 2.0 / (m + 1) * std::log((m + 1) + 4.0 * (m + 3));
  return std::log(32.0 * (m + 3) / (9.0 * (m + 1)));
}

double lambda_bound(int m, double t, const TruncationPolicy& policy) {
  const KernelSpec spec = KernelSpec::sphere(m, t, policy);
  const SphereJet top = sphere_jet(spec, 1.0, 1);
  const SphereJet bottom = sphere_jet(spec, -1.0, 1);
  return bottom.h[0] * top.h[1] / (bottom.h[1] * top.h[0] + bottom.h[0] * top.h[1]);
}

double sigma_bound(double t, const TruncationPolicy& policy) {
  const KernelSpec spec = KernelSpec::sphere(2, t, policy);
  const SphereJet top = sphere_jet(spec, 1.0, 1);
  const SphereJet mid = sphere_jet(spec, 0.0, 1);
  return 2.0 * top.h[1] * mid.h[0] / (mid.h[1] * top.h[0] + 2.0 * top.h[1] * mid.h[0]);
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
  if (n < 2) throw DomainError("uniform_grid needs at least two points");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  g.back() = hi;
  return g;
}

LikelihoodProfile two_pole_profile(int m, double t, double alpha, const std::vector<double>& grid,
                                   const TruncationPolicy& policy) {
  const DistributionSpec dist{TwoPole{alpha}, m};
  dist.validate();
  check_grid(grid, std::numbers::pi);
  const KernelSpec spec = KernelSpec::sphere(m, t, policy);
  auto f = [spec, alpha](double delta) {
    const double c = std::cos(delta);
    return -(1.0 - alpha) * ell(spec, c) - alpha * ell(spec, -c);
  };
  return tabulate(grid, spec, dist, f);
}

double crescent_difference(double t, double delta, int nodes, const TruncationPolicy& policy) {
  check_nodes(nodes);
  if (!(delta >= 0.0 && delta <= std::numbers::pi)) throw DomainError("delta must lie in [0, π]");
  if (delta == 0.0) return 0.0;
  const KernelSpec spec = KernelSpec::sphere(2, t, policy);
  const QuadratureRule th = gauss_legendre(nodes, -std::numbers::pi / 2, std::numbers::pi / 2);
  const QuadratureRule ph = gauss_legendre(nodes, 0.0, delta);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double ct = std::cos(th.nodes[i]);
    double inner = 0.0;
    for (int j = 0; j < nodes; ++j) {
      const double s = ct * std::sin(ph.nodes[j]);
      inner += ph.weights[j] * (ell(spec, s) - ell(spec, -s));
    }
    acc += th.weights[i] * ct * inner;
  }
  return -acc;
}

double crescent_difference_derivative(double t, double delta, int nodes, const TruncationPolicy& policy) {
  check_nodes(nodes);
  if (!(delta >= 0.0 && delta <= std::numbers::pi)) throw DomainError("delta must lie in [0, π]");
  const KernelSpec spec = KernelSpec::sphere(2, t, policy);
  const QuadratureRule th = gauss_legendre(nodes, -std::numbers::pi / 2, std::numbers::pi / 2);
  const double sd = std::sin(delta);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double ct = std::cos(th.nodes[i]);
    acc += th.weights[i] * ct * (ell(spec, -ct * sd) - ell(spec, ct * sd));
  }
  return acc;
}

LikelihoodProfile hemisphere_profile(double t, double alpha, const std::vector<double>& grid, int quadrature_nodes,
                                     const TruncationPolicy& policy) {
  const DistributionSpec dist{HemispherePointMass{alpha}, 2};
  dist.validate();
  check_grid(grid, std::numbers::pi);
  check_nodes(quadrature_nodes);
  const KernelSpec spec = KernelSpec::sphere(2, t, policy);
  // At δ = 0 the hemisphere average of ℓ(⟨x, μ⟩) is ∫_{-1}^0 ℓ(s) ds, since
  // ⟨x, μ⟩ is uniform on [-1, 0] for x uniform on the lower hemisphere.
  const QuadratureRule gl = gauss_legendre(quadrature_nodes, -1.0, 0.0);
  double hemi = 0.0;
  for (int i = 0; i < quadrature_nodes; ++i) hemi += gl.weights[i] * ell(spec, gl.nodes[i]);
  const double ell1 = ell(spec, 1.0);
  const double at_zero = -(1.0 - alpha) * ell1 - alpha * hemi;
  auto f = [=](double delta) {
    const double crescent = crescent_difference(t, delta, quadrature_nodes, policy);
    return at_zero + alpha / (2.0 * std::numbers::pi) * crescent - (1.0 - alpha) * ell(spec, std::cos(delta)) +
           (1.0 - alpha) * ell1;
  };
  return tabulate(grid, spec, dist, f);
}

const char* to_string(SmearinessClaim claim) {
  switch (claim) {
    case SmearinessClaim::NonSmeary: return "NonSmeary";
    case SmearinessClaim::AtLeastTwoSmeary: return "AtLeastTwoSmeary";
    case SmearinessClaim::Inconclusive: return "Inconclusive";
  }
  return "?";
}

SmearinessReport classify_smeariness(const LikelihoodProfile& profile) {
  const auto& g = profile.delta_grid;
  const auto& v = profile.values;
  if (g.empty() || g.size() != v.size()) throw DomainError("profile grid and values differ in length");
  if (g.front() != 0.0) throw DomainError("profile grid must start at δ = 0");
  if (!profile.evaluate) throw DomainError("profile has no evaluator");

  double range = 0.0;
  for (double x : v) range = std::max(range, std::abs(x - v.front()));
  const double scale = range > 0.0 ? range : std::max(1.0, std::abs(v.front()));
  const double tol = kSmearinessRelTol * scale;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v.front() - tol) {
      std::ostringstream os;
      os << "profile minimum is not at δ = 0 (value at δ = " << g[i] << " is lower)";
      throw DomainError(os.str());
    }
  }

  // D(h) = 2 (L(h) - L(0)) / h² = L''(0) + c h² + ..., by evenness of L.
  const double l0 = profile.evaluate(0.0);
  double table[kRichardsonLevels][kRichardsonLevels];
  for (int k = 0; k < kRichardsonLevels; ++k) {
    const double h = kRichardsonStep / std::pow(2.0, k);
    table[k][0] = 2.0 * (profile.evaluate(h) - l0) / (h * h);
    for (int j = 1; j <= k; ++j) {
      const double f = std::pow(4.0, j);
      table[k][j] = table[k][j - 1] + (table[k][j - 1] - table[k - 1][j - 1]) / (f - 1.0);
    }
  }
  SmearinessReport rep;
  rep.second_derivative_at_zero = table[kRichardsonLevels - 1][kRichardsonLevels - 1];
  rep.tolerance = tol;
  if (rep.second_derivative_at_zero > tol) {
    rep.order_claim = SmearinessClaim::NonSmeary;
  } else if (std::abs(rep.second_derivative_at_zero) <= tol) {
    rep.order_claim = SmearinessClaim::AtLeastTwoSmeary;
  } else {
    rep.order_claim = SmearinessClaim::Inconclusive;
  }
  if (std::holds_alternative<TwoPole>(profile.distribution.variant)) {
    rep.critical_alpha = lambda_bound(profile.spec.dim, profile.spec.t, profile.spec.truncation);
  } else if (std::holds_alternative<HemispherePointMass>(profile.distribution.variant)) {
    rep.critical_alpha = sigma_bound(profile.spec.t, profile.spec.truncation);
  } else {
    rep.critical_alpha = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

double small_t_gap(int m, double t, const std::vector<double>& delta_grid, const TruncationPolicy& policy) {
  check_grid(delta_grid, 0.9 * std::numbers::pi);
  const KernelSpec spec = KernelSpec::sphere(m, t, policy);
  double gap = 0.0;
  for (double d : delta_grid) gap = std::max(gap, std::abs(-2.0 * t * ell(spec, std::cos(d)) - d * d));
  return gap;
}

std::vector<FrechetLimitPoint> frechet_limit_check(const EmpiricalSample& sample, const std::vector<double>& t_sequence,
                                                   const OptimizerConfig& config, const TruncationPolicy& policy) {
  for (std::size_t i = 0; i < t_sequence.size(); ++i) {
    if (!(t_sequence[i] > 0.0)) throw DomainError("t_sequence must be positive");
    if (i > 0 && !(t_sequence[i] < t_sequence[i - 1])) throw DomainError("t_sequence must be decreasing");
  }
  const UnitVector frechet = estimate_frechet_mean(sample, config).unit_point();
  std::vector<FrechetLimitPoint> out;
  for (double t : t_sequence) {
    const KernelSpec spec = KernelSpec::sphere(sample.dim(), t, policy);
    const EstimateReport r = estimate_diffusion_mean(sample, spec, config);
    out.push_back({t, geodesic_distance(r.unit_point(), frechet)});
  }
  return out;
}

}  // namespace diffmean
