#pragma once

#include <array>
#include <span>
#include <string>
#include <variant>

namespace diffmean {

// Sum exactly `terms` series terms (l = 0 .. terms-1).
struct FixedTerms {
  int terms = 64;
};

// Sum until a geometric-ratio majorant of the remaining tail, built from
// |C_l^a(x)| <= C_l^a(1), drops below `epsilon` relative to the partial sum.
struct TailBound {
  double epsilon = 1e-12;
  int max_terms = 10000;
};

using TruncationPolicy = std::variant<FixedTerms, TailBound>;

void validate(const TruncationPolicy& policy);

enum class Family { Euclidean, Circle, Sphere, Hyperbolic3 };

const char* to_string(Family family);
Family family_from_string(const std::string& name);

// Identifies one heat kernel. Time conventions follow the printed formula of
// each family: Sphere uses exp(-l(l+m-1)t/2) (generator Δ/2); Euclidean,
// Circle and Hyperbolic3 use 4t denominators (generator Δ). No rescaling
// between families is applied.
struct KernelSpec {
  Family family = Family::Sphere;
  int dim = 2;
  double t = 1.0;
  TruncationPolicy truncation = TailBound{};

  static KernelSpec sphere(int m, double t, TruncationPolicy policy = TailBound{});
  static KernelSpec circle(double t, TruncationPolicy policy = TailBound{});
  static KernelSpec euclidean(int m, double t);
  static KernelSpec hyperbolic3(double t);

  KernelSpec with_t(double new_t) const {
    KernelSpec copy = *this;
    copy.t = new_t;
    return copy;
  }

  // Throws DomainError / UnsupportedFamily on invalid combinations.
  void validate() const;
};

struct SeriesEval {
  double value = 0.0;
  int terms_used = 0;
  // Majorant bound on the truncated tail, relative to |value|.
  double tail_estimate = 0.0;
};

// C_l^alpha(x) by the three-term recurrence. |x| <= 1 required.
double gegenbauer(int l, double alpha, double x);

// Surface area of the unit sphere S^m in R^{m+1}.
double sphere_area(int m);

// All quantities of h_{t,m} at one argument from a single series pass.
struct SphereJet {
  int max_order = 0;
  std::array<double, 4> h{};      // h^{(k)}(x), k <= max_order
  std::array<double, 4> log_h{};  // d^k/dx^k ln h(x), k <= max_order
  double h_dt = 0.0;              // ∂h/∂t, when requested
  double log_h_dt = 0.0;          // (∂h/∂t) / h
  int terms_used = 0;
  double tail_estimate = 0.0;  // worst relative tail over computed orders
  int precision_digits = 0;    // 15 for double, else the multiprecision tier
};

// Evaluates h, derivatives up to `max_order` (0..3) and optionally ∂_t h.
// Falls back to extended precision when cancellation in the alternating
// series would otherwise leave fewer than ~9 correct digits.
SphereJet sphere_jet(const KernelSpec& spec, double cosangle, int max_order, bool with_dt = false);

SeriesEval sphere_heat(const KernelSpec& spec, double cosangle);
SeriesEval sphere_heat_deriv(const KernelSpec& spec, double cosangle, int order);
double sphere_log_heat(const KernelSpec& spec, double cosangle, int order);
double sphere_heat_dt(const KernelSpec& spec, double cosangle);

// Wrapped Gaussian on S^1 with angles in radians.
double circle_heat(double x, double y, double t, const TruncationPolicy& policy = TailBound{});

struct CircleJet {
  double value = 0.0;   // p(d)
  double d_dist = 0.0;  // ∂p/∂d for signed angular difference d in [0, π]
  double d_t = 0.0;     // ∂p/∂t
};
// Kernel as a function of the folded angular distance d = |x - y| mod 2π in [0, π].
CircleJet circle_jet(double distance, double t, const TruncationPolicy& policy = TailBound{});

double euclidean_heat(std::span<const double> x, std::span<const double> y, double t);
// ln p for the Euclidean kernel as a function of the squared distance.
double euclidean_log_heat(double squared_distance, int dim, double t);

// (4πt)^{-3/2} (ρ / sinh ρ) exp(-t - ρ²/(4t)).
double hyperbolic3_heat(double rho, double t);

}  // namespace diffmean
