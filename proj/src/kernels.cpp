#include "diffmean/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/float128.hpp>

#include "diffmean/error.hpp"

namespace diffmean {

namespace {

namespace mp = boost::multiprecision;

template <unsigned Digits>
using MpReal = mp::number<mp::cpp_bin_float<Digits>, mp::et_off>;

// Target relative accuracy of a double evaluation before escalating, and of
// an extended-precision evaluation before it is accepted.
constexpr double kDoubleTarget = 1e-9;
constexpr double kExtendedTarget = 1e-16;
// Rounding error of a sum is bounded by kRoundingFactor * eps * Σ|majorant|.
constexpr double kRoundingFactor = 4.0;

template <class Real>
Real pi_value() {
  if constexpr (std::is_same_v<Real, double>) {
    return std::numbers::pi;
  } else {
    return boost::math::constants::pi<Real>();
  }
}

template <class Real>
Real area_of_sphere(int m) {
  // A_0 = 2, A_1 = 2π, A_m = 2π A_{m-2} / (m - 1).
  const Real two_pi = 2 * pi_value<Real>();
  Real a = (m % 2 == 0) ? Real(2) : two_pi;
  for (int k = (m % 2 == 0) ? 2 : 3; k <= m; k += 2) a = two_pi * a / Real(k - 1);
  return a;
}

template <class Real>
struct RawSeries {
  std::array<Real, 4> sum{};
  std::array<Real, 4> majorant_sum{};
  std::array<Real, 4> tail{};
  Real sum_dt{0};
  Real majorant_sum_dt{0};
  Real tail_dt{0};
  int terms = 0;
  bool converged = false;
};

template <class Real>
Real order_scale(const RawSeries<Real>& s, int k) {
  using std::abs;
  if (k == 0) return abs(s.sum[0]);
  if (s.majorant_sum[0] == 0) return abs(s.sum[k]);
  return abs(s.sum[k]) + abs(s.sum[0]) * s.majorant_sum[k] / s.majorant_sum[0];
}

template <class Real>
Real dt_scale(const RawSeries<Real>& s) {
  using std::abs;
  if (s.majorant_sum[0] == 0) return abs(s.sum_dt);
  return abs(s.sum_dt) + abs(s.sum[0]) * s.majorant_sum_dt / s.majorant_sum[0];
}

// Sums the Gegenbauer series of h_{t,m} and its x-derivatives
//   h^{(k)}(x) = Σ_{l>=k} w_l D_k C_{l-k}^{α+k}(x),  D_k = Π_{j<k} (m-1+2j),
// with w_l = e^{-l(l+m-1)t/2} (2l+m-1) / ((m-1) A_m), plus the term-wise
// t-derivative. Majorants replace C_n^β(x) by C_n^β(1) = (2β)_n / n!.
template <class Real>
RawSeries<Real> sum_series(int m, double t_in, double x_in, int max_order, bool with_dt,
                           const TruncationPolicy& policy) {
  using std::abs;
  using std::exp;

  const Real t(t_in);
  const Real x(x_in);
  const Real alpha = Real(m - 1) / 2;
  const Real norm = 1 / (Real(m - 1) * area_of_sphere<Real>(m));
  const Real q = exp(-t);
  const Real a = exp(-Real(m) * t / 2);

  const bool fixed = std::holds_alternative<FixedTerms>(policy);
  const int limit = fixed ? std::get<FixedTerms>(policy).terms : std::get<TailBound>(policy).max_terms;
  const Real eps = fixed ? Real(0) : Real(std::get<TailBound>(policy).epsilon);

  std::array<Real, 4> beta{};
  std::array<Real, 4> d_factor{};
  for (int k = 0; k <= max_order; ++k) {
    beta[k] = alpha + k;
    d_factor[k] = 1;
    for (int j = 0; j < k; ++j) d_factor[k] *= Real(m - 1 + 2 * j);
  }

  // Per order: C_{n-1}, C_n at x and the majorant C_n(1), n = l - k.
  std::array<Real, 4> c_prev{}, c_cur{}, c_one{};

  RawSeries<Real> out;
  Real e_l = 1;   // e^{-l(l+m-1)t/2}
  Real q_pow = 1; // q^l
  const int first_needed = std::max(max_order, with_dt ? 1 : 0);

  for (int l = 0; l < limit; ++l) {
    const Real w = e_l * Real(2 * l + m - 1) * norm;
    const Real lambda_half = Real(l) * Real(l + m - 1) / 2;

    for (int k = 0; k <= max_order; ++k) {
      const int n = l - k;
      if (n < 0) continue;
      Real c;
      if (n == 0) {
        c = 1;
        c_one[k] = 1;
      } else if (n == 1) {
        c = 2 * beta[k] * x;
        c_one[k] = 2 * beta[k];
      } else {
        c = (2 * x * (Real(n) + beta[k] - 1) * c_cur[k] - (Real(n) + 2 * beta[k] - 2) * c_prev[k]) / Real(n);
        c_one[k] = c_one[k] * (Real(n) + 2 * beta[k] - 1) / Real(n);
      }
      c_prev[k] = c_cur[k];
      c_cur[k] = c;
      out.sum[k] += w * d_factor[k] * c;
      out.majorant_sum[k] += w * d_factor[k] * c_one[k];
    }
    if (with_dt) {
      out.sum_dt -= lambda_half * w * c_cur[0];
      out.majorant_sum_dt += lambda_half * w * c_one[0];
    }

    // Majorants of the next two terms for the geometric tail bound.
    const Real e_next = e_l * a * q_pow;               // e_{l+1}
    const Real e_next2 = e_next * a * q_pow * q;       // e_{l+2}
    const Real w1 = e_next * Real(2 * l + m + 1) * norm;
    const Real w2 = e_next2 * Real(2 * l + m + 3) * norm;
    bool done = true;
    for (int k = 0; k <= max_order; ++k) {
      const int n1 = l + 1 - k;  // index of C for term l+1
      Real tail;
      if (n1 < 0) {
        tail = std::numeric_limits<double>::infinity();
      } else {
        // c1 = C_{n1}^β(1), c2 = C_{n1+1}^β(1)
        Real c1;
        if (n1 == 0) {
          c1 = 1;
        } else if (n1 == 1) {
          c1 = 2 * beta[k];
        } else {
          c1 = c_one[k] * (Real(n1) + 2 * beta[k] - 1) / Real(n1);
        }
        const Real c2 = c1 * (Real(n1 + 1) + 2 * beta[k] - 1) / Real(n1 + 1);
        const Real b1 = w1 * d_factor[k] * c1;
        const Real b2 = w2 * d_factor[k] * c2;
        if (b1 == 0) {
          tail = 0;
        } else {
          const Real r = b2 / b1;
          tail = r < 1 ? b1 / (1 - r) : Real(std::numeric_limits<double>::infinity());
        }
      }
      out.tail[k] = tail;
      if (!(tail <= eps * order_scale(out, k))) done = false;
    }
    if (with_dt) {
      const Real c1 = c_one[0] * (Real(l + 1) + 2 * beta[0] - 1) / Real(l + 1);
      const Real c2 = c1 * (Real(l + 2) + 2 * beta[0] - 1) / Real(l + 2);
      const Real b1 = w1 * c1 * Real(l + 1) * Real(l + m) / 2;
      const Real b2 = w2 * c2 * Real(l + 2) * Real(l + m + 1) / 2;
      if (b1 == 0) {
        out.tail_dt = 0;
      } else {
        const Real r = b2 / b1;
        out.tail_dt = r < 1 ? b1 / (1 - r) : Real(std::numeric_limits<double>::infinity());
      }
      if (!(out.tail_dt <= eps * dt_scale(out))) done = false;
    }

    out.terms = l + 1;
    e_l = e_next;
    q_pow *= q;
    if (!fixed && done && l >= first_needed) {
      out.converged = true;
      break;
    }
  }
  if (fixed) out.converged = true;
  return out;
}

template <class Real>
bool precise_enough(const RawSeries<Real>& s, int max_order, bool with_dt, double target) {
  const Real eps = std::numeric_limits<Real>::epsilon();
  for (int k = 0; k <= max_order; ++k) {
    const Real err = kRoundingFactor * eps * s.majorant_sum[k];
    if (!(err <= Real(target) * order_scale(s, k))) return false;
  }
  if (with_dt) {
    const Real err = kRoundingFactor * eps * s.majorant_sum_dt;
    if (!(err <= Real(target) * dt_scale(s))) return false;
  }
  // h itself must be resolved as a positive number.
  return s.sum[0] > 0;
}

template <class Real>
SphereJet to_jet(const RawSeries<Real>& s, int max_order, bool with_dt, int digits) {
  using std::log;
  SphereJet jet;
  jet.max_order = max_order;
  jet.terms_used = s.terms;
  jet.precision_digits = digits;
  const Real& h = s.sum[0];
  for (int k = 0; k <= max_order; ++k) jet.h[k] = static_cast<double>(s.sum[k]);
  jet.log_h[0] = static_cast<double>(log(h));
  if (max_order >= 1) {
    const Real r1 = s.sum[1] / h;
    jet.log_h[1] = static_cast<double>(r1);
    if (max_order >= 2) {
      const Real r2 = s.sum[2] / h;
      jet.log_h[2] = static_cast<double>(r2 - r1 * r1);
      if (max_order >= 3) {
        const Real r3 = s.sum[3] / h;
        jet.log_h[3] = static_cast<double>(r3 - 3 * r1 * r2 + 2 * r1 * r1 * r1);
      }
    }
  }
  if (with_dt) {
    jet.h_dt = static_cast<double>(s.sum_dt);
    jet.log_h_dt = static_cast<double>(s.sum_dt / h);
  }
  double worst = 0.0;
  for (int k = 0; k <= max_order; ++k) {
    const Real scale = order_scale(s, k);
    const double rel = scale > 0 ? static_cast<double>(s.tail[k] / scale) : 0.0;
    worst = std::max(worst, rel);
  }
  if (with_dt) {
    const Real scale = dt_scale(s);
    worst = std::max(worst, scale > 0 ? static_cast<double>(s.tail_dt / scale) : 0.0);
  }
  jet.tail_estimate = worst;
  return jet;
}

[[noreturn]] void throw_not_converged(const KernelSpec& spec, double x, int terms) {
  std::ostringstream os;
  os << "truncation-not-converged: sphere kernel m=" << spec.dim << " t=" << spec.t << " x=" << x
     << " did not reach the tail bound within " << terms << " terms (t too small for the budget)";
  throw TruncationError(os.str());
}

template <class Real>
bool try_tier(const KernelSpec& spec, double x, int max_order, bool with_dt, double target, int digits,
              SphereJet& out) {
  const RawSeries<Real> s = sum_series<Real>(spec.dim, spec.t, x, max_order, with_dt, spec.truncation);
  if (!s.converged) throw_not_converged(spec, x, s.terms);
  if (!precise_enough(s, max_order, with_dt, target)) return false;
  out = to_jet(s, max_order, with_dt, digits);
  return true;
}

void check_cosangle(double x) {
  if (!(std::abs(x) <= 1.0)) {
    std::ostringstream os;
    os << "cosine argument " << x << " outside [-1, 1]";
    throw DomainError(os.str());
  }
}

void require_sphere(const KernelSpec& spec) {
  if (spec.family != Family::Sphere) throw DomainError("sphere kernel requested for a non-sphere KernelSpec");
  spec.validate();
}

}  // namespace

void validate(const TruncationPolicy& policy) {
  if (const auto* f = std::get_if<FixedTerms>(&policy)) {
    if (f->terms < 1) throw DomainError("FixedTerms requires at least one term");
  } else {
    const auto& tb = std::get<TailBound>(policy);
    if (!(tb.epsilon > 0.0)) throw DomainError("TailBound epsilon must be positive");
    if (tb.max_terms < 1) throw DomainError("TailBound max_terms must be at least 1");
  }
}

const char* to_string(Family family) {
  switch (family) {
    case Family::Euclidean: return "euclidean";
    case Family::Circle: return "circle";
    case Family::Sphere: return "sphere";
    case Family::Hyperbolic3: return "hyperbolic3";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "euclidean") return Family::Euclidean;
  if (name == "circle") return Family::Circle;
  if (name == "sphere") return Family::Sphere;
  if (name == "hyperbolic3") return Family::Hyperbolic3;
  throw UnsupportedFamily("unknown kernel family '" + name + "'");
}

KernelSpec KernelSpec::sphere(int m, double t, TruncationPolicy policy) {
  KernelSpec s{Family::Sphere, m, t, policy};
  s.validate();
  return s;
}

KernelSpec KernelSpec::circle(double t, TruncationPolicy policy) {
  KernelSpec s{Family::Circle, 1, t, policy};
  s.validate();
  return s;
}

KernelSpec KernelSpec::euclidean(int m, double t) {
  KernelSpec s{Family::Euclidean, m, t, TailBound{}};
  s.validate();
  return s;
}

KernelSpec KernelSpec::hyperbolic3(double t) {
  KernelSpec s{Family::Hyperbolic3, 3, t, TailBound{}};
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("diffusion time t must be positive and finite");
  diffmean::validate(truncation);
  switch (family) {
    case Family::Sphere:
      if (dim < 2) throw DomainError("sphere kernel requires dimension m >= 2");
      break;
    case Family::Euclidean:
      if (dim < 1) throw DomainError("euclidean kernel requires dimension m >= 1");
      break;
    case Family::Circle:
      if (dim != 1) throw DomainError("circle kernel has dimension 1");
      break;
    case Family::Hyperbolic3:
      if (dim != 3) throw UnsupportedFamily("hyperbolic kernels are implemented for n = 3 only");
      break;
  }
}

double gegenbauer(int l, double alpha, double x) {
  if (l < 0) throw DomainError("Gegenbauer degree must be nonnegative");
  if (!(alpha > 0.0)) throw DomainError("Gegenbauer parameter must be positive");
  check_cosangle(x);
  if (l == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * alpha * x;
  for (int n = 2; n <= l; ++n) {
    const double next = (2.0 * x * (n + alpha - 1.0) * cur - (n + 2.0 * alpha - 2.0) * prev) / n;
    prev = cur;
    cur = next;
  }
  return cur;
}

double sphere_area(int m) {
  if (m < 0) throw DomainError("sphere dimension must be nonnegative");
  return area_of_sphere<double>(m);
}

SphereJet sphere_jet(const KernelSpec& spec, double cosangle, int max_order, bool with_dt) {
  require_sphere(spec);
  check_cosangle(cosangle);
  if (max_order < 0 || max_order > 3) throw DomainError("derivative order must be in 0..3");

  SphereJet jet;
  if (try_tier<double>(spec, cosangle, max_order, with_dt, kDoubleTarget, 15, jet)) return jet;
  if (try_tier<mp::float128>(spec, cosangle, max_order, with_dt, kExtendedTarget, 33, jet)) return jet;
  if (try_tier<MpReal<50>>(spec, cosangle, max_order, with_dt, kExtendedTarget, 50, jet)) return jet;
  if (try_tier<MpReal<100>>(spec, cosangle, max_order, with_dt, kExtendedTarget, 100, jet)) return jet;
  if (try_tier<MpReal<200>>(spec, cosangle, max_order, with_dt, kExtendedTarget, 200, jet)) return jet;
  if (try_tier<MpReal<400>>(spec, cosangle, max_order, with_dt, kExtendedTarget, 400, jet)) return jet;
  std::ostringstream os;
  os << "truncation-not-converged: cancellation in the sphere series at m=" << spec.dim << " t=" << spec.t
     << " x=" << cosangle << " exceeds 400-digit precision";
  throw TruncationError(os.str());
}

SeriesEval sphere_heat(const KernelSpec& spec, double cosangle) {
  const SphereJet jet = sphere_jet(spec, cosangle, 0);
  return {jet.h[0], jet.terms_used, jet.tail_estimate};
}

SeriesEval sphere_heat_deriv(const KernelSpec& spec, double cosangle, int order) {
  if (order < 1 || order > 3) throw DomainError("sphere_heat_deriv order must be 1, 2 or 3");
  const SphereJet jet = sphere_jet(spec, cosangle, order);
  return {jet.h[order], jet.terms_used, jet.tail_estimate};
}

double sphere_log_heat(const KernelSpec& spec, double cosangle, int order) {
  if (order < 0 || order > 3) throw DomainError("sphere_log_heat order must be in 0..3");
  return sphere_jet(spec, cosangle, order).log_h[order];
}

double sphere_heat_dt(const KernelSpec& spec, double cosangle) {
  return sphere_jet(spec, cosangle, 0, true).h_dt;
}

CircleJet circle_jet(double distance, double t, const TruncationPolicy& policy) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("diffusion time t must be positive and finite");
  validate(policy);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double d = distance;
  const double inv4t = 1.0 / (4.0 * t);

  auto accumulate = [&](double s, CircleJet& acc) {
    const double g = std::exp(-s * s * inv4t);
    acc.value += g;
    acc.d_dist += -s / (2.0 * t) * g;
    acc.d_t += g * (-1.0 / (2.0 * t) + s * s * inv4t / t);
  };

  CircleJet acc;
  accumulate(d, acc);
  const bool fixed = std::holds_alternative<FixedTerms>(policy);
  const int limit = fixed ? std::get<FixedTerms>(policy).terms : std::get<TailBound>(policy).max_terms;
  const double eps = fixed ? 0.0 : std::get<TailBound>(policy).epsilon;
  bool converged = fixed;
  for (int k = 1; k <= limit; ++k) {
    accumulate(d + two_pi * k, acc);
    accumulate(d - two_pi * k, acc);
    if (!fixed) {
      // Both remaining images of index > k sit at distance >= 2π(k+1) - π.
      const double s1 = two_pi * (k + 1) - std::numbers::pi;
      const double s2 = s1 + two_pi;
      const double b1 = 2.0 * std::exp(-s1 * s1 * inv4t) * (1.0 + s1 * s1 * inv4t / t + s1 / t);
      const double b2 = 2.0 * std::exp(-s2 * s2 * inv4t) * (1.0 + s2 * s2 * inv4t / t + s2 / t);
      const double r = b1 > 0 ? b2 / b1 : 0.0;
      const double tail = (b1 == 0.0) ? 0.0 : (r < 1.0 ? b1 / (1.0 - r) : std::numeric_limits<double>::infinity());
      if (tail <= eps * acc.value) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) throw TruncationError("truncation-not-converged: wrapped Gaussian did not reach its tail bound");
  const double c = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
  CircleJet out;
  out.value = c * acc.value;
  out.d_dist = c * acc.d_dist;
  out.d_t = c * acc.d_t;
  return out;
}

double circle_heat(double x, double y, double t, const TruncationPolicy& policy) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double d = std::fmod(std::abs(x - y), two_pi);
  if (d > std::numbers::pi) d = two_pi - d;
  return circle_jet(d, t, policy).value;
}

double euclidean_heat(std::span<const double> x, std::span<const double> y, double t) {
  if (x.size() != y.size()) throw DomainError("euclidean_heat: dimension mismatch");
  if (x.empty()) throw DomainError("euclidean_heat: empty vectors");
  if (!(t > 0.0)) throw DomainError("diffusion time t must be positive");
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    r2 += d * d;
  }
  const double m = static_cast<double>(x.size());
  return std::pow(4.0 * std::numbers::pi * t, -m / 2.0) * std::exp(-r2 / (4.0 * t));
}

double euclidean_log_heat(double squared_distance, int dim, double t) {
  if (!(t > 0.0)) throw DomainError("diffusion time t must be positive");
  return -0.5 * dim * std::log(4.0 * std::numbers::pi * t) - squared_distance / (4.0 * t);
}

double hyperbolic3_heat(double rho, double t) {
  if (!(rho >= 0.0)) throw DomainError("hyperbolic distance rho must be nonnegative");
  if (!(t > 0.0)) throw DomainError("diffusion time t must be positive");
  // ρ / sinh ρ, with the series near 0 and an overflow-free form for large ρ.
  double ratio;
  if (rho < 1e-4) {
    ratio = 1.0 - rho * rho / 6.0;
  } else {
    ratio = 2.0 * rho * std::exp(-rho) / (-std::expm1(-2.0 * rho));
  }
  return std::pow(4.0 * std::numbers::pi * t, -1.5) * ratio * std::exp(-t - rho * rho / (4.0 * t));
}

}  // namespace diffmean
