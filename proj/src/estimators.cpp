#include "diffmean/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "diffmean/error.hpp"

namespace diffmean {

namespace {

constexpr int kMaxShrinks = 80;
constexpr double kTieTolerance = 1e-12;
constexpr double kNonUniqueObjective = 1e-9;
constexpr double kNonUniqueDistance = 1e-3;
// Relative size of rounding noise in a summed objective.
constexpr double kNoiseFloor = 1e-14;
constexpr double kMaxTRatio = 4.0;

struct Eval {
  double value = 0.0;
  Vector grad;  // ambient coordinates, tangent at the evaluation point
};

using EvalFn = std::function<Eval(const Vector&)>;
// Moves x along -grad by step s.
using RetractFn = std::function<Vector(const Vector&, const Vector&, double)>;

struct Run {
  Vector x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
};

Run descend(Vector x, const EvalFn& eval, const RetractFn& retract, const OptimizerConfig& cfg, double max_move,
            double t_label) {
  Run run;
  Eval cur = eval(x);
  double s = cfg.step_size;
  int it = 0;
  for (;; ++it) {
    const double gn = cur.grad.norm();
    run.trace.push_back({it, cur.value, gn, t_label});
    if (gn < cfg.grad_tol) {
      run.converged = true;
      break;
    }
    if (it >= cfg.max_iters) break;
    if (cfg.step_policy == StepPolicy::Fixed) {
      x = retract(x, cur.grad, std::min(cfg.step_size, max_move / gn));
      cur = eval(x);
      continue;
    }
    bool accepted = false;
    s = std::min(s, max_move / gn);
    const double noise = kNoiseFloor * std::max(1.0, std::abs(cur.value));
    for (int k = 0; k < kMaxShrinks; ++k) {
      Vector xn = retract(x, cur.grad, s);
      Eval next = eval(xn);
      const bool armijo = next.value <= cur.value - cfg.sufficient_decrease * s * gn * gn;
      // Near the optimum the Armijo decrease falls below rounding; accept
      // steps that keep the objective within noise and shrink the gradient.
      const bool flat = next.value <= cur.value + noise && next.grad.norm() < gn;
      if (armijo || flat) {
        // Barzilai-Borwein trial step for the next iteration.
        const Vector dx = xn - x;
        const double dg = dx.dot(next.grad - cur.grad);
        x = std::move(xn);
        cur = std::move(next);
        s = dg > 0.0 ? dx.squaredNorm() / dg : 2.0 * s;
        accepted = true;
        break;
      }
      s *= cfg.shrink;
    }
    if (!accepted) break;
  }
  run.x = std::move(x);
  run.value = cur.value;
  run.grad_norm = cur.grad.norm();
  run.iterations = it;
  return run;
}

Vector sphere_retract(const Vector& x, const Vector& g, double s) {
  const UnitVector base(x);
  Vector v = -s * g;
  v -= base.coords().dot(v) * base.coords();
  return exp_map(TangentVector(base, std::move(v))).coords();
}

Vector project(const UnitVector& y, Vector g) {
  g -= y.coords().dot(g) * y.coords();
  return g;
}

void check_sphere_family(const EmpiricalSample& sample, const KernelSpec& spec) {
  spec.validate();
  if (spec.family == Family::Sphere) {
    if (spec.dim != sample.dim()) throw DomainError("kernel dimension does not match sample dimension");
  } else if (spec.family == Family::Circle) {
    if (sample.dim() != 1) throw DomainError("circle kernel requires a sample on S^1");
  } else {
    throw DomainError(std::string("kernel family ") + to_string(spec.family) + " does not match spherical data");
  }
}

void check_euclidean_family(const EuclideanSample& sample, const KernelSpec& spec) {
  spec.validate();
  if (spec.family != Family::Euclidean) throw DomainError("Euclidean data requires the Euclidean kernel");
  if (spec.dim != sample.dim()) throw DomainError("kernel dimension does not match sample dimension");
}

double clamp_cos(double c) { return std::clamp(c, -1.0, 1.0); }

struct SphereTerms {
  double value = 0.0;
  Vector grad;
  double dt = 0.0;
};

// One pass over the sample: value, ambient gradient (projected) and dL/dt.
SphereTerms sphere_terms(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec, bool grad,
                         bool with_dt) {
  SphereTerms out;
  const int n = y.ambient_dim();
  Vector g = Vector::Zero(n);
  if (spec.family == Family::Sphere) {
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const auto& x = sample.points()[i];
      const double w = sample.weight(i);
      if (w == 0.0) continue;
      const SphereJet jet = sphere_jet(spec, clamp_cos(x.dot(y)), grad ? 1 : 0, with_dt);
      out.value -= w * jet.log_h[0];
      if (grad) g -= (w * jet.log_h[1]) * x.coords();
      if (with_dt) out.dt -= w * jet.log_h_dt;
    }
  } else {
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const auto& x = sample.points()[i];
      const double w = sample.weight(i);
      if (w == 0.0) continue;
      const double d = geodesic_distance(x, y);
      const CircleJet jet = circle_jet(d, spec.t, spec.truncation);
      out.value -= w * std::log(jet.value);
      if (with_dt) out.dt -= w * jet.d_t / jet.value;
      if (grad && d > 0.0 && std::numbers::pi - d > kCutLocusTolerance) {
        // ∇_y d = -log_y(x) / d
        const Vector lg = log_map(y, x).vec;
        g += (w * jet.d_dist / (jet.value * d)) * lg;
      }
    }
  }
  if (grad) out.grad = project(y, std::move(g));
  return out;
}

std::optional<UnitVector> normalized_average(const EmpiricalSample& sample) {
  const Vector avg = sample.extrinsic_average();
  if (avg.norm() < 1e-12) return std::nullopt;
  return UnitVector(avg);
}

const char* kDegenerateWarning = "degenerate sample: extrinsic average vanishes, started from canonical point e_0";

// Default start plus `restarts` uniform random starts from split seeds.
std::vector<Vector> sphere_starts(const EmpiricalSample& sample, const OptimizerConfig& cfg,
                                  const std::optional<UnitVector>& init, std::vector<std::string>& warnings) {
  std::vector<Vector> starts;
  if (init) {
    if (init->ambient_dim() != sample.points().front().ambient_dim())
      throw DomainError("initial point dimension does not match sample");
    starts.push_back(init->coords());
  } else if (auto avg = normalized_average(sample)) {
    starts.push_back(avg->coords());
  } else {
    warnings.emplace_back(kDegenerateWarning);
    starts.push_back(UnitVector::basis(sample.dim(), 0).coords());
  }
  for (int k = 0; k < cfg.restarts; ++k) {
    Rng rng(cfg.seed.split(static_cast<std::uint64_t>(k)));
    starts.push_back(uniform_on_sphere(sample.dim(), rng).coords());
  }
  return starts;
}

EstimateReport best_of(std::vector<Run> runs, bool on_sphere) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].value < runs[best].value - kTieTolerance) best = i;
  }
  EstimateReport rep;
  rep.restarts_best_of = static_cast<int>(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i == best || std::abs(runs[i].value - runs[best].value) > kNonUniqueObjective) continue;
    const double dist = on_sphere ? geodesic_distance(UnitVector(runs[i].x), UnitVector(runs[best].x))
                                  : (runs[i].x - runs[best].x).norm();
    if (dist > kNonUniqueDistance) rep.non_unique = true;
  }
  Run& r = runs[best];
  rep.point = std::move(r.x);
  rep.objective = r.value;
  rep.iterations = r.iterations;
  rep.converged = r.converged;
  rep.trace = std::move(r.trace);
  return rep;
}

struct TRun {
  double t = 0.0;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool boundary = false;
  std::vector<TraceEntry> trace;
};

// Projected descent on [t_min, t_max] for f(t) with derivative df(t).
TRun descend_t(const std::function<std::pair<double, double>(double)>& eval, double t0, const OptimizerConfig& cfg) {
  TRun run;
  double t = std::clamp(t0, cfg.t_min, cfg.t_max);
  auto [f, g] = eval(t);
  double s = cfg.step_size;
  auto projected = [&](double tt, double gg) {
    if ((tt <= cfg.t_min && gg > 0.0) || (tt >= cfg.t_max && gg < 0.0)) return 0.0;
    return gg;
  };
  int it = 0;
  for (;; ++it) {
    const double pg = projected(t, g);
    run.trace.push_back({it, f, std::abs(pg), t});
    if (std::abs(pg) < cfg.grad_tol) {
      run.converged = true;
      break;
    }
    if (it >= cfg.max_iters) break;
    if (cfg.step_policy == StepPolicy::Fixed) {
      t = std::clamp(t - cfg.step_size * g, cfg.t_min, cfg.t_max);
      std::tie(f, g) = eval(t);
      continue;
    }
    bool accepted = false;
    const double noise = kNoiseFloor * std::max(1.0, std::abs(f));
    for (int k = 0; k < kMaxShrinks; ++k) {
      // Each trial stays within a factor kMaxTRatio of the current t so that
      // long steps never probe the expensive small-t regime needlessly.
      const double tn = std::clamp(std::clamp(t - s * g, t / kMaxTRatio, t * kMaxTRatio), cfg.t_min, cfg.t_max);
      const auto [fn, gnext] = eval(tn);
      const bool armijo = fn <= f - cfg.sufficient_decrease * g * (t - tn);
      const bool flat = fn <= f + noise && std::abs(projected(tn, gnext)) < std::abs(pg);
      if (tn != t && (armijo || flat)) {
        const double dt = tn - t;
        const double dg = gnext - g;
        t = tn;
        f = fn;
        g = gnext;
        s = dt * dg > 0.0 ? dt / dg : 2.0 * s;
        accepted = true;
        break;
      }
      s *= cfg.shrink;
    }
    if (!accepted) break;
  }
  run.t = t;
  run.value = f;
  run.iterations = it;
  run.boundary = (t <= cfg.t_min || t >= cfg.t_max);
  return run;
}

EstimateReport t_report(TRun run, Vector point) {
  EstimateReport rep;
  rep.point = std::move(point);
  rep.t = run.t;
  rep.objective = run.value;
  rep.iterations = run.iterations;
  rep.converged = run.converged;
  rep.boundary_hit = run.boundary;
  rep.trace = std::move(run.trace);
  if (rep.boundary_hit) rep.warnings.emplace_back("optimum of t lies on the boundary of the search box");
  return rep;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (max_iters < 1) throw DomainError("max_iters must be at least 1");
  if (!(grad_tol > 0.0)) throw DomainError("grad_tol must be positive");
  if (!(step_size > 0.0)) throw DomainError("step_size must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw DomainError("shrink must lie in (0, 1)");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
    throw DomainError("sufficient_decrease must lie in (0, 1)");
  if (restarts < 0) throw DomainError("restarts must be nonnegative");
  if (!(t_min > 0.0 && t_max > t_min)) throw DomainError("t box must satisfy 0 < t_min < t_max");
}

EuclideanSample::EuclideanSample(std::vector<Vector> points, std::optional<std::vector<double>> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) throw DomainError("Euclidean sample must be nonempty");
  for (const auto& p : points_) {
    if (p.size() != points_.front().size() || p.size() < 1) throw DomainError("inconsistent point dimensions");
  }
  if (weights_) {
    if (weights_->size() != points_.size()) throw DomainError("weights and points differ in length");
    double total = 0.0;
    for (double w : *weights_) {
      if (!(w >= 0.0)) throw DomainError("sample weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("sample weights must sum to 1");
  }
}

Vector EuclideanSample::mean() const {
  Vector acc = Vector::Zero(dim());
  for (std::size_t i = 0; i < points_.size(); ++i) acc += weight(i) * points_[i];
  return acc;
}

double sample_log_likelihood(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec) {
  check_sphere_family(sample, spec);
  return sphere_terms(sample, y, spec, false, false).value;
}

double sample_log_likelihood(const EuclideanSample& sample, const Vector& y, const KernelSpec& spec) {
  check_euclidean_family(sample, spec);
  if (y.size() != sample.dim()) throw DomainError("point dimension does not match sample");
  double acc = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i)
    acc -= sample.weight(i) * euclidean_log_heat((sample.points()[i] - y).squaredNorm(), sample.dim(), spec.t);
  return acc;
}

TangentVector riemannian_gradient(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec) {
  check_sphere_family(sample, spec);
  return TangentVector(y, sphere_terms(sample, y, spec, true, false).grad);
}

Vector likelihood_gradient(const EuclideanSample& sample, const Vector& y, const KernelSpec& spec) {
  check_euclidean_family(sample, spec);
  return (y - sample.mean()) / (2.0 * spec.t);
}

double likelihood_dt(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec) {
  check_sphere_family(sample, spec);
  return sphere_terms(sample, y, spec, false, true).dt;
}

double likelihood_dt(const EuclideanSample& sample, const Vector& y, const KernelSpec& spec) {
  check_euclidean_family(sample, spec);
  double r2 = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) r2 += sample.weight(i) * (sample.points()[i] - y).squaredNorm();
  const double t = spec.t;
  return sample.dim() / (2.0 * t) - r2 / (4.0 * t * t);
}

double frechet_objective(const EmpiricalSample& sample, const UnitVector& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double d = geodesic_distance(sample.points()[i], y);
    acc += sample.weight(i) * d * d;
  }
  return acc;
}

EstimateReport estimate_diffusion_mean(const EmpiricalSample& sample, const KernelSpec& spec,
                                       const OptimizerConfig& config, const std::optional<UnitVector>& init) {
  check_sphere_family(sample, spec);
  config.validate();
  EvalFn eval = [&](const Vector& x) {
    const UnitVector y(x);
    SphereTerms st = sphere_terms(sample, y, spec, true, false);
    return Eval{st.value, std::move(st.grad)};
  };
  std::vector<std::string> warnings;
  std::vector<Run> runs;
  for (const Vector& x0 : sphere_starts(sample, config, init, warnings))
    runs.push_back(descend(x0, eval, sphere_retract, config, std::numbers::pi / 2, spec.t));
  EstimateReport rep = best_of(std::move(runs), true);
  rep.t = spec.t;
  // Recompute at the normalized reported point.
  rep.point = UnitVector(rep.point).coords();
  rep.objective = sample_log_likelihood(sample, UnitVector(rep.point), spec);
  rep.warnings.insert(rep.warnings.begin(), warnings.begin(), warnings.end());
  if (rep.non_unique) rep.warnings.emplace_back("distinct starts reached equally good minima; mean set is not a singleton");
  if (!rep.converged) rep.warnings.emplace_back("gradient norm did not fall below grad_tol");
  return rep;
}

EstimateReport estimate_diffusion_mean(const EuclideanSample& sample, const KernelSpec& spec,
                                       const OptimizerConfig& config, const std::optional<Vector>& init) {
  check_euclidean_family(sample, spec);
  config.validate();
  const Vector mean = sample.mean();
  EvalFn eval = [&](const Vector& y) {
    return Eval{sample_log_likelihood(sample, y, spec), (y - mean) / (2.0 * spec.t)};
  };
  RetractFn step = [](const Vector& x, const Vector& g, double s) -> Vector { return x - s * g; };
  std::vector<Vector> starts;
  if (init) {
    if (init->size() != sample.dim()) throw DomainError("initial point dimension does not match sample");
    starts.push_back(*init);
  } else {
    starts.push_back(mean);
  }
  std::vector<Run> runs;
  for (const Vector& x0 : starts)
    runs.push_back(descend(x0, eval, step, config, std::numeric_limits<double>::infinity(), spec.t));
  EstimateReport rep = best_of(std::move(runs), false);
  rep.t = spec.t;
  rep.objective = sample_log_likelihood(sample, rep.point, spec);
  if (!rep.converged) rep.warnings.emplace_back("gradient norm did not fall below grad_tol");
  return rep;
}

EstimateReport estimate_frechet_mean(const EmpiricalSample& sample, const OptimizerConfig& config,
                                     const std::optional<UnitVector>& init) {
  config.validate();
  EvalFn eval = [&](const Vector& x) {
    const UnitVector y(x);
    Vector g = Vector::Zero(y.ambient_dim());
    double value = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const auto& p = sample.points()[i];
      const double w = sample.weight(i);
      const double d = geodesic_distance(p, y);
      value += w * d * d;
      // Antipodal points contribute no gradient.
      if (std::numbers::pi - d < kCutLocusTolerance || d == 0.0) continue;
      g -= (2.0 * w) * log_map(y, p).vec;
    }
    return Eval{value, project(y, std::move(g))};
  };
  std::vector<std::string> warnings;
  std::vector<Run> runs;
  for (const Vector& x0 : sphere_starts(sample, config, init, warnings))
    runs.push_back(descend(x0, eval, sphere_retract, config, std::numbers::pi / 2, 0.0));
  EstimateReport rep = best_of(std::move(runs), true);
  rep.point = UnitVector(rep.point).coords();
  rep.objective = frechet_objective(sample, UnitVector(rep.point));
  rep.warnings.insert(rep.warnings.begin(), warnings.begin(), warnings.end());
  if (rep.non_unique) rep.warnings.emplace_back("distinct starts reached equally good minima; mean set is not a singleton");
  if (!rep.converged) rep.warnings.emplace_back("gradient norm did not fall below grad_tol");
  return rep;
}

EstimateReport estimate_t(const EmpiricalSample& sample, const UnitVector& y, const KernelSpec& spec,
                          const OptimizerConfig& config, double t_init) {
  check_sphere_family(sample, spec);
  config.validate();
  if (!(t_init > 0.0)) throw DomainError("t_init must be positive");
  auto eval = [&](double t) {
    const SphereTerms st = sphere_terms(sample, y, spec.with_t(t), false, true);
    return std::pair{st.value, st.dt};
  };
  return t_report(descend_t(eval, t_init, config), y.coords());
}

EstimateReport estimate_t(const EuclideanSample& sample, const Vector& y, const KernelSpec& spec,
                          const OptimizerConfig& config, double t_init) {
  check_euclidean_family(sample, spec);
  config.validate();
  if (!(t_init > 0.0)) throw DomainError("t_init must be positive");
  auto eval = [&](double t) {
    const KernelSpec s = spec.with_t(t);
    return std::pair{sample_log_likelihood(sample, y, s), likelihood_dt(sample, y, s)};
  };
  return t_report(descend_t(eval, t_init, config), y);
}

EstimateReport estimate_joint(const EmpiricalSample& sample, const KernelSpec& spec, const OptimizerConfig& config,
                              std::optional<double> t_init) {
  check_sphere_family(sample, spec);
  config.validate();
  std::vector<std::string> warnings;
  UnitVector y = UnitVector::basis(sample.dim(), 0);
  if (auto avg = normalized_average(sample)) {
    y = *avg;
  } else {
    warnings.emplace_back(kDegenerateWarning);
  }
  double t = 0.0;
  if (t_init) {
    if (!(*t_init > 0.0)) throw DomainError("t_init must be positive");
    t = *t_init;
  } else {
    t = frechet_objective(sample, y) / sample.dim();
  }
  t = std::clamp(t, config.t_min, config.t_max);

  EstimateReport rep;
  double objective = sample_log_likelihood(sample, y, spec.with_t(t));
  rep.trace.push_back({0, objective, 0.0, t});
  bool converged = false;
  bool boundary = false;
  int round = 1;
  for (; round <= config.max_iters; ++round) {
    OptimizerConfig inner = config;
    if (round > 1) inner.restarts = 0;
    EstimateReport m = estimate_diffusion_mean(sample, spec.with_t(t), inner, y);
    // Warm starts only from the incumbent; accept the mean step only if it
    // does not increase the joint objective.
    if (m.objective <= objective) y = m.unit_point();
    EstimateReport tr = estimate_t(sample, y, spec, config, t);
    const double next = tr.objective;
    const double gy = riemannian_gradient(sample, y, spec.with_t(*tr.t)).norm();
    const double gt = tr.trace.back().grad_norm;
    if (next <= objective) t = *tr.t;
    boundary = tr.boundary_hit;
    const double new_obj = std::min(next, objective);
    rep.trace.push_back({round, new_obj, std::hypot(gy, gt), t});
    const double decrease = objective - new_obj;
    objective = new_obj;
    if (decrease < config.grad_tol) {
      converged = m.converged && tr.converged;
      break;
    }
  }
  rep.point = y.coords();
  rep.t = t;
  rep.objective = sample_log_likelihood(sample, y, spec.with_t(t));
  rep.iterations = std::min(round, config.max_iters);
  rep.converged = converged;
  rep.boundary_hit = boundary || t <= config.t_min || t >= config.t_max;
  rep.restarts_best_of = config.restarts + 1;
  rep.warnings = std::move(warnings);
  if (rep.boundary_hit) rep.warnings.emplace_back("optimum of t lies on the boundary of the search box");
  if (!rep.converged) rep.warnings.emplace_back("block coordinate descent did not converge");
  return rep;
}

}  // namespace diffmean
