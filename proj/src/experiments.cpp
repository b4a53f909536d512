#include "diffmean/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "diffmean/error.hpp"
#include "diffmean/serialize.hpp"

namespace diffmean {

namespace {

// Stream index reserved for slope standard-error resampling.
constexpr std::uint64_t kStderrStream = 0xffffffffffffffffULL;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct ReplicateResult {
  std::vector<Vector> estimate;  // per tag
  std::vector<bool> converged;
};

KernelSpec spherical_kernel(int dim, double t) {
  return dim == 1 ? KernelSpec::circle(t) : KernelSpec::sphere(dim, t);
}

std::pair<Vector, bool> estimate_on_sphere(const EmpiricalSample& s, const EstimatorTag& tag,
                                           const OptimizerConfig& cfg) {
  EstimateReport r;
  switch (tag.kind) {
    case EstimatorTag::Kind::Frechet: r = estimate_frechet_mean(s, cfg); break;
    case EstimatorTag::Kind::Diffusion: r = estimate_diffusion_mean(s, spherical_kernel(s.dim(), tag.t), cfg); break;
    case EstimatorTag::Kind::JointDiffusion: r = estimate_joint(s, spherical_kernel(s.dim(), 1.0), cfg); break;
  }
  return {std::move(r.point), r.converged};
}

std::pair<Vector, bool> estimate_euclidean(const EuclideanSample& s, const EstimatorTag& tag,
                                           const OptimizerConfig& cfg) {
  switch (tag.kind) {
    case EstimatorTag::Kind::Frechet: return {s.mean(), true};
    case EstimatorTag::Kind::Diffusion: {
      EstimateReport r = estimate_diffusion_mean(s, KernelSpec::euclidean(s.dim(), tag.t), cfg);
      return {std::move(r.point), r.converged};
    }
    case EstimatorTag::Kind::JointDiffusion: {
      EstimateReport m = estimate_diffusion_mean(s, KernelSpec::euclidean(s.dim(), 1.0), cfg);
      EstimateReport t = estimate_t(s, m.point, KernelSpec::euclidean(s.dim(), 1.0), cfg, 1.0);
      return {std::move(m.point), m.converged && t.converged};
    }
  }
  return {};
}

EmpiricalSample resample(const EmpiricalSample& data, std::size_t n, Rng& rng) {
  std::vector<UnitVector> pts;
  pts.reserve(n);
  if (data.weights()) {
    std::discrete_distribution<std::size_t> pick(data.weights()->begin(), data.weights()->end());
    for (std::size_t i = 0; i < n; ++i) pts.push_back(data.points()[pick(rng.engine())]);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(data.points()[pick(rng.engine())]);
  }
  return EmpiricalSample(std::move(pts));
}

EuclideanSample gaussian_sample(const EuclideanGaussian& g, std::size_t n, Rng& rng) {
  const double sd = std::sqrt(g.sigma2);
  std::vector<Vector> pts(n, Vector(g.dim));
  for (auto& p : pts)
    for (int i = 0; i < g.dim; ++i) p[i] = sd * rng.normal();
  return EuclideanSample(std::move(pts));
}

void validate_source(const ScalingSource& source) {
  if (const auto* d = std::get_if<DistributionSpec>(&source)) d->validate();
  if (const auto* g = std::get_if<EuclideanGaussian>(&source)) {
    if (g->dim < 1 || !(g->sigma2 > 0.0)) throw DomainError("EuclideanGaussian needs dim >= 1 and sigma2 > 0");
  }
}

// n * trace of the sample covariance of the kept tangent vectors.
double scaled_trace(const std::vector<const Vector*>& v, int n) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  Vector mean = Vector::Zero(v.front()->size());
  for (const Vector* x : v) mean += *x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (const Vector* x : v) ss += (*x - mean).squaredNorm();
  return n * ss / static_cast<double>(v.size() - 1);
}

template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string EstimatorTag::label() const {
  switch (kind) {
    case Kind::Frechet: return "frechet";
    case Kind::JointDiffusion: return "joint";
    case Kind::Diffusion: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "diffusion-t%g", t);
      return buf;
    }
  }
  return "?";
}

EstimatorTag EstimatorTag::parse(const std::string& label) {
  if (label == "frechet") return frechet();
  if (label == "joint") return joint();
  const std::string prefix = "diffusion-t";
  if (label.rfind(prefix, 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string rest = label.substr(prefix.size());
      const double t = std::stod(rest, &used);
      if (used == rest.size() && t > 0.0) return diffusion(t);
    } catch (const std::exception&) {
    }
  }
  throw ParseError("unknown estimator tag '" + label + "' (expected frechet, joint or diffusion-t<t>)", 0);
}

std::vector<int> default_n_grid() { return {30, 100, 300, 1000, 3000}; }

int default_thread_count() {
  if (const char* env = std::getenv("DIFFMEAN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  return 1;
}

double fit_loglog_slope(const std::vector<int>& n_grid, const std::vector<double>& scaled_variance) {
  if (n_grid.size() != scaled_variance.size() || n_grid.size() < 2)
    throw DomainError("slope fit needs at least two (n, variance) pairs");
  const std::size_t k = n_grid.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(scaled_variance[i] > 0.0)) throw DomainError("slope fit needs positive scaled variances");
    mx += std::log(static_cast<double>(n_grid[i]));
    my += std::log(scaled_variance[i]);
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(static_cast<double>(n_grid[i])) - mx;
    sxy += dx * (std::log(scaled_variance[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<ScalingTable> bootstrap_scaling(const ScalingSource& source, const std::vector<EstimatorTag>& tags,
                                            const std::vector<int>& n_grid, int replicates,
                                            const OptimizerConfig& config, RandomSeed seed,
                                            const BootstrapOptions& options) {
  validate_source(source);
  config.validate();
  if (tags.empty()) throw DomainError("bootstrap_scaling needs at least one estimator");
  if (replicates < kMinReplicates)
    throw DomainError("bootstrap_scaling needs at least " + std::to_string(kMinReplicates) + " replicates");
  if (n_grid.size() < 2) throw DomainError("n_grid needs at least two sizes");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1 || (i > 0 && n_grid[i] <= n_grid[i - 1]))
      throw DomainError("n_grid must be strictly increasing positive sizes");
  }
  const bool euclid = std::holds_alternative<EuclideanGaussian>(source);
  const std::size_t T = tags.size();

  // Base points for the tangent-space covariance.
  std::vector<Vector> base(T);
  if (const auto* d = std::get_if<DistributionSpec>(&source)) {
    for (auto& b : base) b = d->reference_point().coords();
  } else if (const auto* s = std::get_if<EmpiricalSample>(&source)) {
    for (std::size_t j = 0; j < T; ++j) base[j] = estimate_on_sphere(*s, tags[j], config).first;
  } else {
    for (auto& b : base) b = Vector::Zero(std::get<EuclideanGaussian>(source).dim);
  }

  const std::size_t K = n_grid.size();
  const std::size_t B = static_cast<std::size_t>(replicates);
  std::vector<ReplicateResult> results(K * B);
  const int threads = options.threads > 0 ? options.threads : default_thread_count();
  parallel_for(K * B, threads, [&](std::size_t job) {
    const std::size_t k = job / B;
    const std::size_t b = job % B;
    const RandomSeed rs = seed.split(k).split(b);
    const auto n = static_cast<std::size_t>(n_grid[k]);
    ReplicateResult& out = results[job];
    out.estimate.resize(T);
    out.converged.resize(T);
    if (euclid) {
      Rng rng(rs);
      const EuclideanSample s = gaussian_sample(std::get<EuclideanGaussian>(source), n, rng);
      for (std::size_t j = 0; j < T; ++j) {
        auto [x, ok] = estimate_euclidean(s, tags[j], config);
        out.estimate[j] = std::move(x);
        out.converged[j] = ok;
      }
      return;
    }
    std::optional<EmpiricalSample> s;
    if (const auto* d = std::get_if<DistributionSpec>(&source)) {
      s = draw(*d, n, rs);
    } else {
      Rng rng(rs);
      s = resample(std::get<EmpiricalSample>(source), n, rng);
    }
    for (std::size_t j = 0; j < T; ++j) {
      auto [x, ok] = estimate_on_sphere(*s, tags[j], config);
      out.estimate[j] = std::move(x);
      out.converged[j] = ok;
    }
  });

  std::vector<ScalingTable> tables;
  for (std::size_t j = 0; j < T; ++j) {
    ScalingTable tab;
    tab.n_grid = n_grid;
    tab.replicates = replicates;
    tab.seed = seed;
    tab.tag = tags[j];
    // tangent[k] holds the kept replicate tangent vectors at size n_grid[k].
    std::vector<std::vector<Vector>> tangent(K);
    for (std::size_t k = 0; k < K; ++k) {
      int dropped = 0;
      int bad = 0;
      const UnitVector* ub = nullptr;
      std::optional<UnitVector> base_unit;
      if (!euclid) {
        base_unit.emplace(base[j]);
        ub = &*base_unit;
      }
      for (std::size_t b = 0; b < B; ++b) {
        const ReplicateResult& r = results[k * B + b];
        if (!r.converged[j]) ++bad;
        if (euclid) {
          tangent[k].push_back(r.estimate[j] - base[j]);
          continue;
        }
        const UnitVector est(r.estimate[j]);
        if (std::numbers::pi - geodesic_distance(*ub, est) < kCutLocusTolerance) {
          ++dropped;
          continue;
        }
        tangent[k].push_back(log_map(*ub, est).vec);
      }
      if (bad > options.max_nonconverged_fraction * replicates) {
        std::ostringstream os;
        os << "bootstrap aborted: estimator " << tags[j].label() << " failed to converge on " << bad << " of "
           << replicates << " replicates at n = " << n_grid[k];
        throw NumericalError(os.str());
      }
      tab.dropped.push_back(dropped);
      tab.nonconverged.push_back(bad);
      std::vector<const Vector*> ptrs;
      for (const auto& v : tangent[k]) ptrs.push_back(&v);
      tab.scaled_variance.push_back(scaled_trace(ptrs, n_grid[k]));
    }
    tab.fitted_slope = fit_loglog_slope(tab.n_grid, tab.scaled_variance);

    // Standard error of the slope by resampling the replicate estimates.
    const RandomSeed es = seed.split(kStderrStream).split(j);
    std::vector<double> slopes;
    for (int r = 0; r < options.slope_resamples; ++r) {
      Rng rng(es.split(static_cast<std::uint64_t>(r)));
      std::vector<double> sv;
      for (std::size_t k = 0; k < K; ++k) {
        const auto& pool = tangent[k];
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        std::vector<const Vector*> ptrs;
        for (std::size_t b = 0; b < pool.size(); ++b) ptrs.push_back(&pool[pick(rng.engine())]);
        sv.push_back(scaled_trace(ptrs, n_grid[k]));
      }
      bool ok = true;
      for (double v : sv) ok = ok && v > 0.0;
      if (ok) slopes.push_back(fit_loglog_slope(tab.n_grid, sv));
    }
    if (slopes.size() >= 2) {
      double m = 0.0;
      for (double s : slopes) m += s;
      m /= slopes.size();
      double ss = 0.0;
      for (double s : slopes) ss += (s - m) * (s - m);
      tab.slope_stderr = std::sqrt(ss / (slopes.size() - 1));
    }
    tables.push_back(std::move(tab));
  }
  return tables;
}

ScalingTable bootstrap_scaling(const ScalingSource& source, const EstimatorTag& tag, const std::vector<int>& n_grid,
                               int replicates, const OptimizerConfig& config, RandomSeed seed,
                               const BootstrapOptions& options) {
  return bootstrap_scaling(source, std::vector<EstimatorTag>{tag}, n_grid, replicates, config, seed, options)
      .front();
}

TTrace t_trace(const EmpiricalSample& sample, const UnitVector& y, double t_init, const OptimizerConfig& config,
               const TruncationPolicy& policy) {
  KernelSpec spec = sample.dim() == 1 ? KernelSpec::circle(t_init, policy) : KernelSpec::sphere(sample.dim(), t_init, policy);
  const EstimateReport r = estimate_t(sample, y, spec, config, t_init);
  TTrace tr;
  for (const auto& e : r.trace) {
    tr.t.push_back(e.t);
    tr.objective.push_back(e.objective);
  }
  tr.final_t = *r.t;
  tr.converged = r.converged;
  tr.boundary_hit = r.boundary_hit;
  return tr;
}

TTrace t_trace(const DistributionSpec& source, const UnitVector& y, double t_init, const OptimizerConfig& config,
               std::size_t n, RandomSeed seed, const TruncationPolicy& policy) {
  const EmpiricalSample s = n == 0 ? population_sample(source) : draw(source, n, seed);
  return t_trace(s, y, t_init, config, policy);
}

std::string artifact_name(const std::string& experiment, const std::string& tag, RandomSeed seed,
                          ExportFormat format) {
  return experiment + "_" + tag + "_" + std::to_string(seed.value) + (format == ExportFormat::CSV ? ".csv" : ".json");
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

void export_table(const ScalingTable& table, const std::filesystem::path& path, ExportFormat format) {
  auto out = open_out(path);
  if (format == ExportFormat::JSON) {
    out << to_json(table).dump(2) << '\n';
  } else {
    out << "n,scaled_variance,dropped,nonconverged\n";
    for (std::size_t i = 0; i < table.n_grid.size(); ++i) {
      out << table.n_grid[i] << ',' << format_double(table.scaled_variance[i]) << ','
          << (i < table.dropped.size() ? table.dropped[i] : 0) << ','
          << (i < table.nonconverged.size() ? table.nonconverged[i] : 0) << '\n';
    }
  }
  finish(out, path);
}

void export_table(const LikelihoodProfile& profile, const std::filesystem::path& path, ExportFormat format) {
  auto out = open_out(path);
  if (format == ExportFormat::JSON) {
    out << to_json(profile).dump(2) << '\n';
  } else {
    out << "delta,value\n";
    for (std::size_t i = 0; i < profile.delta_grid.size(); ++i)
      out << format_double(profile.delta_grid[i]) << ',' << format_double(profile.values[i]) << '\n';
  }
  finish(out, path);
}

void export_table(const TTrace& trace, const std::filesystem::path& path, ExportFormat format) {
  auto out = open_out(path);
  if (format == ExportFormat::JSON) {
    out << to_json(trace).dump(2) << '\n';
  } else {
    out << "iteration,t,objective\n";
    for (std::size_t i = 0; i < trace.t.size(); ++i)
      out << i << ',' << format_double(trace.t[i]) << ',' << format_double(trace.objective[i]) << '\n';
  }
  finish(out, path);
}

ScalingTable import_scaling_table_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what(), 0);
  }
  return scaling_table_from_json(j);
}

ScalingTable import_scaling_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  ScalingTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c, d;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c, ',') ||
        !std::getline(row, d))
      throw ParseError("'" + path.string() + "' line " + std::to_string(line_no) + ": expected 4 columns", line_no);
    try {
      t.n_grid.push_back(std::stoi(a));
      t.scaled_variance.push_back(std::stod(b));
      t.dropped.push_back(std::stoi(c));
      t.nonconverged.push_back(std::stoi(d));
    } catch (const std::exception&) {
      throw ParseError("'" + path.string() + "' line " + std::to_string(line_no) + ": bad number", line_no);
    }
  }
  if (t.n_grid.size() >= 2) t.fitted_slope = fit_loglog_slope(t.n_grid, t.scaled_variance);
  return t;
}

}  // namespace diffmean
