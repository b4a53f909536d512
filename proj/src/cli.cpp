#include "diffmean/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <array>
#include <iomanip>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "diffmean/analysis.hpp"
#include "diffmean/checks.hpp"
#include "diffmean/error.hpp"
#include "diffmean/estimators.hpp"
#include "diffmean/experiments.hpp"
#include "diffmean/graph.hpp"
#include "diffmean/sampling.hpp"
#include "diffmean/serialize.hpp"

namespace diffmean {

namespace {

// Bad combination of otherwise well-formed flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A check subcommand ran but its invariant failed.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw UsageError(std::string(what) + ": empty list");
  return out;
}

struct KernelOpts {
  std::string kernel = "sphere";
  int dim = 2;
  double t = 1.0;
  int terms = 0;  // > 0 selects FixedTerms
  double epsilon = 1e-12;
  int max_terms = 10000;

  TruncationPolicy policy() const {
    if (terms > 0) return FixedTerms{terms};
    return TailBound{epsilon, max_terms};
  }
  KernelSpec spec() const {
    KernelSpec s;
    s.family = family_from_string(kernel);
    s.dim = s.family == Family::Circle ? 1 : (s.family == Family::Hyperbolic3 ? 3 : dim);
    s.t = t;
    s.truncation = policy();
    s.validate();
    return s;
  }
};

void add_kernel_options(CLI::App* app, KernelOpts& k, bool with_family = true) {
  if (with_family)
    app->add_option("--kernel", k.kernel, "Kernel family")
        ->check(CLI::IsMember({"sphere", "circle", "euclidean", "hyperbolic3"}))
        ->capture_default_str();
  app->add_option("--dim", k.dim, "Dimension m (S^m or R^m)")->capture_default_str();
  app->add_option("--t", k.t, "Diffusion time")->capture_default_str();
  app->add_option("--terms", k.terms, "Fixed number of series terms (0 = tail bound)")->capture_default_str();
  app->add_option("--epsilon", k.epsilon, "Relative tail-bound tolerance")->capture_default_str();
  app->add_option("--max-terms", k.max_terms, "Term budget for the tail bound")->capture_default_str();
}

struct SourceOpts {
  std::string input;
  std::string input_format = "latlon";
  bool radians = false;
  std::string dist;
  double alpha = -1.0;  // < 0: distribution default
  double sigma2 = -1.0;
  std::size_t n = 1000;
  bool population = false;
};

void add_source_options(CLI::App* app, SourceOpts& s, bool allow_input = true) {
  if (allow_input) {
    app->add_option("--input", s.input, "Data file");
    app->add_option("--input-format", s.input_format, "latlon (S^2, degrees) or xyz (ambient coordinates)")
        ->check(CLI::IsMember({"latlon", "xyz"}))
        ->capture_default_str();
    app->add_flag("--radians", s.radians, "lat/lon input in radians");
  }
  app->add_option("--dist", s.dist, "Synthetic source: two-pole, bimodal, hemisphere, brownian")
      ->check(CLI::IsMember({"two-pole", "bimodal", "hemisphere", "brownian", "euclidean-gaussian"}));
  app->add_option("--alpha", s.alpha, "Mixture weight of the distribution");
  app->add_option("--sigma2", s.sigma2, "Brownian walk time / Gaussian variance");
  app->add_option("--n", s.n, "Sample size for synthetic sources")->capture_default_str();
  app->add_flag("--population", s.population, "Use exact population weights (two-pole only)");
}

DistributionSpec make_distribution(const SourceOpts& s, int dim) {
  DistributionSpec d;
  d.dim = dim;
  if (s.dist == "two-pole") {
    d.variant = TwoPole{s.alpha >= 0 ? s.alpha : 0.0};
  } else if (s.dist == "bimodal") {
    BimodalBrownianNormal b;
    if (s.alpha >= 0) b.alpha = s.alpha;
    if (s.sigma2 > 0) b.sigma2 = s.sigma2;
    d.variant = b;
  } else if (s.dist == "hemisphere") {
    HemispherePointMass h;
    if (s.alpha >= 0) h.alpha = s.alpha;
    d.variant = h;
  } else if (s.dist == "brownian") {
    BrownianNormal b;
    if (s.sigma2 > 0) b.sigma2 = s.sigma2;
    d.variant = b;
  } else {
    throw UsageError("--dist '" + s.dist + "' is not a spherical distribution");
  }
  d.validate();
  return d;
}

Json source_json(const SourceOpts& s, int dim, std::uint64_t seed) {
  if (!s.input.empty())
    return Json{{"input", s.input}, {"input_format", s.input_format}, {"radians", s.radians}};
  if (s.dist == "euclidean-gaussian")
    return Json{{"distribution", Json{{"name", "euclidean-gaussian"}, {"dim", dim}, {"sigma2", s.sigma2 > 0 ? s.sigma2 : 1.0}}},
                {"n", s.n},
                {"seed", seed}};
  Json j{{"distribution", to_json(make_distribution(s, dim))}, {"population", s.population}};
  if (!s.population) {
    j["n"] = s.n;
    j["seed"] = seed;
  }
  return j;
}

EmpiricalSample load_sample(const SourceOpts& s, int dim, RandomSeed seed) {
  if (!s.input.empty() && !s.dist.empty()) throw UsageError("--input and --dist are mutually exclusive");
  if (!s.input.empty()) {
    if (s.input_format == "latlon") {
      LatLonConvention conv;
      conv.unit = s.radians ? LatLonConvention::Unit::Radians : LatLonConvention::Unit::Degrees;
      return ingest_latlon_csv(s.input, conv);
    }
    return to_sphere_sample(load_vectors_csv(s.input));
  }
  if (s.dist.empty()) throw UsageError("a data source is required: --input FILE or --dist NAME");
  const DistributionSpec d = make_distribution(s, dim);
  if (s.population) return population_sample(d);
  return draw(d, s.n, seed);
}

struct OptOpts {
  OptimizerConfig cfg;
  std::string policy = "backtracking";

  OptimizerConfig resolve(std::uint64_t seed) const {
    OptimizerConfig c = cfg;
    c.step_policy = policy == "fixed" ? StepPolicy::Fixed : StepPolicy::Backtracking;
    c.seed = RandomSeed{seed};
    c.validate();
    return c;
  }
};

void add_optimizer_options(CLI::App* app, OptOpts& o) {
  app->add_option("--max-iters", o.cfg.max_iters, "Iteration cap")->capture_default_str();
  app->add_option("--grad-tol", o.cfg.grad_tol, "Gradient-norm convergence threshold")->capture_default_str();
  app->add_option("--step", o.cfg.step_size, "Step size (learning rate for --step-policy fixed)")->capture_default_str();
  app->add_option("--step-policy", o.policy, "fixed or backtracking")
      ->check(CLI::IsMember({"fixed", "backtracking"}))
      ->capture_default_str();
  app->add_option("--restarts", o.cfg.restarts, "Additional random starts")->capture_default_str();
  app->add_option("--t-min", o.cfg.t_min, "Lower end of the t box")->capture_default_str();
  app->add_option("--t-max", o.cfg.t_max, "Upper end of the t box")->capture_default_str();
}

struct OutOpts {
  std::string out;
  std::string format;  // empty: command default
};

void add_output_options(CLI::App* app, OutOpts& o) {
  app->add_option("--out", o.out, "Write results to this file instead of stdout");
  app->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::uint64_t seed = 0;
  int verbosity = 0;
};

void write_text(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("write to '" + path + "' failed");
}

// JSON results embed the config; CSV results get a '#' config line on
// stdout or a <out>.config.json sidecar next to the file.
void emit(Context& ctx, const OutOpts& o, const std::string& command, const Json& config, const Json& result,
          const std::string& csv, const std::string& default_format) {
  const std::string format = o.format.empty() ? default_format : o.format;
  if (format == "csv" && !csv.empty()) {
    if (o.out.empty()) {
      ctx.out << "# " << Json{{"command", command}, {"config", config}}.dump() << '\n' << csv;
    } else {
      write_text(csv, o.out, ctx.out);
      write_text(Json{{"command", command}, {"config", config}}.dump(2) + "\n", o.out + ".config.json", ctx.out);
    }
    return;
  }
  write_text(Json{{"command", command}, {"config", config}, {"result", result}}.dump(2) + "\n", o.out, ctx.out);
}

UnitVector parse_point(const std::string& text, int dim) {
  if (text.empty() || text == "north") return UnitVector::north_pole(dim);
  const std::vector<double> v = parse_doubles(text, "--at");
  if (static_cast<int>(v.size()) != dim + 1)
    throw UsageError("--at needs " + std::to_string(dim + 1) + " coordinates");
  return UnitVector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
}


// ---- subcommands --------------------------------------------------------

struct KernelCmd {
  KernelOpts k;
  double x = 1.0;
  int order = 0;
  bool log = false;
  bool dt = false;
  OutOpts o;

  void run(Context& ctx) const {
    const KernelSpec spec = k.spec();
    Json result;
    switch (spec.family) {
      case Family::Sphere: {
        const SphereJet jet = sphere_jet(spec, x, order, dt);
        result["value"] = log ? jet.log_h[order] : jet.h[order];
        if (dt) result["dt"] = log ? jet.log_h_dt : jet.h_dt;
        result["terms_used"] = jet.terms_used;
        result["tail_estimate"] = jet.tail_estimate;
        result["precision_digits"] = jet.precision_digits;
        break;
      }
      case Family::Circle: {
        if (order > 1) throw UsageError("circle kernel supports --order 0 or 1 (distance derivative)");
        const CircleJet jet = circle_jet(x, spec.t, spec.truncation);
        const double v = order == 0 ? jet.value : jet.d_dist;
        result["value"] = log ? (order == 0 ? std::log(jet.value) : jet.d_dist / jet.value) : v;
        if (dt) result["dt"] = log ? jet.d_t / jet.value : jet.d_t;
        break;
      }
      case Family::Euclidean: {
        if (order != 0 || dt) throw UsageError("euclidean kernel supports value only");
        const double lp = euclidean_log_heat(x * x, spec.dim, spec.t);
        result["value"] = log ? lp : std::exp(lp);
        break;
      }
      case Family::Hyperbolic3: {
        if (order != 0 || dt) throw UsageError("hyperbolic3 kernel supports value only");
        const double p = hyperbolic3_heat(x, spec.t);
        result["value"] = log ? std::log(p) : p;
        break;
      }
    }
    const Json config{{"kernel", to_json(spec)}, {"x", x}, {"order", order}, {"log", log}, {"dt", dt}};
    emit(ctx, o, "kernel", config, result, "", "json");
  }
};

struct CheckCmd {
  KernelOpts k;
  bool normalization = false;
  bool semigroup = false;
  bool derivatives = false;
  bool gradient = false;
  double s = 0.5;
  int grid = 20;
  int configs = 20;
  OutOpts o;

  void run(Context& ctx) const {
    if (!normalization && !semigroup && !derivatives && !gradient)
      throw UsageError("check needs at least one of --normalization, --semigroup, --derivatives, --gradient");
    std::vector<CheckResult> results;
    const KernelSpec spec = k.spec();
    if (normalization) results.push_back(check_normalization(spec));
    if (semigroup) {
      if (spec.family != Family::Sphere || spec.dim != 2) throw UsageError("--semigroup is implemented for S^2");
      results.push_back(check_semigroup(s, spec.t, spec.truncation));
    }
    if (derivatives) {
      if (spec.family != Family::Sphere) throw UsageError("--derivatives applies to sphere kernels");
      results.push_back(check_kernel_derivatives(spec.dim, spec.t, grid, spec.truncation));
    }
    if (gradient) {
      if (spec.family != Family::Sphere) throw UsageError("--gradient applies to sphere kernels");
      results.push_back(check_likelihood_gradient(spec.dim, spec.t, configs, RandomSeed{ctx.seed}));
    }
    Json arr = Json::array();
    std::string failed;
    for (const auto& r : results) {
      arr.push_back(Json{{"name", r.name}, {"value", r.value}, {"error", r.error}, {"tolerance", r.tolerance},
                         {"passed", r.passed}});
      if (!r.passed) failed += (failed.empty() ? "" : ", ") + r.name + " error " + fmt(r.error) + " >= " + fmt(r.tolerance);
    }
    Json config{{"kernel", to_json(spec)}, {"s", s}, {"grid", grid}, {"configs", configs}, {"seed", ctx.seed}};
    emit(ctx, o, "check", config, Json{{"checks", arr}}, "", "json");
    if (!failed.empty()) throw CheckFailed("check failed: " + failed);
  }
};

struct EstimateCmd {
  explicit EstimateCmd(std::string command) : name(std::move(command)) {}

  std::string name;  // mean, tvar, joint
  KernelOpts k;
  SourceOpts src;
  OptOpts opt;
  OutOpts o;
  std::string estimator = "diffusion";
  std::string at;
  double t_init = 1.0;
  bool t_init_set = false;

  void run(Context& ctx) const {
    const OptimizerConfig cfg = opt.resolve(ctx.seed);
    const Family fam = family_from_string(k.kernel);
    Json config{{"optimizer", to_json(cfg)}};
    EstimateReport rep;
    if (fam == Family::Euclidean) {
      if (src.input.empty()) throw UsageError("the euclidean kernel needs --input with xyz rows");
      const EuclideanSample data(load_vectors_csv(src.input));
      KernelOpts kk = k;
      kk.dim = data.dim();
      const KernelSpec spec = kk.spec();
      config["kernel"] = to_json(spec);
      config["source"] = Json{{"input", src.input}, {"input_format", "xyz"}};
      if (name == "mean") {
        rep = estimate_diffusion_mean(data, spec, cfg);
      } else if (name == "tvar") {
        const Vector y = at.empty() ? data.mean() : [&] {
          const auto v = parse_doubles(at, "--at");
          return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
        }();
        rep = estimate_t(data, y, spec, cfg, t_init);
        config["t_init"] = t_init;
      } else {
        throw UsageError("joint estimation is implemented for spherical data");
      }
    } else {
      const EmpiricalSample sample = load_sample(src, fam == Family::Circle ? 1 : k.dim, RandomSeed{ctx.seed});
      KernelOpts kk = k;
      kk.dim = sample.dim();
      const KernelSpec spec = kk.spec();
      config["kernel"] = to_json(spec);
      config["source"] = source_json(src, sample.dim(), ctx.seed);
      if (name == "mean") {
        config["estimator"] = estimator;
        rep = estimator == "frechet" ? estimate_frechet_mean(sample, cfg) : estimate_diffusion_mean(sample, spec, cfg);
      } else if (name == "tvar") {
        const UnitVector y = parse_point(at, sample.dim());
        config["at"] = vector_to_list(y.coords());
        config["t_init"] = t_init;
        rep = estimate_t(sample, y, spec, cfg, t_init);
      } else {
        if (t_init_set) config["t_init"] = t_init;
        rep = estimate_joint(sample, spec, cfg, t_init_set ? std::optional<double>(t_init) : std::nullopt);
      }
    }
    emit(ctx, o, name, config, to_json(rep), "", "json");
  }

  static std::vector<double> vector_to_list(const Vector& v) { return {v.data(), v.data() + v.size()}; }
};

struct BoundsCmd {
  bool lambda = false;
  bool sigma = false;
  bool delta = false;
  KernelOpts k;
  OutOpts o;

  void run(Context& ctx) const {
    if (!lambda && !sigma && !delta) throw UsageError("bounds needs --lambda, --sigma and/or --delta");
    Json result;
    const TruncationPolicy policy = k.policy();
    if (lambda) result["lambda"] = lambda_bound(k.dim, k.t, policy);
    if (sigma) {
      if (k.dim != 2) throw UsageError("--sigma is defined on S^2 (--dim 2)");
      result["sigma"] = sigma_bound(k.t, policy);
    }
    if (delta) result["delta"] = delta_bound(k.dim);
    const Json config{{"dim", k.dim}, {"t", k.t}, {"truncation", to_json(policy)}};
    emit(ctx, o, "bounds", config, result, "", "json");
  }
};

struct ProfileCmd {
  std::string dist = "two-pole";
  double alpha = 0.0;
  KernelOpts k;
  int grid = 1001;
  int nodes = kDefaultCrescentNodes;
  bool classify = false;
  OutOpts o;

  void run(Context& ctx) const {
    const std::vector<double> g = uniform_grid(0.0, std::numbers::pi, grid);
    LikelihoodProfile p;
    if (dist == "two-pole") {
      p = two_pole_profile(k.dim, k.t, alpha, g, k.policy());
    } else {
      if (k.dim != 2) throw UsageError("the hemisphere profile is defined on S^2 (--dim 2)");
      p = hemisphere_profile(k.t, alpha, g, nodes, k.policy());
    }
    Json result = to_json(p);
    std::optional<SmearinessReport> rep;
    if (classify) {
      rep = classify_smeariness(p);
      result["smeariness"] = to_json(*rep);
    }
    std::ostringstream csv;
    csv << "delta,value\n";
    for (std::size_t i = 0; i < p.delta_grid.size(); ++i) csv << fmt(p.delta_grid[i]) << ',' << fmt(p.values[i]) << '\n';
    Json config{{"kernel", to_json(p.spec)}, {"distribution", to_json(p.distribution)}, {"grid", grid}, {"classify", classify}};
    if (dist == "hemisphere") config["quadrature_nodes"] = nodes;
    if (rep) config["smeariness"] = to_json(*rep);
    emit(ctx, o, "profile", config, result, csv.str(), "csv");
  }
};

struct BootstrapCmd {
  SourceOpts src;
  int dim = 2;
  OptOpts opt;
  OutOpts o;
  std::string estimators = "frechet,diffusion-t1";
  std::string n_grid;
  int replicates = 100;
  int threads = 0;
  std::string reproduce;
  std::string out_dir;
  bool restarts_set = false;

  void run(Context& ctx) {
    std::string experiment = "bootstrap";
    SourceOpts s = src;
    std::string est = estimators;
    OptOpts oo = opt;
    if (!restarts_set) oo.cfg.restarts = 0;
    if (reproduce == "fig1b") {
      experiment = "fig1b";
      if (s.input.empty() && s.dist.empty()) s.dist = "bimodal";
      est = "frechet,diffusion-t0.4,diffusion-t0.6,diffusion-t1,diffusion-t2,diffusion-t4";
    } else if (reproduce == "fig5") {
      experiment = "fig5";
      if (s.input.empty()) throw UsageError("--reproduce fig5 needs --input with pole-location lat/lon data");
      est = "frechet,diffusion-t1,diffusion-t2";
    }
    std::vector<EstimatorTag> tags;
    std::stringstream ss(est);
    for (std::string item; std::getline(ss, item, ',');) {
      try {
        tags.push_back(EstimatorTag::parse(item));
      } catch (const ParseError& e) {
        throw UsageError(e.what());
      }
    }
    std::vector<int> grid = default_n_grid();
    if (!n_grid.empty()) {
      grid.clear();
      for (double v : parse_doubles(n_grid, "--n-grid")) grid.push_back(static_cast<int>(v));
    }
    const OptimizerConfig cfg = oo.resolve(ctx.seed);
    ScalingSource source = EuclideanGaussian{};
    Json source_cfg;
    if (s.dist == "euclidean-gaussian") {
      source = EuclideanGaussian{dim, s.sigma2 > 0 ? s.sigma2 : 1.0};
      source_cfg = Json{{"distribution", Json{{"name", "euclidean-gaussian"}, {"dim", dim},
                                              {"sigma2", s.sigma2 > 0 ? s.sigma2 : 1.0}}}};
    } else if (!s.input.empty()) {
      source = load_sample(s, dim, RandomSeed{ctx.seed});
      source_cfg = source_json(s, dim, ctx.seed);
    } else {
      if (s.dist.empty()) throw UsageError("bootstrap needs --dist or --input");
      source = make_distribution(s, dim);
      source_cfg = Json{{"distribution", to_json(std::get<DistributionSpec>(source))}};
    }
    BootstrapOptions bo;
    bo.threads = threads;
    const std::vector<ScalingTable> tables = bootstrap_scaling(source, tags, grid, replicates, cfg, RandomSeed{ctx.seed}, bo);

    Json config{{"experiment", experiment}, {"source", source_cfg}, {"estimators", est}, {"n_grid", grid},
                {"replicates", replicates}, {"seed", ctx.seed}, {"optimizer", to_json(cfg)},
                {"threads", threads > 0 ? threads : default_thread_count()}};
    Json result = Json::array();
    std::ostringstream csv;
    csv << "estimator,n,scaled_variance,dropped,nonconverged\n";
    for (const auto& t : tables) {
      result.push_back(to_json(t));
      for (std::size_t i = 0; i < t.n_grid.size(); ++i)
        csv << t.tag.label() << ',' << t.n_grid[i] << ',' << fmt(t.scaled_variance[i]) << ',' << t.dropped[i] << ','
            << t.nonconverged[i] << '\n';
    }
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      for (const auto& t : tables) {
        for (auto f : {ExportFormat::CSV, ExportFormat::JSON})
          export_table(t, std::filesystem::path(out_dir) / artifact_name(experiment, t.tag.label(), t.seed, f), f);
      }
      write_text(Json{{"command", "bootstrap"}, {"config", config}}.dump(2) + "\n",
                 (std::filesystem::path(out_dir) / (experiment + "_config_" + std::to_string(ctx.seed) + ".json")).string(),
                 ctx.out);
    }
    emit(ctx, o, "bootstrap", config, Json{{"tables", result}}, csv.str(), "csv");
  }
};

struct TTraceCmd {
  SourceOpts src;
  int dim = 2;
  OptOpts opt;
  OutOpts o;
  std::string at;
  double t_init = 1.0;
  std::string reproduce;
  bool t_init_set = false;
  bool n_set = false;

  void run(Context& ctx) const {
    const OptimizerConfig cfg = opt.resolve(ctx.seed);
    struct Series {
      std::string label;
      Json source;
      TTrace trace;
    };
    std::vector<Series> series;
    // Presets start away from every target so the traces show movement.
    const double t0 = !reproduce.empty() && !t_init_set ? 2.5 : t_init;
    if (reproduce == "fig7a") {
      for (double s : {0.8, 1.0, 1.2}) {
        const DistributionSpec d{TwoPole{lambda_bound(dim, s)}, dim};
        char label[32];
        std::snprintf(label, sizeof label, "alpha=Lambda(%g)", s);
        series.push_back({label, Json{{"distribution", to_json(d)}, {"population", true}},
                          t_trace(d, UnitVector::north_pole(dim), t0, cfg, 0, RandomSeed{ctx.seed})});
      }
    } else if (reproduce == "fig7b") {
      const std::size_t n = n_set ? src.n : 5000;
      for (double s2 : {0.5, 1.0, 1.5, 2.0}) {
        const DistributionSpec d{BrownianNormal{std::nullopt, s2}, dim};
        char label[32];
        std::snprintf(label, sizeof label, "sigma2=%g", s2);
        series.push_back({label, Json{{"distribution", to_json(d)}, {"n", n}, {"seed", ctx.seed}},
                          t_trace(d, UnitVector::north_pole(dim), t0, cfg, n, RandomSeed{ctx.seed})});
      }
    } else {
      const EmpiricalSample sample = load_sample(src, dim, RandomSeed{ctx.seed});
      const UnitVector y = parse_point(at, sample.dim());
      series.push_back({"trace", source_json(src, sample.dim(), ctx.seed), t_trace(sample, y, t0, cfg)});
    }
    Json config{{"optimizer", to_json(cfg)}, {"t_init", t0}, {"reproduce", reproduce}, {"seed", ctx.seed}};
    Json sources = Json::array();
    Json result = Json::array();
    std::ostringstream csv;
    csv << "series,iteration,t,objective\n";
    for (const auto& s : series) {
      sources.push_back(Json{{"label", s.label}, {"source", s.source}});
      Json r = to_json(s.trace);
      r["label"] = s.label;
      result.push_back(r);
      for (std::size_t i = 0; i < s.trace.t.size(); ++i)
        csv << s.label << ',' << i << ',' << fmt(s.trace.t[i]) << ',' << fmt(s.trace.objective[i]) << '\n';
    }
    config["sources"] = sources;
    emit(ctx, o, "ttrace", config, Json{{"traces", result}}, csv.str(), "csv");
  }
};

struct GraphCmd {
  std::string edges;
  std::string probs_file;
  std::string probs;
  int t = 1;
  bool as_printed = false;
  OutOpts o;

  void run(Context& ctx) const {
    if (edges.empty()) throw UsageError("graph needs --edges FILE");
    const MultiGraph g = load_edge_list(edges);
    VertexDistribution d;
    if (!probs_file.empty() && !probs.empty()) throw UsageError("--dist-json and --probs are mutually exclusive");
    if (!probs_file.empty()) {
      d = load_distribution_json(probs_file);
    } else if (!probs.empty()) {
      d.probs = parse_doubles(probs, "--probs");
    } else {
      d = VertexDistribution::uniform(g.size());
    }
    const GraphMeanRule rule = as_printed ? GraphMeanRule::AsPrinted : GraphMeanRule::Maximize;
    const Eigen::VectorXd l = graph_likelihood(g, t, d);
    const std::vector<int> means = graph_diffusion_means(g, t, d, rule);
    const Json config{{"edges", edges}, {"vertices", g.size()}, {"distribution", d.probs}, {"t", t},
                      {"rule", as_printed ? "as-printed-argmin" : "maximize"}};
    Json result{{"likelihood", std::vector<double>(l.data(), l.data() + l.size())}, {"means", means}};
    std::ostringstream csv;
    csv << "vertex,likelihood,is_mean\n";
    for (int i = 0; i < l.size(); ++i)
      csv << i << ',' << fmt(l[i]) << ',' << (std::find(means.begin(), means.end(), i) != means.end() ? 1 : 0) << '\n';
    emit(ctx, o, "graph", config, result, csv.str(), "json");
  }
};

struct SampleCmd {
  SourceOpts src;
  int dim = 2;
  std::string write_format;  // latlon or xyz
  OutOpts o;

  void run(Context& ctx) const {
    if (src.dist.empty()) throw UsageError("sample needs --dist");
    const EmpiricalSample s = load_sample(src, dim, RandomSeed{ctx.seed});
    const std::string wf = write_format.empty() ? (s.dim() == 2 ? "latlon" : "xyz") : write_format;
    if (wf == "latlon" && s.dim() != 2) throw UsageError("latlon output needs --dim 2");
    std::ostringstream csv;
    if (wf == "latlon") {
      write_latlon_csv(csv, s);
    } else {
      csv << std::setprecision(17);
      for (int i = 0; i <= s.dim(); ++i) csv << (i ? ",x" : "x") << i;
      csv << '\n';
      for (const auto& p : s.points()) {
        for (int i = 0; i <= s.dim(); ++i) csv << (i ? "," : "") << fmt(p[i]);
        csv << '\n';
      }
    }
    Json pts = Json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto& c = s.points()[i].coords();
      pts.push_back(Json{{"point", std::vector<double>(c.data(), c.data() + c.size())}, {"weight", s.weight(i)}});
    }
    const Json config{{"source", source_json(src, dim, ctx.seed)}, {"write_format", wf}};
    emit(ctx, o, "sample", config, Json{{"points", pts}}, csv.str(), "csv");
  }
};

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion means on spheres, circles, Euclidean space and graphs", "diffmean"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI config file");
  std::uint64_t seed = 0;
  int verbosity = 0;
  app.add_option("--seed", seed, "Seed for every stochastic step")->capture_default_str();
  app.add_flag("-v,--verbose", verbosity, "More diagnostics on stderr");

  // Subcommand options may also be given before the subcommand name.
  app.fallthrough();

  KernelCmd kernel;
  auto* k = app.add_subcommand("kernel", "Evaluate a heat kernel, its derivatives or its logarithm");
  add_kernel_options(k, kernel.k);
  k->add_option("--x", kernel.x, "Cosine of the angle (sphere) or distance (circle, euclidean, hyperbolic3)")
      ->capture_default_str();
  k->add_option("--order", kernel.order, "Derivative order in x (0..3)")->check(CLI::Range(0, 3))->capture_default_str();
  k->add_flag("--log", kernel.log, "Derivatives of ln p instead of p");
  k->add_flag("--dt", kernel.dt, "Also report the t-derivative");
  add_output_options(k, kernel.o);

  CheckCmd check;
  auto* c = app.add_subcommand("check", "Quadrature and finite-difference self-checks");
  add_kernel_options(c, check.k);
  c->add_flag("--normalization", check.normalization, "|∫p - 1| below 1e-6 (sphere) / 1e-8 (circle)");
  c->add_flag("--semigroup", check.semigroup, "Chapman-Kolmogorov on S^2, relative error below 1e-4");
  c->add_flag("--derivatives", check.derivatives, "Analytic x- and t-derivatives against finite differences");
  c->add_flag("--gradient", check.gradient, "Likelihood gradient against directional finite differences");
  c->add_option("--s", check.s, "First time of the semigroup check")->capture_default_str();
  c->add_option("--grid", check.grid, "Grid points for --derivatives")->capture_default_str();
  c->add_option("--configs", check.configs, "Random configurations for --gradient")->capture_default_str();
  add_output_options(c, check.o);

  std::array<EstimateCmd, 3> est{EstimateCmd("mean"), EstimateCmd("tvar"), EstimateCmd("joint")};
  const std::array<const char*, 3> est_help{"Diffusion t-mean (or Fréchet mean) of a sample",
                                            "Diffusion variance: minimize over t at a fixed point",
                                            "Joint estimation of the mean and t"};
  std::array<CLI::App*, 3> est_apps{};
  for (std::size_t i = 0; i < est.size(); ++i) {
    auto* a = app.add_subcommand(est[i].name, est_help[i]);
    est_apps[i] = a;
    add_kernel_options(a, est[i].k);
    add_source_options(a, est[i].src);
    add_optimizer_options(a, est[i].opt);
    add_output_options(a, est[i].o);
    if (est[i].name == "mean")
      a->add_option("--estimator", est[i].estimator, "diffusion or frechet")
          ->check(CLI::IsMember({"diffusion", "frechet"}))
          ->capture_default_str();
    if (est[i].name == "tvar") a->add_option("--at", est[i].at, "Point y as comma-separated coordinates (default μ)");
    if (est[i].name != "mean") {
      a->add_option("--t-init", est[i].t_init, "Initial t")->capture_default_str();
    }
  }

  BoundsCmd bounds;
  auto* b = app.add_subcommand("bounds", "Analytic thresholds δ(m), Λ_m(t), Σ(t)");
  b->add_flag("--lambda", bounds.lambda, "Λ_m(t)");
  b->add_flag("--sigma", bounds.sigma, "Σ(t) on S^2");
  b->add_flag("--delta", bounds.delta, "δ(m)");
  add_kernel_options(b, bounds.k, false);
  add_output_options(b, bounds.o);

  ProfileCmd profile;
  auto* p = app.add_subcommand("profile", "Population likelihood profile along the reference meridian");
  p->add_option("--dist", profile.dist, "two-pole or hemisphere")
      ->check(CLI::IsMember({"two-pole", "hemisphere"}))
      ->capture_default_str();
  p->add_option("--alpha", profile.alpha, "Mixture weight")->capture_default_str();
  add_kernel_options(p, profile.k, false);
  p->add_option("--grid", profile.grid, "Grid points on [0, π]")->capture_default_str();
  p->add_option("--nodes", profile.nodes, "Gauss-Legendre nodes per axis (hemisphere)")->capture_default_str();
  p->add_flag("--classify", profile.classify, "Add the smeariness classification");
  add_output_options(p, profile.o);

  BootstrapCmd boot;
  auto* bs = app.add_subcommand("bootstrap", "Scaled-variance curves and log-log slopes");
  add_source_options(bs, boot.src);
  bs->add_option("--dim", boot.dim, "Sphere (or Euclidean) dimension")->capture_default_str();
  add_optimizer_options(bs, boot.opt);
  add_output_options(bs, boot.o);
  bs->add_option("--estimators", boot.estimators, "Comma list: frechet, joint, diffusion-t<t>")->capture_default_str();
  bs->add_option("--n-grid", boot.n_grid, "Comma list of sample sizes (default 30,100,300,1000,3000)");
  bs->add_option("--replicates", boot.replicates, "Replicates B per sample size")->capture_default_str();
  bs->add_option("--threads", boot.threads, "Worker threads (default: DIFFMEAN_THREADS or 1)");
  bs->add_option("--reproduce", boot.reproduce, "Desk-scale reproduction preset")
      ->check(CLI::IsMember({"fig1b", "fig5"}));
  bs->add_option("--out-dir", boot.out_dir, "Also write per-estimator artifacts here");

  TTraceCmd ttrace;
  auto* tt = app.add_subcommand("ttrace", "Iteration trace of the t estimate");
  add_source_options(tt, ttrace.src);
  tt->add_option("--dim", ttrace.dim, "Sphere dimension")->capture_default_str();
  add_optimizer_options(tt, ttrace.opt);
  add_output_options(tt, ttrace.o);
  tt->add_option("--at", ttrace.at, "Point y as comma-separated coordinates (default μ)");
  tt->add_option("--t-init", ttrace.t_init, "Initial t (presets default to 2.5)")->capture_default_str();
  tt->add_option("--reproduce", ttrace.reproduce, "Desk-scale reproduction preset")
      ->check(CLI::IsMember({"fig7a", "fig7b"}));

  GraphCmd graph;
  auto* g = app.add_subcommand("graph", "Diffusion t-means on a multigraph");
  g->add_option("--edges", graph.edges, "Edge list file ('i j multiplicity' per line)");
  g->add_option("--dist-json", graph.probs_file, "JSON array of vertex probabilities");
  g->add_option("--probs", graph.probs, "Comma list of vertex probabilities (default uniform)");
  g->add_option("--t", graph.t, "Number of walk steps")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_flag("--as-printed", graph.as_printed, "Use the literal argmin instead of the likelihood maximizer");
  add_output_options(g, graph.o);

  SampleCmd sample;
  auto* sm = app.add_subcommand("sample", "Draw a synthetic sample");
  add_source_options(sm, sample.src, false);
  sm->add_option("--dim", sample.dim, "Sphere dimension")->capture_default_str();
  sm->add_option("--write-format", sample.write_format, "latlon or xyz")->check(CLI::IsMember({"latlon", "xyz"}));
  add_output_options(sm, sample.o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (est[i].name != "mean") est[i].t_init_set = est_apps[i]->count("--t-init") > 0;
  }
  boot.restarts_set = bs->count("--restarts") > 0;
  ttrace.t_init_set = tt->count("--t-init") > 0;
  ttrace.n_set = tt->count("--n") > 0;

  Context ctx{out, err, seed, verbosity};
  try {
    if (k->parsed()) kernel.run(ctx);
    else if (c->parsed()) check.run(ctx);
    else if (b->parsed()) bounds.run(ctx);
    else if (p->parsed()) profile.run(ctx);
    else if (bs->parsed()) boot.run(ctx);
    else if (tt->parsed()) ttrace.run(ctx);
    else if (g->parsed()) graph.run(ctx);
    else if (sm->parsed()) sample.run(ctx);
    else {
      for (std::size_t i = 0; i < est.size(); ++i)
        if (est_apps[i]->parsed()) est[i].run(ctx);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const CheckFailed& e) {
    err << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace diffmean
