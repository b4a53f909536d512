#include "diffmean/serialize.hpp"

#include "diffmean/error.hpp"

namespace diffmean {

namespace {

Json vector_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

const char* step_policy_name(StepPolicy p) { return p == StepPolicy::Fixed ? "fixed" : "backtracking"; }

template <class T>
T required(const Json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", 0);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what(), 0);
  }
}

}  // namespace

Json to_json(const TruncationPolicy& policy) {
  if (const auto* f = std::get_if<FixedTerms>(&policy)) return Json{{"mode", "fixed"}, {"terms", f->terms}};
  const auto& tb = std::get<TailBound>(policy);
  return Json{{"mode", "tail-bound"}, {"epsilon", tb.epsilon}, {"max_terms", tb.max_terms}};
}

TruncationPolicy truncation_from_json(const Json& j) {
  const auto mode = required<std::string>(j, "mode");
  if (mode == "fixed") return FixedTerms{required<int>(j, "terms")};
  if (mode == "tail-bound") return TailBound{required<double>(j, "epsilon"), required<int>(j, "max_terms")};
  throw ParseError("unknown truncation mode '" + mode + "'", 0);
}

Json to_json(const KernelSpec& spec) {
  return Json{{"family", to_string(spec.family)}, {"dim", spec.dim}, {"t", spec.t}, {"truncation", to_json(spec.truncation)}};
}

KernelSpec kernel_spec_from_json(const Json& j) {
  KernelSpec s;
  s.family = family_from_string(required<std::string>(j, "family"));
  s.dim = required<int>(j, "dim");
  s.t = required<double>(j, "t");
  if (j.contains("truncation")) s.truncation = truncation_from_json(j.at("truncation"));
  s.validate();
  return s;
}

Json to_json(const DistributionSpec& dist) {
  Json j{{"name", dist.name()}, {"dim", dist.dim}};
  std::visit(
      [&j](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, TwoPole> || std::is_same_v<T, HemispherePointMass>) {
          j["alpha"] = d.alpha;
        } else if constexpr (std::is_same_v<T, BimodalBrownianNormal>) {
          j["alpha"] = d.alpha;
          j["sigma2"] = d.sigma2;
        } else {
          j["sigma2"] = d.sigma2;
          j["center"] = d.center ? vector_json(d.center->coords()) : Json(nullptr);
        }
      },
      dist.variant);
  return j;
}

Json to_json(const OptimizerConfig& c) {
  return Json{{"max_iters", c.max_iters},
              {"grad_tol", c.grad_tol},
              {"step_size", c.step_size},
              {"step_policy", step_policy_name(c.step_policy)},
              {"shrink", c.shrink},
              {"sufficient_decrease", c.sufficient_decrease},
              {"restarts", c.restarts},
              {"seed", c.seed.value},
              {"t_min", c.t_min},
              {"t_max", c.t_max}};
}

OptimizerConfig optimizer_config_from_json(const Json& j) {
  OptimizerConfig c;
  if (j.contains("max_iters")) c.max_iters = j.at("max_iters").get<int>();
  if (j.contains("grad_tol")) c.grad_tol = j.at("grad_tol").get<double>();
  if (j.contains("step_size")) c.step_size = j.at("step_size").get<double>();
  if (j.contains("step_policy")) {
    const auto p = j.at("step_policy").get<std::string>();
    if (p == "fixed") {
      c.step_policy = StepPolicy::Fixed;
    } else if (p == "backtracking") {
      c.step_policy = StepPolicy::Backtracking;
    } else {
      throw ParseError("unknown step_policy '" + p + "'", 0);
    }
  }
  if (j.contains("shrink")) c.shrink = j.at("shrink").get<double>();
  if (j.contains("sufficient_decrease")) c.sufficient_decrease = j.at("sufficient_decrease").get<double>();
  if (j.contains("restarts")) c.restarts = j.at("restarts").get<int>();
  if (j.contains("seed")) c.seed = RandomSeed{j.at("seed").get<std::uint64_t>()};
  if (j.contains("t_min")) c.t_min = j.at("t_min").get<double>();
  if (j.contains("t_max")) c.t_max = j.at("t_max").get<double>();
  c.validate();
  return c;
}

Json to_json(const EstimateReport& r) {
  Json trace = Json::array();
  for (const auto& e : r.trace)
    trace.push_back(Json{{"iteration", e.iteration}, {"objective", e.objective}, {"grad_norm", e.grad_norm}, {"t", e.t}});
  return Json{{"point", vector_json(r.point)},
              {"t", r.t ? Json(*r.t) : Json(nullptr)},
              {"objective", r.objective},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"restarts_best_of", r.restarts_best_of},
              {"non_unique", r.non_unique},
              {"boundary_hit", r.boundary_hit},
              {"warnings", r.warnings},
              {"trace", trace}};
}

Json to_json(const EstimatorTag& tag) { return Json(tag.label()); }

Json to_json(const ScalingTable& t) {
  return Json{{"n_grid", t.n_grid},
              {"scaled_variance", t.scaled_variance},
              {"replicates", t.replicates},
              {"seed", t.seed.value},
              {"fitted_slope", t.fitted_slope},
              {"slope_stderr", t.slope_stderr},
              {"estimator", t.tag.label()},
              {"dropped", t.dropped},
              {"nonconverged", t.nonconverged}};
}

ScalingTable scaling_table_from_json(const Json& j) {
  ScalingTable t;
  t.n_grid = required<std::vector<int>>(j, "n_grid");
  t.scaled_variance = required<std::vector<double>>(j, "scaled_variance");
  t.replicates = required<int>(j, "replicates");
  t.seed = RandomSeed{required<std::uint64_t>(j, "seed")};
  t.fitted_slope = required<double>(j, "fitted_slope");
  t.slope_stderr = required<double>(j, "slope_stderr");
  t.tag = EstimatorTag::parse(required<std::string>(j, "estimator"));
  t.dropped = required<std::vector<int>>(j, "dropped");
  t.nonconverged = required<std::vector<int>>(j, "nonconverged");
  if (t.n_grid.size() != t.scaled_variance.size()) throw ParseError("n_grid and scaled_variance differ in length", 0);
  return t;
}

Json to_json(const LikelihoodProfile& p) {
  return Json{{"kernel", to_json(p.spec)},
              {"distribution", to_json(p.distribution)},
              {"delta", p.delta_grid},
              {"value", p.values}};
}

Json to_json(const SmearinessReport& r) {
  return Json{{"second_derivative_at_zero", r.second_derivative_at_zero},
              {"tolerance", r.tolerance},
              {"order_claim", to_string(r.order_claim)},
              {"critical_alpha", r.critical_alpha}};
}

Json to_json(const TTrace& tr) {
  return Json{{"t", tr.t},
              {"objective", tr.objective},
              {"final_t", tr.final_t},
              {"converged", tr.converged},
              {"boundary_hit", tr.boundary_hit}};
}

}  // namespace diffmean
