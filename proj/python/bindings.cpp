#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numbers>
#include <sstream>

#include "diffmean/analysis.hpp"
#include "diffmean/cli.hpp"
#include "diffmean/error.hpp"
#include "diffmean/estimators.hpp"
#include "diffmean/experiments.hpp"
#include "diffmean/graph.hpp"
#include "diffmean/serialize.hpp"

namespace py = pybind11;
using namespace diffmean;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

TruncationPolicy policy(int terms, double epsilon, int max_terms) {
  if (terms > 0) return FixedTerms{terms};
  return TailBound{epsilon, max_terms};
}

EmpiricalSample to_sample(const RowMatrix& pts, const std::optional<std::vector<double>>& weights) {
  if (pts.rows() == 0) throw DomainError("empty point array");
  std::vector<UnitVector> v;
  v.reserve(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) v.emplace_back(Vector(pts.row(i).transpose()));
  return EmpiricalSample(std::move(v), weights);
}

RowMatrix to_matrix(const EmpiricalSample& s) {
  RowMatrix out(static_cast<Eigen::Index>(s.size()), s.dim() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = s.points()[i].coords().transpose();
  return out;
}

OptimizerConfig make_config(int restarts, std::uint64_t seed, int max_iters, double grad_tol) {
  OptimizerConfig c;
  c.restarts = restarts;
  c.seed = RandomSeed{seed};
  c.max_iters = max_iters;
  c.grad_tol = grad_tol;
  return c;
}

py::dict report_dict(const EstimateReport& r) { return py::module_::import("json").attr("loads")(to_json(r).dump()); }

DistributionSpec make_dist(const std::string& name, int dim, double alpha, double sigma2) {
  DistributionSpec d;
  d.dim = dim;
  if (name == "two-pole") d.variant = TwoPole{alpha};
  else if (name == "bimodal") d.variant = BimodalBrownianNormal{sigma2, alpha};
  else if (name == "hemisphere") d.variant = HemispherePointMass{alpha};
  else if (name == "brownian") d.variant = BrownianNormal{std::nullopt, sigma2};
  else throw DomainError("unknown distribution '" + name + "'");
  d.validate();
  return d;
}

}  // namespace

PYBIND11_MODULE(_diffmean, m) {
  m.doc() = "Heat kernels, diffusion means and smeariness diagnostics";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<DomainError> domain(m, "DomainError", base.ptr());
  static py::exception<TruncationError> trunc(m, "TruncationError", base.ptr());
  static py::exception<CutLocusError> cut(m, "CutLocusError", base.ptr());
  static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DomainError& e) {
      py::set_error(domain, e.what());
    } catch (const TruncationError& e) {
      py::set_error(trunc, e.what());
    } catch (const CutLocusError& e) {
      py::set_error(cut, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  m.def("gegenbauer", &gegenbauer, py::arg("l"), py::arg("alpha"), py::arg("x"));
  m.def(
      "sphere_heat",
      [](int m_, double t, double x, int order, bool log, int terms, double epsilon, int max_terms) {
        const auto spec = KernelSpec::sphere(m_, t, policy(terms, epsilon, max_terms));
        if (log) return sphere_log_heat(spec, x, order);
        return order == 0 ? sphere_heat(spec, x).value : sphere_heat_deriv(spec, x, order).value;
      },
      py::arg("m"), py::arg("t"), py::arg("x"), py::arg("order") = 0, py::arg("log") = false, py::arg("terms") = 0,
      py::arg("epsilon") = 1e-12, py::arg("max_terms") = 10000,
      "h_{t,m}(x) or its x-derivative; with log=True the derivative of ln h.");
  m.def(
      "sphere_heat_dt", [](int m_, double t, double x) { return sphere_heat_dt(KernelSpec::sphere(m_, t), x); },
      py::arg("m"), py::arg("t"), py::arg("x"));
  m.def(
      "circle_heat", [](double x, double y, double t) { return circle_heat(x, y, t); }, py::arg("x"), py::arg("y"),
      py::arg("t"));
  m.def(
      "euclidean_heat",
      [](const std::vector<double>& x, const std::vector<double>& y, double t) { return euclidean_heat(x, y, t); },
      py::arg("x"), py::arg("y"), py::arg("t"));
  m.def("hyperbolic3_heat", &hyperbolic3_heat, py::arg("rho"), py::arg("t"));

  m.def("delta_bound", &delta_bound, py::arg("m"));
  m.def(
      "lambda_bound", [](int m_, double t) { return lambda_bound(m_, t); }, py::arg("m"), py::arg("t"));
  m.def(
      "sigma_bound", [](double t) { return sigma_bound(t); }, py::arg("t"));
  m.def(
      "small_t_gap", [](int m_, double t, const std::vector<double>& grid) { return small_t_gap(m_, t, grid); },
      py::arg("m"), py::arg("t"), py::arg("delta_grid"));

  m.def(
      "draw",
      [](const std::string& name, std::size_t n, std::uint64_t seed, int dim, double alpha, double sigma2) {
        return to_matrix(draw(make_dist(name, dim, alpha, sigma2), n, RandomSeed{seed}));
      },
      py::arg("distribution"), py::arg("n"), py::arg("seed") = 0, py::arg("dim") = 2, py::arg("alpha") = 0.2,
      py::arg("sigma2") = 0.3, "Rows are unit vectors; distribution is two-pole, bimodal, hemisphere or brownian.");
  m.def(
      "brownian_sample",
      [](const Vector& center, double total_time, int steps, std::uint64_t seed) {
        return brownian_sample(UnitVector(center), total_time, steps, RandomSeed{seed}).coords();
      },
      py::arg("center"), py::arg("total_time"), py::arg("steps"), py::arg("seed") = 0);

  m.def(
      "log_likelihood",
      [](const RowMatrix& pts, const Vector& y, double t, const std::optional<std::vector<double>>& w) {
        const auto s = to_sample(pts, w);
        return sample_log_likelihood(s, UnitVector(y), KernelSpec::sphere(s.dim(), t));
      },
      py::arg("points"), py::arg("y"), py::arg("t"), py::arg("weights") = py::none(),
      "Negative mean log-likelihood of spherical data at y.");
  m.def(
      "diffusion_mean",
      [](const RowMatrix& pts, double t, const std::optional<std::vector<double>>& w, int restarts, std::uint64_t seed,
         int max_iters, double grad_tol) {
        const auto s = to_sample(pts, w);
        return report_dict(estimate_diffusion_mean(s, KernelSpec::sphere(s.dim(), t),
                                                   make_config(restarts, seed, max_iters, grad_tol)));
      },
      py::arg("points"), py::arg("t"), py::arg("weights") = py::none(), py::arg("restarts") = 5, py::arg("seed") = 0,
      py::arg("max_iters") = 1000, py::arg("grad_tol") = 1e-8);
  m.def(
      "euclidean_diffusion_mean",
      [](const RowMatrix& pts, double t) {
        std::vector<Vector> v;
        for (Eigen::Index i = 0; i < pts.rows(); ++i) v.emplace_back(pts.row(i).transpose());
        const EuclideanSample s(v);
        return report_dict(estimate_diffusion_mean(s, KernelSpec::euclidean(s.dim(), t)));
      },
      py::arg("points"), py::arg("t"));
  m.def(
      "frechet_mean",
      [](const RowMatrix& pts, const std::optional<std::vector<double>>& w, int restarts, std::uint64_t seed) {
        return report_dict(estimate_frechet_mean(to_sample(pts, w), make_config(restarts, seed, 1000, 1e-8)));
      },
      py::arg("points"), py::arg("weights") = py::none(), py::arg("restarts") = 5, py::arg("seed") = 0);
  m.def(
      "estimate_t",
      [](const RowMatrix& pts, const Vector& y, double t_init, const std::optional<std::vector<double>>& w) {
        const auto s = to_sample(pts, w);
        return report_dict(estimate_t(s, UnitVector(y), KernelSpec::sphere(s.dim(), t_init), OptimizerConfig{}, t_init));
      },
      py::arg("points"), py::arg("y"), py::arg("t_init") = 1.0, py::arg("weights") = py::none());
  m.def(
      "estimate_joint",
      [](const RowMatrix& pts, const std::optional<std::vector<double>>& w, int restarts, std::uint64_t seed) {
        const auto s = to_sample(pts, w);
        return report_dict(estimate_joint(s, KernelSpec::sphere(s.dim(), 1.0), make_config(restarts, seed, 1000, 1e-8)));
      },
      py::arg("points"), py::arg("weights") = py::none(), py::arg("restarts") = 5, py::arg("seed") = 0);

  m.def(
      "two_pole_profile",
      [](int m_, double t, double alpha, const std::vector<double>& grid) {
        return two_pole_profile(m_, t, alpha, grid).values;
      },
      py::arg("m"), py::arg("t"), py::arg("alpha"), py::arg("delta_grid"));
  m.def(
      "hemisphere_profile",
      [](double t, double alpha, const std::vector<double>& grid, int nodes) {
        return hemisphere_profile(t, alpha, grid, nodes).values;
      },
      py::arg("t"), py::arg("alpha"), py::arg("delta_grid"), py::arg("nodes") = kDefaultCrescentNodes);
  m.def(
      "classify_smeariness",
      [](const std::string& name, int m_, double t, double alpha, int grid) {
        const auto g = uniform_grid(0.0, std::numbers::pi, grid);
        const auto p = name == "two-pole" ? two_pole_profile(m_, t, alpha, g) : hemisphere_profile(t, alpha, g);
        return std::string(to_string(classify_smeariness(p).order_claim));
      },
      py::arg("distribution"), py::arg("m"), py::arg("t"), py::arg("alpha"), py::arg("grid") = 101);

  m.def(
      "graph_means",
      [](const Eigen::MatrixXi& multiplicity, int t, const std::vector<double>& probs, bool as_printed) {
        return graph_diffusion_means(MultiGraph(multiplicity), t, VertexDistribution{probs},
                                     as_printed ? GraphMeanRule::AsPrinted : GraphMeanRule::Maximize);
      },
      py::arg("multiplicity"), py::arg("t"), py::arg("probs"), py::arg("as_printed") = false);
  m.def(
      "graph_likelihood",
      [](const Eigen::MatrixXi& multiplicity, int t, const std::vector<double>& probs) {
        return Vector(graph_likelihood(MultiGraph(multiplicity), t, VertexDistribution{probs}));
      },
      py::arg("multiplicity"), py::arg("t"), py::arg("probs"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"diffmean"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
