#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bodse/acquisition.hpp"
#include "bodse/bo_loop.hpp"
#include "bodse/config.hpp"
#include "bodse/error.hpp"
#include "bodse/evaluators.hpp"
#include "bodse/experiment_log.hpp"
#include "bodse/gp.hpp"
#include "bodse/objective.hpp"
#include "bodse/param_space.hpp"

namespace py = pybind11;
using namespace bodse;

namespace {

std::map<std::string, double> kernel_dict(const KernelParams& p) {
  std::map<std::string, double> d{{"signal_variance", p.signal_variance()}, {"noise_variance", p.noise_variance()}};
  for (std::size_t i = 0; i < p.dim(); ++i) d["lengthscale_" + std::to_string(i)] = std::exp(p.log_lengthscales[i]);
  return d;
}

ExperimentConfig config_from(const std::string& text, const std::string& base_dir, std::optional<std::uint64_t> seed) {
  ExperimentConfig c = parse_config(nlohmann::json::parse(text), base_dir);
  if (seed) c.set_seed(*seed);
  return c;
}

// Runs the configured engine and returns the log as JSONL text.
std::string run_config(const std::string& text, const std::string& base_dir, const std::string& workdir,
                       std::optional<std::uint64_t> seed) {
  const ExperimentConfig c = config_from(text, base_dir, seed);
  auto evaluator = make_evaluator(c.evaluator, workdir);
  std::ostringstream out;
  RunHooks hooks;
  hooks.config = resolved_json(c);
  hooks.on_line = [&](const std::string& line) { out << line << '\n'; };
  py::gil_scoped_release release;
  if (c.engine == Engine::bo)
    run(c.space, *evaluator, c.bo, hooks);
  else
    ga_run(c.space, *evaluator, c.bo.objective, c.ga, hooks);
  return out.str();
}

std::vector<ParetoPoint> sweep_config(const std::string& text, const std::string& base_dir, const std::string& workdir,
                                      std::optional<std::uint64_t> seed) {
  const ExperimentConfig c = config_from(text, base_dir, seed);
  if (c.sweep.empty()) throw InvalidConfig("sweep: the config has no sweep");
  py::gil_scoped_release release;
  const auto result = multi_run_pareto(
      c.space, [&](std::size_t) { return make_evaluator(c.evaluator, workdir); }, c.bo,
      weight_sweep(c.sweep, c.bo.objective));
  return result.front;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian-optimization design space exploration (C++ core)";
  py::register_exception<Error>(m, "BodseError", PyExc_ValueError);

  py::class_<ParameterSpace>(m, "ParameterSpace")
      .def(py::init([](const std::vector<std::tuple<std::string, std::string, double, double>>& defs) {
             std::vector<ParamDef> out;
             for (const auto& [name, kind, lo, hi] : defs) out.push_back({name, param_kind_from_string(kind), lo, hi});
             return ParameterSpace(std::move(out));
           }),
           py::arg("params"), "Parameters as (name, 'continuous'|'integer', min, max) tuples.")
      .def_static("table1", &ParameterSpace::table1)
      .def_property_readonly("dim", &ParameterSpace::dim)
      .def_property_readonly("names",
                             [](const ParameterSpace& s) {
                               std::vector<std::string> names;
                               for (const auto& p : s.params()) names.push_back(p.name);
                               return names;
                             })
      .def("encode", &ParameterSpace::encode, py::arg("raw"))
      .def("decode", [](const ParameterSpace& s, const std::vector<double>& v) { return s.decode(v); }, py::arg("x"))
      .def("sample_uniform", &ParameterSpace::sample_uniform, py::arg("n"), py::arg("seed"));

  py::class_<Surrogate>(m, "Surrogate")
      .def("predict",
           [](const Surrogate& s, const std::vector<double>& x) {
             const auto p = s.predict(x);
             return py::make_tuple(p.mean, p.variance);
           },
           py::arg("x"), "Posterior (mean, variance) in target units.")
      .def_property_readonly("hyperparameters", [](const Surrogate& s) { return kernel_dict(s.model().params()); })
      .def_property_readonly("log_marginal_likelihood",
                             [](const Surrogate& s) { return s.model().log_marginal_likelihood(); });

  m.def(
      "fit_surrogate",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed) {
        py::gil_scoped_release release;
        return fit_surrogate(X, y, seed);
      },
      py::arg("X"), py::arg("y"), py::arg("seed") = 0,
      "Fits an ARD squared-exponential GP to rows of X in the unit cube.");

  m.def("normal_cdf", &normal_cdf);
  m.def("normal_pdf", &normal_pdf);
  m.def("ei", [](double mean, double variance, double best, double zeta) { return ei({mean, variance}, {best}, zeta); },
        py::arg("mean"), py::arg("variance"), py::arg("best"), py::arg("zeta") = 0.0);
  m.def("poi", [](double mean, double variance, double best, double zeta) { return poi({mean, variance}, {best}, zeta); },
        py::arg("mean"), py::arg("variance"), py::arg("best"), py::arg("zeta") = 0.0);
  m.def("lcb", [](double mean, double variance, double kappa) { return lcb({mean, variance}, kappa); },
        py::arg("mean"), py::arg("variance"), py::arg("kappa") = 2.0);
  m.def("ucb", [](double mean, double variance, double kappa) { return ucb({mean, variance}, kappa); },
        py::arg("mean"), py::arg("variance"), py::arg("kappa") = 2.0);

  m.def(
      "scalarize",
      [](const MetricVector& metrics, double alpha1, double alpha2, const std::string& scaling,
         const std::map<std::string, double>& references) {
        auto spec = ObjectiveSpec::scalarized(alpha1, alpha2, scaling_from_string(scaling));
        spec.references = references;
        return scalarize(metrics, spec);
      },
      py::arg("metrics"), py::arg("alpha1") = 1.0, py::arg("alpha2") = 1.0, py::arg("scaling") = "none",
      py::arg("references") = std::map<std::string, double>{});

  m.def(
      "pareto_filter",
      [](const std::vector<MetricVector>& metrics) {
        std::vector<ParetoPoint> points;
        for (std::size_t i = 0; i < metrics.size(); ++i) points.push_back({{{"index", double(i)}}, metrics[i]});
        std::vector<std::size_t> idx;
        for (const auto& p : pareto_filter(points)) idx.push_back(static_cast<std::size_t>(p.params.at("index")));
        return idx;
      },
      py::arg("metrics"), "Indices of the nondominated metric vectors (all metrics minimized).");

  m.def("benchmark_ids", &benchmark_ids);
  m.def("eval_synthetic", [](const std::string& id, const RawAssignment& raw) { return eval_synthetic(id, raw).metrics; },
        py::arg("benchmark"), py::arg("params"));
  m.def(
      "eval_ppa_surface",
      [](const RawAssignment& raw, bool noise, std::uint64_t seed) {
        return eval_ppa_surface(raw, PpaSurfaceOptions{noise, seed}).metrics;
      },
      py::arg("params"), py::arg("noise") = true, py::arg("seed") = 0);

  m.def("_run_config", &run_config, py::arg("config_json"), py::arg("base_dir"), py::arg("workdir"),
        py::arg("seed") = py::none());
  m.def(
      "_sweep_config",
      [](const std::string& text, const std::string& base_dir, const std::string& workdir,
         std::optional<std::uint64_t> seed) {
        py::list out;
        for (const auto& p : sweep_config(text, base_dir, workdir, seed))
          out.append(py::dict(py::arg("params") = p.params, py::arg("metrics") = p.metrics));
        return out;
      },
      py::arg("config_json"), py::arg("base_dir"), py::arg("workdir"), py::arg("seed") = py::none());
}
