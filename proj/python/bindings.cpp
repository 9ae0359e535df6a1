#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nonbayes/config.hpp"
#include "nonbayes/experiment.hpp"
#include "nonbayes/graph.hpp"
#include "nonbayes/learning.hpp"
#include "nonbayes/report_io.hpp"
#include "nonbayes/theory.hpp"

namespace py = pybind11;
using namespace nonbayes;

namespace {

// JSON documents cross the boundary as strings; the Python side decodes them.
std::string dump(const nlohmann::json& j) { return j.dump(); }

RateCertificate certificate_of(const Scenario& s, const std::vector<double>& rho, long delta_horizon) {
  const DeltaEstimate d = compute_delta(s.schedule, delta_horizon);
  return build_certificate(s.model, s.schedule_params(), s.priors, rho, d.empirical);
}

// (records, n, m) array from a flat record-major vector.
py::array_t<double> cube(const std::vector<double>& flat, std::size_t records, int n, int m) {
  py::array_t<double> out({records, static_cast<std::size_t>(n), static_cast<std::size_t>(m)});
  std::copy(flat.begin(), flat.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Distributed non-Bayesian learning over time-varying directed graphs";

  static py::exception<Error> error(mod, "Error", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(mod, "ValidationError", PyExc_ValueError);
  static py::exception<InsufficientHorizon> horizon(mod, "InsufficientHorizon", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InsufficientHorizon& e) {
      horizon(e.what());
    } catch (const ValidationError& e) {
      validation(e.what());
    } catch (const Error& e) {
      error(e.what());
    }
  });

  py::class_<Scenario>(mod, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_property_readonly("agent_count", &Scenario::agent_count)
      .def_property_readonly("hypotheses",
                             [](const Scenario& s) { return s.model.hypotheses().labels(); })
      .def_property_readonly("period", [](const Scenario& s) { return s.schedule.period(); })
      .def_property_readonly("priors", [](const Scenario& s) { return Matrix(s.priors); })
      .def("weights", [](const Scenario& s, long k) { return Matrix(s.schedule.weights(k)); },
           py::arg("k"))
      .def("likelihood", [](const Scenario& s, int agent) { return Matrix(s.model.agent(agent).likelihood); },
           py::arg("agent"))
      .def_property_readonly("hash", [](const Scenario& s) { return scenario_hash(s); })
      .def("canonical_yaml", [](const Scenario& s) { return to_canonical_yaml(s); })
      .def("__repr__", [](const Scenario& s) {
        return "<Scenario " + s.name + " n=" + std::to_string(s.agent_count()) + ">";
      });

  py::class_<ScenarioConfig>(mod, "ScenarioConfig")
      .def_readonly("scenario", &ScenarioConfig::scenario)
      .def_readonly("warnings", &ScenarioConfig::warnings)
      .def_property_readonly("graph_ok", &ScenarioConfig::graph_ok)
      .def_property_readonly("optimal_set_nonempty", &ScenarioConfig::optimal_set_nonempty)
      .def_property_readonly("optimal", [](const ScenarioConfig& c) { return c.optimal_sets.common; })
      .def("_violations_json", [](const ScenarioConfig& c) { return dump(to_json(c.graph_report)); });

  mod.def("parse_scenario", &parse_scenario, py::arg("source"),
          "Load a scenario file or a builtin by name.");
  mod.def("parse_scenario_text", &parse_scenario_text, py::arg("text"), py::arg("source") = "<string>");
  mod.def("builtin_scenario_names", &builtin_scenario_names);

  mod.def("kl_divergence",
          [](const Vector& p, const Vector& q) { return kl_divergence(p, q); }, py::arg("p"), py::arg("q"));

  mod.def(
      "_rate_constants",
      [](const std::string& cls, int n, int b, double eta, double c) {
        const RateConstants r = rate_constants(matrix_class_from_string(cls), n, b, eta, c);
        return py::dict(py::arg("c") = r.c, py::arg("lambda_") = r.lambda,
                        py::arg("one_minus_lambda") = r.one_minus_lambda,
                        py::arg("delta_bound") = r.delta_bound);
      },
      py::arg("matrix_class"), py::arg("n"), py::arg("b"), py::arg("eta"),
      py::arg("lazy_metropolis_constant") = kDefaultLazyMetropolisConstant);

  mod.def(
      "backward_product", [](const Scenario& s, long t, long k) { return Matrix(backward_product(s.schedule, t, k)); },
      py::arg("scenario"), py::arg("t"), py::arg("k"));

  mod.def(
      "compute_delta",
      [](const Scenario& s, long horizon) {
        const DeltaEstimate d = compute_delta(s.schedule, horizon);
        return py::dict(py::arg("empirical") = d.empirical, py::arg("origin_zero") = d.origin_zero,
                        py::arg("lower_bound") = d.lower_bound);
      },
      py::arg("scenario"), py::arg("horizon") = 1000);

  mod.def(
      "_certificate_json",
      [](const Scenario& s, const std::vector<double>& rho, long delta_horizon) {
        return dump(to_json(certificate_of(s, rho, delta_horizon)));
      },
      py::arg("scenario"), py::arg("rho"), py::arg("delta_horizon") = 1000);

  mod.def(
      "_verify_lemma1",
      [](const Scenario& s, const std::vector<long>& t_list, long k_max) {
        const RateConstants c = rate_constants(s.schedule.matrix_class(), s.agent_count(),
                                               s.schedule.declared_b(), s.schedule.declared_eta(),
                                               s.lazy_metropolis_constant);
        const ContractionReport rep = verify_lemma1(s.schedule, t_list, k_max, c);
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& e : rep.entries) worst = std::max(worst, e.max_excess);
        return py::dict(py::arg("pass_") = rep.pass, py::arg("max_excess") = worst,
                        py::arg("c") = c.c, py::arg("lambda_") = c.lambda);
      },
      py::arg("scenario"), py::arg("t_list"), py::arg("k_max"));

  mod.def("derive_trial_seed", &derive_trial_seed, py::arg("master_seed"), py::arg("trial"));

  mod.def(
      "run_trial",
      [](const Scenario& s, std::uint64_t seed, long steps, int record_every, std::size_t trial) {
        TrajectoryRecord rec;
        {
          py::gil_scoped_release release;
          rec = run_trial(s, trial, seed, steps, record_every);
        }
        const int n = s.agent_count(), m = s.model.hypotheses().size();
        std::vector<double> flat;
        flat.reserve(rec.steps.size() * static_cast<std::size_t>(n * m));
        for (const Matrix& b : rec.log_beliefs)
          for (int i = 0; i < n; ++i)
            for (int p = 0; p < m; ++p) flat.push_back(b(i, p));
        return py::make_tuple(py::array(py::cast(rec.steps)), cube(flat, rec.steps.size(), n, m));
      },
      py::arg("scenario"), py::arg("seed"), py::arg("steps"), py::arg("record_every") = 1,
      py::arg("trial") = 0, "Returns (recorded steps, log-beliefs of shape (records, n, m)).");

  py::class_<MonteCarloSummary>(mod, "MonteCarloSummary")
      .def_readonly("trials", &MonteCarloSummary::trials)
      .def_readonly("steps", &MonteCarloSummary::steps)
      .def_readonly("labels", &MonteCarloSummary::labels)
      .def_readonly("scenario_hash", &MonteCarloSummary::scenario_hash)
      .def_property_readonly("record_steps",
                             [](const MonteCarloSummary& s) { return py::array(py::cast(s.record_steps)); })
      .def_property_readonly("mean", [](const MonteCarloSummary& s) { return cube(s.mean, s.records(), s.n, s.m); })
      .def_property_readonly("std", [](const MonteCarloSummary& s) { return cube(s.stddev, s.records(), s.n, s.m); })
      .def_property_readonly("log_mean",
                             [](const MonteCarloSummary& s) { return cube(s.log_mean, s.records(), s.n, s.m); });

  mod.def(
      "monte_carlo",
      [](const Scenario& s, long trials, long steps, std::uint64_t seed, int record_every, int threads) {
        MonteCarloOptions opt;
        opt.record_every = record_every;
        opt.threads = threads;
        py::gil_scoped_release release;
        return monte_carlo(s, trials, steps, seed, opt);
      },
      py::arg("scenario"), py::arg("trials"), py::arg("steps"), py::arg("seed"),
      py::arg("record_every") = 0, py::arg("threads") = 0);

  mod.def(
      "_check_theorem2_json",
      [](const MonteCarloSummary& summary, const Scenario& s, double rho) {
        const RateCertificate cert = certificate_of(s, {rho}, 1000);
        return dump(to_json(check_theorem2(summary, cert, rho)));
      },
      py::arg("summary"), py::arg("scenario"), py::arg("rho"));

  mod.def(
      "_reproduce_paper",
      [](const std::filesystem::path& out, long trials, long steps, std::uint64_t seed,
         const std::vector<double>& rho) {
        ReproductionOptions opt;
        opt.trials = trials;
        opt.steps = steps;
        opt.master_seed = seed;
        opt.rho_list = rho;
        ReproductionResult res;
        {
          py::gil_scoped_release release;
          res = reproduce_paper(out, opt);
        }
        std::vector<std::string> files;
        for (const auto& f : res.files) files.push_back(f.string());
        return py::dict(py::arg("files") = files,
                        py::arg("compliance") = dump(compliance_json(res.compliance, res.skipped, res.summary)),
                        py::arg("informed_agent_fastest") = res.ordinal.informed_agent_fastest,
                        py::arg("decreasing") = res.ordinal.decreasing);
      },
      py::arg("out"), py::arg("trials"), py::arg("steps"), py::arg("seed"), py::arg("rho"));
}
