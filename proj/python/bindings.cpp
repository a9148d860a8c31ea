#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "conewave/carleman.hpp"
#include "conewave/cli.hpp"
#include "conewave/exact_solutions.hpp"
#include "conewave/geometry.hpp"
#include "conewave/solver.hpp"

namespace py = pybind11;
using namespace conewave;

PYBIND11_MODULE(_core, m) {
  m.doc() = "conewave native core";

  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("ode_value",
        [](double p, double t) {
          const auto v = ode_value(p, t);
          return py::make_tuple(v.phi, v.phi_t);
        },
        py::arg("p"), py::arg("t"), "(phi*(t), d_t phi*(t)) for t < 0.");
  m.def("annulus_scaling_constant",
        [](double p, int n, double sigma0, double sigma1) {
          const auto c = annulus_scaling_constant(p, n, sigma0, sigma1);
          return py::make_tuple(c.grad, c.phi);
        },
        py::arg("p"), py::arg("n"), py::arg("sigma0"), py::arg("sigma1"));
  m.def("slab_scaling_constant",
        [](double p, int n, double sigma, double gamma) {
          const auto c = slab_scaling_constant(p, n, sigma, gamma);
          return py::make_tuple(c.grad, c.phi);
        },
        py::arg("p"), py::arg("n"), py::arg("sigma"), py::arg("gamma"));
  m.def("mz_quantity_ode", &mz_quantity_ode, py::arg("p"), py::arg("n"), py::arg("t"),
        py::arg("sigma") = 1.0);
  m.def("weight",
        [](double t_star, double t, double r) {
          return eval_weight(ShiftedWeight::axis(t_star), RadialPoint{t, r});
        },
        py::arg("t_star"), py::arg("t"), py::arg("r"),
        "Axis-shifted weight (r^2 - (t - t*)^2) / 4.");

  py::class_<InitialDataSpec>(m, "InitialDataSpec")
      .def_static("zero", &InitialDataSpec::zero)
      .def_static("truncated_ode", &InitialDataSpec::truncated_ode, py::arg("cutoff"),
                  py::arg("ramp"))
      .def_static("gaussian", &InitialDataSpec::gaussian, py::arg("amplitude"), py::arg("width"))
      .def_static("file", &InitialDataSpec::file, py::arg("path"))
      .def("support_radius", &InitialDataSpec::support_radius);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("n", &SolverConfig::n)
      .def_readwrite("p", &SolverConfig::p)
      .def_readwrite("radius", &SolverConfig::radius)
      .def_readwrite("intervals", &SolverConfig::intervals)
      .def_readwrite("cfl", &SolverConfig::cfl)
      .def_readwrite("t0", &SolverConfig::t0)
      .def_readwrite("t_end", &SolverConfig::t_end)
      .def_readwrite("phi_max", &SolverConfig::phi_max)
      .def_readwrite("snapshot_times", &SolverConfig::snapshot_times)
      .def_readwrite("diagnostic_radius", &SolverConfig::diagnostic_radius)
      .def_readwrite("nonlinear", &SolverConfig::nonlinear)
      .def_property_readonly("dr", &SolverConfig::dr)
      .def_property_readonly("dt", &SolverConfig::dt)
      .def_property_readonly("steps", &SolverConfig::steps)
      .def("validate", &SolverConfig::validate);

  py::class_<RunResult>(m, "RunResult")
      .def_property_readonly("status", [](const RunResult& r) { return to_string(r.status); })
      .def_readonly("dr", &RunResult::dr)
      .def_readonly("dt", &RunResult::dt)
      .def_readonly("steps_taken", &RunResult::steps_taken)
      .def_readonly("t_final", &RunResult::t_final)
      .def_readonly("t_b", &RunResult::t_b)
      .def_readonly("t_blowup_extrapolated", &RunResult::t_blowup_extrapolated)
      .def_readonly("max_phi", &RunResult::max_phi)
      .def_readonly("axis_times", &RunResult::axis_times)
      .def_readonly("axis_values", &RunResult::axis_values)
      .def_readonly("final_phi", &RunResult::final_phi)
      .def_property_readonly("energy",
                             [](const RunResult& r) {
                               std::vector<std::pair<double, double>> out;
                               for (const auto& e : r.energy) out.emplace_back(e.t, e.energy);
                               return out;
                             })
      .def_property_readonly("snapshot_times",
                             [](const RunResult& r) { return r.snapshots.times(); })
      .def("snapshot_phi",
           [](const RunResult& r, std::size_t m) {
             const auto s = r.snapshots.phi(m);
             return std::vector<double>(s.begin(), s.end());
           },
           py::arg("level"))
      .def("summary_csv", [](const RunResult& r) {
        std::ostringstream out;
        write_run_summary(out, r);
        return out.str();
      });

  m.def("evolve", &evolve, py::arg("config"), py::arg("data"),
        py::call_guard<py::gil_scoped_release>());
  m.def("richardson_blowup_time", &richardson_blowup_time, py::arg("coarse"), py::arg("fine"));

  m.def("verify_carleman",
        [](std::size_t cases, std::uint64_t seed, double a_lo, double a_hi, unsigned threads) {
          const auto batch = random_carleman_cases(cases, seed, a_lo, a_hi);
          std::vector<CarlemanReport> reports;
          {
            py::gil_scoped_release release;
            reports = verify_batch(batch, QuadratureSpec{}, threads);
          }
          std::ostringstream out;
          write_carleman_csv(out, batch, reports);
          return out.str();
        },
        py::arg("cases") = 200, py::arg("seed") = 7, py::arg("a_lo") = 0.05,
        py::arg("a_hi") = 0.45, py::arg("threads") = 1,
        "Randomized global Carleman checks; returns the CSV report.");

  m.def("run_command",
        [](const std::string& command, const std::string& config, std::optional<std::string> out,
           std::optional<std::uint64_t> seed, std::optional<unsigned> threads) {
          CliOptions o{command, config, std::move(out), seed, threads};
          std::ostringstream err;
          int code = 0;
          {
            py::gil_scoped_release release;
            code = run_command(o, err);
          }
          return py::make_tuple(code, err.str());
        },
        py::arg("command"), py::arg("config"), py::arg("out") = py::none(),
        py::arg("seed") = py::none(), py::arg("threads") = py::none(),
        "Runs a subcommand like the command-line tool; returns (exit_code, messages).");
}
