// SPDX-License-Identifier: Apache-2.0
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "dnflow/convex_models.hpp"
#include "dnflow/diagnostics.hpp"
#include "dnflow/error.hpp"
#include "dnflow/experiment.hpp"
#include "dnflow/grid.hpp"
#include "dnflow/minimizing_movements.hpp"
#include "dnflow/snapshot.hpp"
#include "dnflow/spectral_flow.hpp"
#include "dnflow/viscosity_checks.hpp"

namespace py = pybind11;
using namespace dnflow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (m, node_count) view copied out of a field.
Array field_to_numpy(const VectorField& f) {
  Array out({f.m(), f.node_count()});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

VectorField field_from_numpy(const Grid& grid, Array a) {
  int m = 1;
  if (a.ndim() == 2) {
    m = static_cast<int>(a.shape(0));
    if (a.shape(1) != grid.node_count())
      fail(ErrorKind::InvalidArgument, "array must have shape (m, node_count)");
  } else if (a.ndim() == 1) {
    if (a.shape(0) % grid.node_count() != 0)
      fail(ErrorKind::InvalidArgument, "flat array length must be a multiple of node_count");
    m = static_cast<int>(a.shape(0) / grid.node_count());
  } else {
    fail(ErrorKind::InvalidArgument, "array must be 1- or 2-dimensional");
  }
  return VectorField(grid, m, std::vector<double>(a.data(), a.data() + a.size()));
}

std::vector<double> to_vector(Array a) { return {a.data(), a.data() + a.size()}; }

Array to_array(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_dnflow, m) {
  m.doc() = "Minimizing-movement solver for doubly nonlinear gradient flows";
  m.attr("__version__") = "0.1.0";

  // Library errors surface as dnflow.Error with a `kind` attribute naming the ErrorKind.
  // The type object lives for the whole interpreter, so it is intentionally leaked.
  static PyObject* error_type = py::exception<Error>(m, "Error", PyExc_RuntimeError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  // --- grid and fields ------------------------------------------------------

  py::class_<Grid>(m, "Grid")
      .def(py::init([](const std::vector<double>& lengths, const std::vector<int>& interior) {
             return Grid(lengths, interior);
           }),
           py::arg("lengths"), py::arg("interior"))
      .def_static("line", &Grid::line, py::arg("length"), py::arg("interior"))
      .def_static("rectangle", &Grid::rectangle, py::arg("length0"), py::arg("length1"),
                  py::arg("interior0"), py::arg("interior1"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("node_count", &Grid::node_count)
      .def_property_readonly("cell_count", &Grid::cell_count)
      .def_property_readonly("cell_volume", &Grid::cell_volume)
      .def("spacing", &Grid::spacing, py::arg("axis"))
      .def("length", &Grid::length, py::arg("axis"))
      .def("interior", &Grid::interior, py::arg("axis"))
      .def("coordinates", [](const Grid& g) {
        Array out({g.node_count(), g.dim()});
        auto r = out.mutable_unchecked<2>();
        for (int i = 0; i < g.node_count(); ++i)
          for (int a = 0; a < g.dim(); ++a) r(i, a) = g.node_coordinate(i, a);
        return out;
      })
      .def(py::self == py::self)
      .def("__repr__", [](const Grid& g) {
        std::string s = "Grid(dim=" + std::to_string(g.dim()) + ", interior=[";
        for (int a = 0; a < g.dim(); ++a) s += (a ? ", " : "") + std::to_string(g.interior(a));
        return s + "])";
      });

  py::class_<VectorField>(m, "VectorField")
      .def(py::init<const Grid&, int>(), py::arg("grid"), py::arg("m") = 1)
      .def(py::init(&field_from_numpy), py::arg("grid"), py::arg("values"))
      .def_property_readonly("grid", &VectorField::grid)
      .def_property_readonly("m", &VectorField::m)
      .def_property_readonly("node_count", &VectorField::node_count)
      .def("to_numpy", &field_to_numpy)
      .def("sup_norm", &VectorField::sup_norm)
      .def("__len__", &VectorField::size)
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(double() * py::self);

  m.def("lp_norm", &lp_norm, py::arg("field"), py::arg("p"));
  m.def("w1p_seminorm", &w1p_seminorm, py::arg("field"), py::arg("p"));
  m.def("rayleigh_quotient", &rayleigh_quotient, py::arg("field"), py::arg("p"));

  // --- models ---------------------------------------------------------------

  py::class_<DissipationSpec>(m, "DissipationSpec")
      .def_static("ppower", &DissipationSpec::ppower, py::arg("m"), py::arg("p"), py::arg("eps") = 0.0)
      .def_static("quadratic", &DissipationSpec::quadratic, py::arg("A"))
      .def_static("identity", &DissipationSpec::identity, py::arg("m"))
      .def_property_readonly("m", &DissipationSpec::m)
      .def_property_readonly("p", &DissipationSpec::exponent)
      .def_property_readonly("eps", &DissipationSpec::eps)
      .def_property_readonly("is_ppower", &DissipationSpec::is_ppower);

  py::class_<EnergySpec>(m, "EnergySpec")
      .def_static("ppower_norm", &EnergySpec::ppower_norm, py::arg("m"), py::arg("n"), py::arg("p"),
                  py::arg("eps") = 0.0)
      .def_static("quadratic_frobenius", &EnergySpec::quadratic_frobenius, py::arg("m"), py::arg("n"),
                  py::arg("theta") = 1.0)
      .def_property_readonly("m", &EnergySpec::m)
      .def_property_readonly("n", &EnergySpec::n)
      .def_property_readonly("p", &EnergySpec::exponent)
      .def_property_readonly("eps", &EnergySpec::eps)
      .def_property_readonly("is_ppower", &EnergySpec::is_ppower);

  m.def("psi_eval", [](const DissipationSpec& s, Array w) { return psi_eval(s, to_vector(w)); });
  m.def("psi_grad", [](const DissipationSpec& s, Array w) { return to_array(psi_grad(s, to_vector(w))); });
  m.def("psi_legendre", [](const DissipationSpec& s, Array xi) { return psi_legendre(s, to_vector(xi)); });
  m.def("F_eval", [](const EnergySpec& s, Array M) { return F_eval(s, to_vector(M)); });
  m.def("F_grad", [](const EnergySpec& s, Array M) { return to_array(F_grad(s, to_vector(M))); });

  py::class_<GrowthReport>(m, "GrowthReport")
      .def_readonly("p", &GrowthReport::p)
      .def_readonly("gamma", &GrowthReport::gamma)
      .def_readonly("beta", &GrowthReport::beta)
      .def_readonly("C", &GrowthReport::C)
      .def_readonly("worst_coercivity_gap", &GrowthReport::worst_coercivity_gap)
      .def_readonly("worst_growth_gap", &GrowthReport::worst_growth_gap)
      .def_readonly("passed", &GrowthReport::pass);
  m.def("check_growth_coercivity", &check_growth_coercivity, py::arg("psi"), py::arg("F"),
        py::arg("sample_count"), py::arg("seed") = 1);

  // --- scheme ---------------------------------------------------------------

  py::class_<StepConfig>(m, "StepConfig")
      .def(py::init([](double tau, double residual_tol, int max_iter, std::vector<double> eps_schedule) {
             return StepConfig{tau, residual_tol, max_iter, std::move(eps_schedule)};
           }),
           py::arg("tau") = 0.0, py::arg("residual_tol") = 0.0, py::arg("max_iter") = 200,
           py::arg("eps_schedule") = std::vector<double>{})
      .def_readwrite("tau", &StepConfig::tau)
      .def_readwrite("residual_tol", &StepConfig::residual_tol)
      .def_readwrite("max_iter", &StepConfig::max_iter)
      .def_readwrite("eps_schedule", &StepConfig::eps_schedule);

  py::class_<StepStat>(m, "StepStat")
      .def_readonly("iterations", &StepStat::iterations)
      .def_readonly("residual", &StepStat::residual)
      .def_readonly("functional", &StepStat::functional);

  py::class_<StepResult>(m, "StepResult")
      .def_readonly("field", &StepResult::field)
      .def_readonly("stat", &StepResult::stat);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("grid", &Trajectory::grid)
      .def_readonly("m", &Trajectory::m)
      .def_readonly("tau", &Trajectory::tau)
      .def_readonly("residual_tol", &Trajectory::residual_tol)
      .def_readonly("fields", &Trajectory::fields)
      .def_readonly("stats", &Trajectory::stats)
      .def_property_readonly("steps", &Trajectory::steps)
      .def("time", &Trajectory::time, py::arg("k"))
      .def("velocity", &Trajectory::velocity, py::arg("k"))
      .def("to_numpy", [](const Trajectory& t) {
        // shape (N + 1, m, node_count)
        const int nodes = t.grid.node_count();
        Array out({static_cast<int>(t.fields.size()), t.m, nodes});
        double* dst = out.mutable_data();
        for (const auto& f : t.fields) dst = std::copy(f.values().begin(), f.values().end(), dst);
        return out;
      });

  py::class_<Interpolants>(m, "Interpolants")
      .def_readonly("piecewise_constant", &Interpolants::piecewise_constant)
      .def_readonly("piecewise_linear", &Interpolants::piecewise_linear);

  m.def("stored_energy", &stored_energy, py::arg("u"), py::arg("F"));
  m.def("default_residual_tol", &default_residual_tol, py::arg("g"), py::arg("F"));
  m.def("weak_residual", &weak_residual, py::arg("v_next"), py::arg("v_prev"), py::arg("psi"),
        py::arg("F"), py::arg("tau"));
  m.def("step", &step, py::arg("v_prev"), py::arg("psi"), py::arg("F"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("evolve", &evolve, py::arg("g"), py::arg("psi"), py::arg("F"), py::arg("T"), py::arg("N"),
        py::arg("config") = StepConfig{}, py::call_guard<py::gil_scoped_release>());
  m.def("interpolants", &interpolants, py::arg("trajectory"), py::arg("t"));

  // --- diagnostics ----------------------------------------------------------

  py::class_<SeriesReport>(m, "SeriesReport")
      .def_readonly("name", &SeriesReport::name)
      .def_readonly("times", &SeriesReport::times)
      .def_readonly("values", &SeriesReport::values)
      .def_readonly("monotone_violation", &SeriesReport::monotone_violation)
      .def_readonly("slack", &SeriesReport::slack)
      .def_readonly("passed", &SeriesReport::pass);

  py::class_<EnergyReport>(m, "EnergyReport")
      .def_readonly("series", &EnergyReport::series)
      .def_readonly("cumulative_dissipation", &EnergyReport::cumulative_dissipation)
      .def_readonly("identity_gap", &EnergyReport::identity_gap)
      .def_readonly("identity_defect", &EnergyReport::identity_defect)
      .def_readonly("step_defect", &EnergyReport::step_defect)
      .def_readonly("max_step_defect", &EnergyReport::max_step_defect)
      .def_readonly("max_identity_defect", &EnergyReport::max_identity_defect)
      .def_readonly("passed", &EnergyReport::pass);

  py::class_<ScaledEnergyReport>(m, "ScaledEnergyReport")
      .def_readonly("series", &ScaledEnergyReport::series)
      .def_readonly("decay_bound_violation", &ScaledEnergyReport::decay_bound_violation)
      .def_readonly("decay_bound_passed", &ScaledEnergyReport::decay_bound_pass);

  py::class_<RegularityNorms>(m, "RegularityNorms")
      .def_readonly("d2v_l2", &RegularityNorms::d2v_l2)
      .def_readonly("dvt_l2_local", &RegularityNorms::dvt_l2_local)
      .def_readonly("rhs_bound", &RegularityNorms::rhs_bound)
      .def_readonly("rhs_local", &RegularityNorms::rhs_local)
      .def_readonly("d2v_ratio", &RegularityNorms::d2v_ratio)
      .def_readonly("dvt_ratio", &RegularityNorms::dvt_ratio);

  m.def("energy_series", &energy_series, py::arg("trajectory"));
  m.def("dissipation_series", &dissipation_series, py::arg("trajectory"));
  m.def("max_principle_check", &max_principle_check, py::arg("trajectory"));
  m.def("scaled_energy_report", &scaled_energy_report, py::arg("trajectory"), py::arg("upsilon"));
  m.def("energy_convexity_check", &energy_convexity_check, py::arg("trajectory"), py::arg("p"));
  m.def("excess", &excess, py::arg("trajectory"), py::arg("center"), py::arg("center_step"),
        py::arg("radius_cells"));
  m.def("regularity_norms", &regularity_norms, py::arg("trajectory"), py::arg("inner_margin_cells"));

  // --- ground states --------------------------------------------------------

  py::class_<GroundStateReport>(m, "GroundStateReport")
      .def_readonly("p", &GroundStateReport::p)
      .def_readonly("m", &GroundStateReport::m)
      .def_readonly("lambda_estimate", &GroundStateReport::lambda_estimate)
      .def_readonly("upsilon", &GroundStateReport::upsilon)
      .def_readonly("profile", &GroundStateReport::profile)
      .def_readonly("rayleigh_history", &GroundStateReport::rayleigh_history)
      .def_readonly("iterations", &GroundStateReport::iterations)
      .def_readonly("converged", &GroundStateReport::converged);

  py::class_<FlowConfig>(m, "FlowConfig")
      .def(py::init<>())
      .def_readwrite("rq_tol", &FlowConfig::rq_tol)
      .def_readwrite("profile_tol", &FlowConfig::profile_tol)
      .def_readwrite("max_sweeps", &FlowConfig::max_sweeps)
      .def_readwrite("step_tol", &FlowConfig::step_tol)
      .def_readwrite("step_max_iter", &FlowConfig::step_max_iter)
      .def_readwrite("eps", &FlowConfig::eps)
      .def_readwrite("eps_schedule", &FlowConfig::eps_schedule);

  py::class_<DirectConfig>(m, "DirectConfig")
      .def(py::init<>())
      .def_readwrite("grad_tol", &DirectConfig::grad_tol)
      .def_readwrite("max_iter", &DirectConfig::max_iter);

  py::class_<LambdaBounds>(m, "LambdaBounds")
      .def_readonly("lower", &LambdaBounds::lower)
      .def_readonly("upper", &LambdaBounds::upper)
      .def_readonly("margin", &LambdaBounds::margin)
      .def_readonly("passed", &LambdaBounds::pass);

  py::class_<DecayFit>(m, "DecayFit")
      .def_readonly("fitted_rate", &DecayFit::fitted_rate)
      .def_readonly("bound_rate", &DecayFit::bound_rate)
      .def_readonly("max_bound_violation", &DecayFit::max_bound_violation)
      .def_readonly("passed", &DecayFit::pass);

  m.def("rayleigh_series", &rayleigh_series, py::arg("trajectory"), py::arg("p"));
  m.def("canonical_gauge", &canonical_gauge, py::arg("u"));
  m.def("ground_state_via_flow", &ground_state_via_flow, py::arg("g"), py::arg("p"),
        py::arg("config") = FlowConfig{}, py::call_guard<py::gil_scoped_release>());
  m.def("direct_rayleigh_minimize", &direct_rayleigh_minimize, py::arg("grid"), py::arg("p"),
        py::arg("m") = 1, py::arg("seed") = 0, py::arg("config") = DirectConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("el_residual", &el_residual, py::arg("u"), py::arg("lam"), py::arg("p"));
  m.def("lambda_bounds_check", &lambda_bounds_check, py::arg("lambda_vec"), py::arg("lambda_scalar"),
        py::arg("p"), py::arg("m"));
  m.def("decay_rate_fit", &decay_rate_fit, py::arg("trajectory"), py::arg("p"), py::arg("upsilon_h"));
  m.def("discrete_upsilon", &discrete_upsilon, py::arg("tau"), py::arg("upsilon_h"));

  // --- scalar checks --------------------------------------------------------

  py::class_<RefinementReport>(m, "RefinementReport")
      .def_readonly("N_list", &RefinementReport::N_list)
      .def_readonly("pairwise_sup_distances", &RefinementReport::pairwise_sup_distances)
      .def_readonly("contraction_ratios", &RefinementReport::contraction_ratios)
      .def_readonly("passed", &RefinementReport::pass);

  py::class_<ComparisonReport>(m, "ComparisonReport")
      .def_readonly("max_violation", &ComparisonReport::max_violation)
      .def_readonly("slack", &ComparisonReport::slack)
      .def_readonly("passed", &ComparisonReport::pass);

  m.def("refinement_study", &refinement_study, py::arg("g"), py::arg("psi"), py::arg("F"), py::arg("T"),
        py::arg("N_list"), py::arg("config") = StepConfig{}, py::arg("threads") = 1u,
        py::call_guard<py::gil_scoped_release>());
  m.def("comparison_check", &comparison_check, py::arg("g_low"), py::arg("g_high"), py::arg("psi"),
        py::arg("F"), py::arg("T"), py::arg("N"), py::arg("config") = StepConfig{},
        py::call_guard<py::gil_scoped_release>());

  // --- data and experiments -------------------------------------------------

  m.def("builtin_initial", &builtin_initial, py::arg("name"), py::arg("params") = std::map<std::string, double>{},
        py::arg("grid"), py::arg("m") = 1, py::arg("seed") = 0);
  m.def("snapshot_to_string", &snapshot_to_string, py::arg("field"));
  m.def("snapshot_from_string", &snapshot_from_string, py::arg("text"));
  m.def("write_snapshot", &write_snapshot, py::arg("path"), py::arg("field"));
  m.def("read_snapshot", &read_snapshot, py::arg("path"));

  m.def(
      "run_experiment",
      [](const std::string& command, const std::filesystem::path& config,
         std::optional<std::filesystem::path> out_dir, std::optional<std::uint64_t> seed, bool quiet,
         unsigned threads) {
        RunOptions opt;
        opt.out_dir = std::move(out_dir);
        opt.seed = seed;
        opt.quiet = quiet;
        opt.threads = threads;
        py::gil_scoped_release release;
        return run_experiment(command, config, opt);
      },
      py::arg("command"), py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none(),
      py::arg("quiet") = true, py::arg("threads") = 0u,
      "Runs a config file; returns the process exit code (0 on success).");
}
