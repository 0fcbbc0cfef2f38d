#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "csmorse/derivcheck.hpp"
#include "csmorse/nonsmooth.hpp"
#include "csmorse/report.hpp"

namespace py = pybind11;
using namespace csmorse;

namespace {

Scenario configured(const Scenario& sc, std::optional<std::uint64_t> seed, std::optional<int> threads) {
  Scenario out = sc;
  if (seed) out.set_seed(*seed);
  if (threads) out.set_threads(*threads);
  return out;
}

py::dict fiber_dict(const FiberCensus& fc) {
  Eigen::MatrixXd points(static_cast<Eigen::Index>(fc.points.size()), fc.points.empty() ? 0 : fc.points.front().size());
  for (std::size_t i = 0; i < fc.points.size(); ++i) points.row(static_cast<Eigen::Index>(i)) = fc.points[i].transpose();
  std::vector<std::string> strata;
  for (const auto& j : fc.point_strata) strata.push_back(format_indices(j));
  py::dict d;
  d["summary"] = py::module_::import("json").attr("loads")(fiber_json(fc).dump());
  d["points"] = points;
  d["strata"] = strata;
  d["labels"] = fc.labels;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nonsmooth Morse analysis of continuous selections on constraint manifolds";

  // Mirrors the CLI exit codes: validation problems map to ValueError, internal
  // inconsistencies to RuntimeError.
  static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
  static py::exception<ConsistencyError> consistency_error(m, "ConsistencyError", PyExc_RuntimeError);
  static py::exception<DomainError> domain_error(m, "DomainError", PyExc_ArithmeticError);
  static py::exception<GeometryError> geometry_error(m, "GeometryError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ScenarioError& e) {
      PyObject* type = validation_error.ptr();
      PyObject* value = PyObject_CallFunction(type, "s", e.what());
      PyObject_SetAttrString(value, "line", PyLong_FromLong(e.line()));
      PyObject_SetAttrString(value, "column", PyLong_FromLong(e.column()));
      PyObject_SetAttrString(value, "reason", PyUnicode_FromString(e.reason().c_str()));
      PyErr_SetObject(type, value);
      Py_DECREF(value);
    } catch (const ValidationError& e) {
      py::set_error(validation_error, e.what());
    } catch (const ParseError& e) {
      py::set_error(validation_error, e.what());
    } catch (const ConsistencyError& e) {
      py::set_error(consistency_error, e.what());
    } catch (const DomainError& e) {
      py::set_error(domain_error, e.what());
    } catch (const GeometryError& e) {
      py::set_error(geometry_error, e.what());
    }
  });

  py::class_<Expression>(m, "Expression")
      .def(py::init([](const std::string& text, int dimension) { return Expression::parse(text, dimension); }),
           py::arg("text"), py::arg("dimension"))
      .def_property_readonly("dimension", &Expression::dimension)
      .def("__call__", [](const Expression& e, const Eigen::VectorXd& x) { return e.eval(x); }, py::arg("x"))
      .def("gradient", [](const Expression& e, const Eigen::VectorXd& x) { return e.eval_jet1(x).gradient; },
           py::arg("x"))
      .def("hessian", [](const Expression& e, const Eigen::VectorXd& x) { return e.eval_jet2(x).hessian; },
           py::arg("x"))
      .def("tree", &Expression::tree)
      .def("__str__", &Expression::str)
      .def("__repr__", [](const Expression& e) { return "Expression('" + e.str() + "')"; });

  m.def(
      "min_norm_in_hull",
      [](const Eigen::MatrixXd& vectors) {
        const MinNormResult r = min_norm_in_hull(vectors);
        return py::make_tuple(r.lambda, r.point, r.norm);
      },
      py::arg("vectors"),
      "Minimum-norm point of the convex hull of the columns; returns (weights, point, norm).");

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readonly("dimension", &Scenario::dimension)
      .def_readonly("constraints", &Scenario::constraints)
      .def_readonly("selections", &Scenario::selections)
      .def_readonly("seed", &Scenario::seed)
      .def_readonly("threads", &Scenario::threads)
      .def_readonly("fiber_levels", &Scenario::fiber_levels)
      .def_property_readonly("selector", [](const Scenario& s) { return std::string(to_string(s.selector)); })
      .def_property(
          "fiber_samples", [](const Scenario& s) { return s.fibers.samples; },
          [](Scenario& s, int n) {
            if (n < 2) throw ValidationError("fiber sample count must be at least 2");
            s.fibers.samples = n;
          });

  m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("source_name") = "<scenario>");
  m.def("load_scenario", &load_scenario, py::arg("path"));

  m.def(
      "analyze_json",
      [](const Scenario& sc, std::optional<std::uint64_t> seed, std::optional<int> threads) {
        const Scenario run = configured(sc, seed, threads);
        AnalysisResult r;
        {
          py::gil_scoped_release release;
          r = analyze(run);
        }
        return dump(report_json(run, r));
      },
      py::arg("scenario"), py::arg("seed") = py::none(), py::arg("threads") = py::none(),
      "Full analysis; returns the report document as JSON text.");

  m.def(
      "fibers",
      [](const Scenario& sc, std::optional<std::vector<double>> levels, std::optional<int> grid,
         std::optional<std::uint64_t> seed, std::optional<int> threads) {
        if (levels.has_value() == grid.has_value()) throw ValidationError("give exactly one of levels and grid");
        const Scenario run = configured(sc, seed, threads);
        std::vector<FiberCensus> out;
        {
          py::gil_scoped_release release;
          const SearchResult search = find_critical_points(run.function(), run.manifold(), run.search);
          const auto cv = critical_values(search.records, search.degenerate_sets);
          out = run_fibers(run, levels ? *levels : grid_levels(cv, *grid), cv);
        }
        py::list result;
        for (const auto& fc : out) result.append(fiber_dict(fc));
        return result;
      },
      py::arg("scenario"), py::arg("levels") = py::none(), py::arg("grid") = py::none(), py::arg("seed") = py::none(),
      py::arg("threads") = py::none());

  m.def(
      "check_derivatives",
      [](const Scenario& sc, int count, double tolerance) {
        const DerivativeReport rep = check_derivatives(sc, count, tolerance);
        py::list rows;
        for (const auto& r : rep.rows) {
          py::dict d;
          d["label"] = r.label;
          d["expression"] = r.expression;
          d["points"] = r.points;
          d["skipped"] = r.skipped;
          d["clipped"] = r.clipped;
          d["gradient_error"] = r.gradient_error;
          d["hessian_error"] = r.hessian_error;
          d["passed"] = r.passed;
          d["warnings"] = r.warnings;
          rows.append(d);
        }
        return rows;
      },
      py::arg("scenario"), py::arg("count") = 20, py::arg("tolerance") = 1e-6);

  m.def("report_schema", &report_schema);
}
