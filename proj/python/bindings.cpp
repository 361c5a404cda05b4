#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "typicality/cli.hpp"
#include "typicality/error.hpp"
#include "typicality/prototype.hpp"
#include "typicality/report.hpp"
#include "typicality/stats.hpp"

namespace py = pybind11;
namespace tp = typicality;

namespace {

using VectorMap = std::map<std::string, std::vector<double>>;

std::map<std::string, tp::Vector> to_vectors(const VectorMap& in) {
  std::map<std::string, tp::Vector> out;
  for (const auto& [k, v] : in) out.emplace(k, tp::Vector(v));
  return out;
}

tp::PrototypeStrategy parse_strategy(const std::string& name) {
  if (name == "mean") return tp::PrototypeStrategy::MeanOfExemplars;
  if (name == "label") return tp::PrototypeStrategy::CategoryLabel;
  if (name == "appended") return tp::PrototypeStrategy::Appended;
  throw py::value_error("strategy must be 'mean', 'label' or 'appended'");
}

}  // namespace

PYBIND11_MODULE(_typicality, m) {
  m.doc() = "Concept typicality alignment core";

  // Raised for every library error; `.code` holds the snake_case error code.
  static PyObject* error = PyErr_NewException("typicality._typicality.TypicalityError",
                                              PyExc_ValueError, nullptr);
  m.attr("TypicalityError") = py::handle(error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const tp::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error)(e.what());
      exc.attr("code") = std::string(tp::to_string(e.code()));
      PyErr_SetObject(error, exc.ptr());
    }
  });

  m.def("cosine_similarity", [](const std::vector<double>& a, const std::vector<double>& b) {
    return tp::cosine_similarity(tp::Vector(a), tp::Vector(b));
  });
  m.def("fractional_ranks", [](const std::vector<double>& xs) { return tp::fractional_ranks(xs); });
  m.def("spearman", [](const std::vector<double>& xs, const std::vector<double>& ys) {
    return tp::spearman(xs, ys);
  });
  m.def("standardize", [](const std::vector<double>& xs) { return tp::standardize(xs); });

  m.def(
      "ols2_standardized",
      [](const std::vector<double>& y, const std::vector<double>& x1, const std::vector<double>& x2) {
        const auto fit = tp::ols2_standardized(y, x1, x2);
        py::dict d;
        d["beta1"] = fit.beta1;
        d["beta2"] = fit.beta2;
        d["intercept"] = fit.intercept;
        d["r_squared"] = fit.r_squared;
        d["fitted"] = fit.fitted;
        return d;
      },
      py::arg("y"), py::arg("x1"), py::arg("x2"));

  m.def(
      "typicality_scores",
      [](const VectorMap& exemplars, const std::string& strategy,
         std::optional<std::vector<double>> label, std::optional<VectorMap> images) {
        tp::CategoryData data;
        data.category = "category";
        data.exemplars = to_vectors(exemplars);
        if (label) data.label = tp::Vector(*label);
        if (images) data.image_exemplars = to_vectors(*images);
        return tp::typicality_scores(parse_strategy(strategy), data).scores;
      },
      py::arg("exemplars"), py::arg("strategy") = "mean", py::arg("label") = py::none(),
      py::arg("images") = py::none(),
      "Exemplar -> cosine score. 'appended' also needs label and per-exemplar image vectors.");

  m.def(
      "single_image_stability",
      [](const std::map<std::string, std::vector<std::vector<double>>>& images,
         const std::map<std::string, double>& human, std::size_t trials, std::uint64_t seed,
         std::size_t jobs) {
        std::map<std::string, std::vector<tp::Vector>> vs;
        for (const auto& [k, list] : images) {
          for (const auto& v : list) vs[k].emplace_back(v);
        }
        const auto r = tp::single_image_stability(vs, human, trials, seed, jobs);
        py::dict d;
        d["rhos"] = r.rhos;
        d["min"] = r.min;
        d["max"] = r.max;
        d["mean"] = r.mean;
        d["multi_image_rho"] = r.multi_image_rho;
        d["seed"] = r.seed;
        return d;
      },
      py::arg("images"), py::arg("human"), py::arg("trials") = 100, py::arg("seed") = 0,
      py::arg("jobs") = 1);

  m.def("format_fixed4", &tp::format_fixed4);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"typicality"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = tp::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool; returns (exit_code, stdout, stderr).");
}
