#include <memory>
#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "survnet/cli.hpp"
#include "survnet/data.hpp"
#include "survnet/error.hpp"
#include "survnet/kaplan_meier.hpp"
#include "survnet/metrics.hpp"
#include "survnet/models.hpp"
#include "survnet/training.hpp"

namespace py = pybind11;
using namespace survnet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
  Tensor t({static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))});
  std::copy(a.data(), a.data() + a.size(), t.values().begin());
  return t;
}

Array to_array(const Tensor& t) {
  Array a({t.rows(), t.cols()});
  std::copy(t.values().begin(), t.values().end(), a.mutable_data());
  return a;
}

struct Model {
  std::shared_ptr<SurvivalModel> impl;

  std::vector<double> eval(const std::vector<double>& times, const Array& x, bool hazard) const {
    const Tensor xt = to_tensor(x);
    return hazard ? impl->cumulative_hazard(times, xt) : impl->survival(times, xt);
  }
};

NeuralSurvivalModel& neural(Model& m) {
  auto* n = dynamic_cast<NeuralSurvivalModel*>(m.impl.get());
  if (!n) throw UnsupportedOperation(to_string(m.impl->kind()) + " has no trainable parameters");
  return *n;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  auto base = py::register_exception<Error>(m, "SurvnetError", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<ContractError>(m, "ContractError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<UnsupportedOperation>(m, "UnsupportedOperation", base);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("features", [](const Dataset& d) { return to_array(d.features); })
      .def_property_readonly("events", [](const Dataset& d) { return d.events; })
      .def_property_readonly("times", [](const Dataset& d) { return d.times; })
      .def_property_readonly("feature_names", [](const Dataset& d) { return d.feature_names; })
      .def_property_readonly("normalized", &Dataset::normalized)
      .def("__len__", &Dataset::size)
      .def("subset", [](const Dataset& d, const std::vector<std::size_t>& idx) { return d.subset(idx); })
      .def("to_json", [](const Dataset& d) { return d.to_json().dump(); });

  m.def(
      "make_dataset",
      [](const Array& x, std::vector<int> events, std::vector<double> times) {
        Dataset d;
        d.features = to_tensor(x);
        d.events = std::move(events);
        d.times = std::move(times);
        for (std::size_t i = 0; i < d.dims(); ++i) d.feature_names.push_back("x" + std::to_string(i));
        d.validate();
        return d;
      },
      py::arg("x"), py::arg("events"), py::arg("times"));
  m.def(
      "load_csv",
      [](const std::string& path, std::vector<std::string> features, std::string event, std::string time) {
        return load_csv(path, CsvSchema{std::move(features), std::move(event), std::move(time)});
      },
      py::arg("path"), py::arg("features") = std::vector<std::string>{}, py::arg("event_col") = "event",
      py::arg("time_col") = "time");
  m.def("normalize", &normalize);
  m.def(
      "synthetic_weibull",
      [](std::size_t n, std::size_t dims, double shape, double effect, double censor_rate, std::uint64_t seed) {
        return synthetic_weibull({n, dims, shape, effect, censor_rate, seed});
      },
      py::arg("n") = 2000, py::arg("dims") = 4, py::arg("shape") = 1.5, py::arg("effect") = 1.0,
      py::arg("censor_rate") = 0.3, py::arg("seed") = 0);
  m.def(
      "km_balanced_split",
      [](const Dataset& d, std::array<double, 3> fractions, std::size_t n_seeds, std::uint64_t seed) {
        return km_balanced_split(d, fractions, n_seeds, seed).indices;
      },
      py::arg("data"), py::arg("fractions") = std::array<double, 3>{0.6, 0.2, 0.2}, py::arg("n_seeds") = 1000,
      py::arg("seed") = 0);
  m.def(
      "km_fit",
      [](const std::vector<double>& t, const std::vector<int>& e) {
        const auto c = km_fit(t, e);
        return py::make_tuple(c.times, c.values);
      },
      py::arg("times"), py::arg("events"));

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& s) { return to_string(s.impl->kind()); })
      .def_property_readonly("feature_dim", [](const Model& s) { return s.impl->feature_dim(); })
      .def(
          "survival", [](const Model& s, const std::vector<double>& t, const Array& x) { return s.eval(t, x, false); },
          py::arg("times"), py::arg("x"))
      .def(
          "cumulative_hazard",
          [](const Model& s, const std::vector<double>& t, const Array& x) { return s.eval(t, x, true); },
          py::arg("times"), py::arg("x"))
      .def("to_json", [](const Model& s) { return s.impl->to_json().dump(); });

  m.def(
      "build_model",
      [](const std::string& kind, std::size_t dims, std::uint64_t seed, const std::string& config) {
        const ModelConfig c = config.empty() ? ModelConfig{} : ModelConfig::from_json(nlohmann::json::parse(config));
        return Model{build_model(parse_model_kind(kind), dims, c, seed)};
      },
      py::arg("kind"), py::arg("dims"), py::arg("seed") = 0, py::arg("config") = "");
  m.def("model_from_json", [](const std::string& j) { return Model{model_from_json(nlohmann::json::parse(j))}; });
  m.def(
      "fit_km",
      [](const Dataset& d) {
        auto km = std::make_shared<KaplanMeierModel>(d.dims());
        km->fit(d);
        return Model{km};
      },
      py::arg("data"));

  m.def(
      "train",
      [](Model& model, const Dataset& train_set, const Dataset& val_set, const std::string& config) {
        const TrainConfig cfg = config.empty() ? TrainConfig{} : TrainConfig::from_json(nlohmann::json::parse(config));
        TrainHistory h;
        {
          py::gil_scoped_release release;
          h = train(neural(model), train_set, val_set, cfg);
        }
        py::dict out;
        out["train_loss"] = h.train_loss;
        out["val_loss"] = h.val_loss;
        out["moving_average"] = h.moving_average;
        out["stop_reason"] = h.stop_reason;
        out["steps"] = h.steps;
        out["best_step"] = h.best_step;
        return out;
      },
      py::arg("model"), py::arg("train_set"), py::arg("val_set"), py::arg("config") = "");
  m.def(
      "evaluate",
      [](const Model& model, const Dataset& d, double t_max, std::size_t grid_size) {
        return evaluate_all(*model.impl, d, TimeGrid{t_max, grid_size}).to_json().dump();
      },
      py::arg("model"), py::arg("data"), py::arg("t_max") = 1.0, py::arg("grid_size") = kDefaultGridSize);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
