#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "canyonpl/baselines.hpp"
#include "canyonpl/clutter.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/evaluation.hpp"
#include "canyonpl/pointcloud.hpp"
#include "canyonpl/regressors.hpp"
#include "canyonpl/synthetic.hpp"

namespace py = pybind11;
using namespace canyonpl;

namespace {

SplitPlan make_plan(const Dataset& data, const std::string& protocol, std::size_t iterations, std::uint64_t seed) {
  return parse_protocol(protocol) == Protocol::street_by_street ? plan_street_by_street(data)
                                                                 : plan_links_shuffle_split(data, iterations, seed);
}

ProtocolOptions make_options(const std::string& feature_set, const std::vector<std::string>& families,
                             std::uint64_t seed, std::size_t workers) {
  ProtocolOptions opt;
  opt.feature_set = parse_feature_set(feature_set);
  opt.families.clear();
  for (const auto& f : families) opt.families.push_back(parse_family(f));
  opt.seed = seed;
  opt.workers = workers;
  return opt;
}

py::dict evaluate(const Dataset& data, const std::string& protocol, const std::string& feature_set,
                  const std::vector<std::string>& families, std::size_t iterations, std::uint64_t seed,
                  std::size_t workers) {
  const auto opt = make_options(feature_set, families, seed, workers);
  if (uses_building(opt.feature_set))
    throw ConfigError("building features are only available from the command-line tool");
  const auto clutter = extract_clutter_features(data, DenoiseParams{});
  const auto plan = make_plan(data, protocol, iterations, seed);
  EvaluationReport rep;
  {
    py::gil_scoped_release release;
    rep = run_protocol(plan, data, clutter, {}, opt);
  }
  py::dict models;
  for (const auto& m : rep.models) {
    py::dict d;
    d["fold_rmse"] = m.fold_rmse;
    d["fold_params"] = m.fold_params;
    d["mean"] = m.mean;
    d["std"] = m.std;
    models[py::str(m.model)] = d;
  }
  py::dict out;
  out["protocol"] = to_string(rep.protocol);
  out["feature_set"] = rep.feature_set;
  out["columns"] = rep.columns;
  out["folds"] = rep.fold_labels;
  out["train_sizes"] = rep.train_sizes;
  out["test_sizes"] = rep.test_sizes;
  out["models"] = models;
  return out;
}

py::list importance(const Dataset& data, const std::string& protocol, std::size_t iterations, std::uint64_t seed) {
  ProtocolOptions opt;
  opt.seed = seed;
  const auto clutter = extract_clutter_features(data, DenoiseParams{});
  const auto weights = lasso_importance(make_plan(data, protocol, iterations, seed), clutter, opt);
  py::list out;
  for (const auto& w : weights) {
    py::dict d;
    d["feature"] = w.feature;
    d["mean"] = w.mean;
    d["min"] = w.min;
    d["max"] = w.max;
    d["per_fold"] = w.per_fold;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Clutter-aware path-loss modelling for street canyons";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<LeakageError>(m, "LeakageError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<SceneConfig>(m, "SceneConfig")
      .def(py::init<>())
      .def_readwrite("n_streets", &SceneConfig::n_streets)
      .def_readwrite("length_min", &SceneConfig::length_min)
      .def_readwrite("length_max", &SceneConfig::length_max)
      .def_readwrite("width_min", &SceneConfig::width_min)
      .def_readwrite("width_max", &SceneConfig::width_max)
      .def_readwrite("rx_height_min", &SceneConfig::rx_height_min)
      .def_readwrite("rx_height_max", &SceneConfig::rx_height_max)
      .def_readwrite("both_sides_probability", &SceneConfig::both_sides_probability)
      .def_readwrite("links_min", &SceneConfig::links_min)
      .def_readwrite("links_max", &SceneConfig::links_max)
      .def_readwrite("min_link_distance", &SceneConfig::min_link_distance)
      .def_readwrite("tx_height", &SceneConfig::tx_height)
      .def_readwrite("density_min", &SceneConfig::density_min)
      .def_readwrite("density_max", &SceneConfig::density_max)
      .def_readwrite("intensity", &SceneConfig::intensity)
      .def_readwrite("point_scale", &SceneConfig::point_scale)
      .def("validate", &SceneConfig::validate);

  py::class_<GroundTruthPL>(m, "GroundTruthPL")
      .def(py::init<>())
      .def_readwrite("a", &GroundTruthPL::a)
      .def_readwrite("n", &GroundTruthPL::n)
      .def_readwrite("beta_street", &GroundTruthPL::beta_street)
      .def_readwrite("beta_link", &GroundTruthPL::beta_link)
      .def_readwrite("gamma_canyon", &GroundTruthPL::gamma_canyon)
      .def_readwrite("noise_sigma", &GroundTruthPL::noise_sigma)
      .def_readwrite("saturation", &GroundTruthPL::saturation)
      .def_readwrite("saturation_scale", &GroundTruthPL::saturation_scale);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("street_ids",
                             [](const Dataset& d) {
                               std::vector<std::string> ids;
                               for (const auto& s : d.streets) ids.push_back(s.meta.street_id);
                               return ids;
                             })
      .def_property_readonly("link_ids",
                             [](const Dataset& d) {
                               std::vector<std::string> ids;
                               for (const auto& l : d.links) ids.push_back(l.link_id);
                               return ids;
                             })
      .def_property_readonly("d3d",
                             [](const Dataset& d) {
                               std::vector<double> v;
                               for (const auto& l : d.links) v.push_back(l.d3d);
                               return v;
                             })
      .def_property_readonly("measured_pl",
                             [](const Dataset& d) {
                               std::vector<double> v;
                               for (const auto& l : d.links) v.push_back(l.measured_pl);
                               return v;
                             })
      .def("point_count", [](const Dataset& d, const std::string& street) {
        for (const auto& s : d.streets)
          if (s.meta.street_id == street) return s.cloud.size();
        throw py::key_error(street);
      });

  m.def("load_dataset", &load_dataset, py::arg("directory"));
  m.def("save_dataset", &save_dataset, py::arg("directory"), py::arg("dataset"));
  m.def("generate_scene", &generate_scene, py::arg("config"), py::arg("seed"));
  m.def(
      "generate_pl",
      [](Dataset& d, const GroundTruthPL& truth, std::uint64_t seed) {
        generate_pl(d, extract_clutter_features(d, DenoiseParams{}), truth, seed);
      },
      py::arg("dataset"), py::arg("truth") = GroundTruthPL{}, py::arg("seed") = 0,
      "Fill measured path loss from clutter features of the same dataset.");

  py::class_<FeatureTable>(m, "FeatureTable")
      .def_readonly("link_ids", &FeatureTable::link_ids)
      .def_readonly("street_ids", &FeatureTable::street_ids)
      .def_readonly("columns", &FeatureTable::columns)
      .def_readonly("values", &FeatureTable::values)
      .def_readonly("target", &FeatureTable::target)
      .def("__len__", &FeatureTable::rows);

  m.def(
      "extract_clutter_features",
      [](const Dataset& d, std::size_t k, double alpha, bool denoise) {
        return extract_clutter_features(d, DenoiseParams{k, alpha}, denoise);
      },
      py::arg("dataset"), py::arg("k") = 16, py::arg("alpha") = 2.0, py::arg("denoise") = true);

  py::class_<SlopeInterceptModel>(m, "SlopeIntercept")
      .def_readonly("a", &SlopeInterceptModel::a)
      .def_readonly("n", &SlopeInterceptModel::n)
      .def_readonly("sigma", &SlopeInterceptModel::sigma)
      .def("predict", [](const SlopeInterceptModel& s, double d3d) { return predict_slope_intercept(s, d3d); });
  m.def(
      "fit_slope_intercept",
      [](const std::vector<double>& d3d, const std::vector<double>& pl) { return fit_slope_intercept(d3d, pl); },
      py::arg("d3d"), py::arg("pl"));
  m.def("gpp_uma_los", &gpp_uma_los, py::arg("d3d"), py::arg("fc") = kCarrierGHz);
  m.def("gpp_umi_nlos", &gpp_umi_nlos, py::arg("d3d"), py::arg("fc") = kCarrierGHz);
  m.def(
      "rmse", [](const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) { return rmse(y, yhat); }, py::arg("y"),
      py::arg("yhat"));

  m.def(
      "traverse_segment",
      [](std::array<double, 3> a, std::array<double, 3> b) {
        std::vector<std::array<std::int64_t, 3>> out;
        for (const auto& c : traverse_segment(VoxelGrid{}, {a[0], a[1], a[2]}, {b[0], b[1], b[2]}))
          out.push_back({c.i, c.j, c.k});
        return out;
      },
      py::arg("a"), py::arg("b"), "Unit cubes crossed by the open segment a-b, in order.");

  py::class_<LinearModel>(m, "LinearModel")
      .def_readonly("weights", &LinearModel::weights)
      .def_readonly("intercept", &LinearModel::intercept)
      .def_readonly("alpha", &LinearModel::alpha)
      .def_readonly("delta", &LinearModel::delta)
      .def_readonly("sweeps", &LinearModel::sweeps)
      .def("predict", &LinearModel::predict, py::arg("x"));
  m.def(
      "fit_lasso",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha) { return fit_lasso(x, y, alpha); },
      py::arg("x"), py::arg("y"), py::arg("alpha"));
  m.def(
      "fit_elasticnet",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double delta) {
        return fit_elasticnet(x, y, alpha, delta);
      },
      py::arg("x"), py::arg("y"), py::arg("alpha"), py::arg("delta") = 0.5);

  m.def("evaluate", &evaluate, py::arg("dataset"), py::arg("protocol") = "street-by-street",
        py::arg("feature_set") = "clutter", py::arg("families") = std::vector<std::string>{"elastic-net"},
        py::arg("iterations") = 25, py::arg("seed") = 0, py::arg("workers") = 1,
        "Cross-validated RMSE per model, keyed by model name.");
  m.def("lasso_importance", &importance, py::arg("dataset"), py::arg("protocol") = "street-by-street",
        py::arg("iterations") = 25, py::arg("seed") = 0);
}
