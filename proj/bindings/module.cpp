#include <optional>
#include <utility>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "groupscale/adaptive.hpp"
#include "groupscale/coverage.hpp"
#include "groupscale/io.hpp"
#include "groupscale/scaling.hpp"
#include "groupscale/synth.hpp"
#include "groupscale/types.hpp"

namespace py = pybind11;
using namespace groupscale;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw std::invalid_argument("ragged matrix rows");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> from_matrix(const Matrix& m) {
  std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return rows;
}

using Rows = std::vector<std::vector<double>>;

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Post-hoc group-robustness toolkit: class-specific scaling, trade-off "
            "coverage, and routed scaling";

  py::enum_<Target>(m, "Target")
      .value("worst_group", Target::WorstGroup)
      .value("unbiased", Target::Unbiased)
      .value("average", Target::Average)
      .value("balanced", Target::Balanced);
  m.def("target_from_name", &target_from_name, py::arg("name"));
  m.def("target_name", &target_name, py::arg("target"));

  py::class_<MetricBundle>(m, "MetricBundle")
      .def_readonly("per_group", &MetricBundle::per_group)
      .def_readonly("empty_groups", &MetricBundle::empty_groups)
      .def_readonly("worst_group", &MetricBundle::worst_group)
      .def_readonly("unbiased", &MetricBundle::unbiased)
      .def_readonly("average", &MetricBundle::average)
      .def_readonly("balanced", &MetricBundle::balanced)
      .def_readonly("adjusted_average", &MetricBundle::adjusted_average)
      .def_property_readonly("present", [](const MetricBundle& b) {
        std::vector<bool> out(b.present.begin(), b.present.end());
        return out;
      });

  py::class_<ScalingVector>(m, "ScalingVector")
      .def(py::init([](std::vector<double> factors) {
             ScalingVector s;
             s.factors = std::move(factors);
             return s;
           }),
           py::arg("factors"))
      .def_static("identity", &ScalingVector::identity, py::arg("num_classes"))
      .def_readwrite("factors", &ScalingVector::factors)
      .def_readwrite("exponents", &ScalingVector::exponents)
      .def("canonical", &ScalingVector::canonical);

  py::class_<SearchConfig>(m, "SearchConfig")
      .def(py::init<>())
      .def_readwrite("grid_base", &SearchConfig::grid_base)
      .def_readwrite("exp_min", &SearchConfig::exp_min)
      .def_readwrite("exp_max", &SearchConfig::exp_max)
      .def_readwrite("target", &SearchConfig::target)
      .def_readwrite("class_order", &SearchConfig::class_order)
      .def_readwrite("passes", &SearchConfig::passes);

  py::class_<PredictionSet>(m, "PredictionSet")
      .def(py::init([](const Rows& scores, std::vector<int> labels, std::vector<int> attrs,
                       int num_attributes, std::optional<Rows> features) {
             std::optional<Matrix> f;
             if (features) f = to_matrix(*features);
             return PredictionSet(to_matrix(scores), std::move(labels), std::move(attrs),
                                  num_attributes, std::move(f));
           }),
           py::arg("scores"), py::arg("labels"), py::arg("attributes"),
           py::arg("num_attributes"), py::arg("features") = py::none())
      .def("__len__", &PredictionSet::size)
      .def_property_readonly("num_classes", &PredictionSet::num_classes)
      .def_property_readonly("num_attributes", &PredictionSet::num_attributes)
      .def_property_readonly("labels", &PredictionSet::labels)
      .def_property_readonly("attributes", &PredictionSet::attributes)
      .def_property_readonly("scores",
                             [](const PredictionSet& d) { return from_matrix(d.scores()); })
      .def_property_readonly("has_features", &PredictionSet::has_features)
      .def_property_readonly("features",
                             [](const PredictionSet& d) { return from_matrix(d.features()); })
      .def("subset", &PredictionSet::subset, py::arg("indices"));

  m.def("scaled_predict",
        [](const PredictionSet& data, const ScalingVector& s) {
          return scaled_predict(data, s);
        },
        py::arg("data"), py::arg("scaling"));
  m.def("metric_bundle",
        [](const PredictionSet& data, const std::vector<int>& preds,
           std::optional<std::vector<double>> weights) {
          return metric_bundle(data, preds, weights ? &*weights : nullptr);
        },
        py::arg("data"), py::arg("predictions"), py::arg("group_weights") = py::none());
  m.def("target_value", &target_value, py::arg("bundle"), py::arg("target"));

  py::class_<TradeoffPoint>(m, "TradeoffPoint")
      .def_readonly("scaling", &TradeoffPoint::scaling)
      .def_readonly("metrics", &TradeoffPoint::metrics);

  py::class_<TradeoffPool>(m, "TradeoffPool")
      .def(py::init<>())
      .def("__len__", &TradeoffPool::size)
      .def("add", &TradeoffPool::add, py::arg("point"))
      .def_property_readonly("points", &TradeoffPool::points);

  py::class_<SearchResult>(m, "SearchResult")
      .def_readonly("scaling", &SearchResult::scaling)
      .def_readonly("metrics", &SearchResult::metrics)
      .def_readonly("pool", &SearchResult::pool)
      .def_readonly("feasible", &SearchResult::feasible);

  m.def("greedy_search", &greedy_search, py::arg("val"), py::arg("config"),
        py::arg("min_average") = py::none());
  m.def("full_grid_search", &full_grid_search, py::arg("val"), py::arg("config"),
        py::arg("budget") = 10'000'000);

  py::class_<FrontierPoint>(m, "FrontierPoint")
      .def_readonly("average", &FrontierPoint::average)
      .def_readonly("robust", &FrontierPoint::robust)
      .def_readonly("scaling", &FrontierPoint::scaling);

  py::class_<CoverageReport>(m, "CoverageReport")
      .def_readonly("target", &CoverageReport::target)
      .def_readonly("slices", &CoverageReport::slices)
      .def_readonly("coverage", &CoverageReport::coverage)
      .def_readonly("frontier", &CoverageReport::frontier);

  py::class_<RealizedCoverage>(m, "RealizedCoverage")
      .def_readonly("target", &RealizedCoverage::target)
      .def_readonly("slices", &RealizedCoverage::slices)
      .def_readonly("feasible_thresholds", &RealizedCoverage::feasible_thresholds)
      .def_readonly("value", &RealizedCoverage::value);

  m.def("pareto_frontier", &pareto_frontier, py::arg("pool"), py::arg("target"));
  m.def("robust_coverage", &robust_coverage, py::arg("pool"), py::arg("target"),
        py::arg("slices") = 1000);
  m.def("realized_coverage", &realized_coverage, py::arg("val_pool"), py::arg("test"),
        py::arg("target"), py::arg("slices") = 1000);

  py::class_<ClusterScalingModel>(m, "ClusterScalingModel")
      .def_readonly("scalings", &ClusterScalingModel::scalings)
      .def_property_readonly("k",
                             [](const ClusterScalingModel& c) { return c.centroids.k(); })
      .def_property_readonly("centroids",
                             [](const ClusterScalingModel& c) {
                               return from_matrix(c.centroids.points);
                             })
      .def_property_readonly("fitted", [](const ClusterScalingModel& c) {
        std::vector<bool> out(c.fitted.begin(), c.fitted.end());
        return out;
      });

  m.def("irs_fit", &irs_fit, py::arg("val"), py::arg("k"), py::arg("config"),
        py::arg("seed") = 0, py::arg("min_cluster_size") = 5);
  m.def("irs_predict", &irs_predict, py::arg("model"), py::arg("test"));

  py::class_<SelectKResult>(m, "SelectKResult")
      .def_readonly("best_k", &SelectKResult::best_k)
      .def_readonly("candidates", &SelectKResult::candidates)
      .def_readonly("coverage", &SelectKResult::coverage);
  m.def("select_k", &select_k, py::arg("val"), py::arg("candidates"), py::arg("config"),
        py::arg("seed") = 0);

  py::class_<AttributeScalingModel>(m, "AttributeScalingModel")
      .def_readonly("scalings", &AttributeScalingModel::scalings)
      .def_property_readonly("labeled_count",
                             [](const AttributeScalingModel& a) {
                               return a.estimator.labeled_count;
                             })
      .def_property_readonly("estimator_accuracy", [](const AttributeScalingModel& a) {
        return a.estimator.train_accuracy;
      });
  m.def("ars_fit", &ars_fit, py::arg("val"), py::arg("config"),
        py::arg("labeled_fraction") = 1.0, py::arg("seed") = 0,
        py::arg("min_partition_size") = 5);
  m.def("ars_predict", &ars_predict, py::arg("model"), py::arg("test"));

  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("n_train", &SyntheticConfig::n_train)
      .def_readwrite("n_val", &SyntheticConfig::n_val)
      .def_readwrite("n_test", &SyntheticConfig::n_test)
      .def_readwrite("num_classes", &SyntheticConfig::num_classes)
      .def_readwrite("num_attributes", &SyntheticConfig::num_attributes)
      .def_readwrite("feature_dim", &SyntheticConfig::feature_dim)
      .def_readwrite("rho", &SyntheticConfig::rho)
      .def_readwrite("class_separation", &SyntheticConfig::class_separation)
      .def_readwrite("attribute_leakage", &SyntheticConfig::attribute_leakage)
      .def_readwrite("noise_sigma", &SyntheticConfig::noise_sigma)
      .def_readwrite("seed", &SyntheticConfig::seed)
      .def("validate", &SyntheticConfig::validate);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("features",
                             [](const Dataset& d) { return from_matrix(d.features); })
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("attributes", &Dataset::attributes)
      .def("__len__", &Dataset::size);

  py::class_<SyntheticData>(m, "SyntheticData")
      .def_readonly("train", &SyntheticData::train)
      .def_readonly("val", &SyntheticData::val)
      .def_readonly("test", &SyntheticData::test);
  m.def("generate", &generate, py::arg("config"));

  py::class_<TrainOptions>(m, "TrainOptions")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainOptions::epochs)
      .def_readwrite("lr", &TrainOptions::lr)
      .def_readwrite("seed", &TrainOptions::seed);

  py::class_<LinearModel>(m, "LinearModel")
      .def_property_readonly("weights",
                             [](const LinearModel& l) { return from_matrix(l.weights); })
      .def_readonly("bias", &LinearModel::bias)
      .def_readonly("loss_log", &LinearModel::loss_log);

  m.def("train_linear",
        [](const Rows& features, const std::vector<int>& labels, int num_classes,
           std::optional<std::vector<double>> sample_weights, const TrainOptions& options) {
          return train_linear(to_matrix(features), labels, num_classes,
                              sample_weights ? &*sample_weights : nullptr, options);
        },
        py::arg("features"), py::arg("labels"), py::arg("num_classes"),
        py::arg("sample_weights") = py::none(), py::arg("options") = TrainOptions());
  m.def("predict_proba",
        [](const LinearModel& model, const Rows& features) {
          return from_matrix(predict_proba(model, to_matrix(features)));
        },
        py::arg("model"), py::arg("features"));
  m.def("to_prediction_set", &to_prediction_set, py::arg("model"), py::arg("data"),
        py::arg("num_attributes"));

  m.def("cr_weights", &cr_weights, py::arg("labels"));
  m.def("gr_weights", &gr_weights, py::arg("labels"), py::arg("attributes"));
  py::enum_<SubsampleMode>(m, "SubsampleMode")
      .value("by_class", SubsampleMode::Class)
      .value("by_group", SubsampleMode::Group);
  m.def("subsample_balanced", &subsample_balanced, py::arg("labels"), py::arg("attributes"),
        py::arg("mode"), py::arg("seed") = 0);
  m.def("group_proportions", &group_proportions, py::arg("labels"), py::arg("attributes"),
        py::arg("num_classes"), py::arg("num_attributes"));

  m.def("load_prediction_set", &load_prediction_set, py::arg("prediction_path"),
        py::arg("feature_path") = py::none(), py::arg("logits") = false);
  m.def("save_prediction_set", &save_prediction_set, py::arg("data"),
        py::arg("prediction_path"), py::arg("feature_path") = py::none());
  m.def("save_pool", &save_pool, py::arg("pool"), py::arg("path"));
  m.def("load_pool", &load_pool, py::arg("path"));
  m.def("save_report", &save_report, py::arg("report"), py::arg("path"));
  m.def("load_report", &load_report, py::arg("path"));
  m.def("save_cluster_model", &save_cluster_model, py::arg("model"), py::arg("path"));
  m.def("load_cluster_model", &load_cluster_model, py::arg("path"));
  m.def("save_attribute_model", &save_attribute_model, py::arg("model"), py::arg("path"));
  m.def("load_attribute_model", &load_attribute_model, py::arg("path"));
}
