#include "groupscale/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "groupscale/coverage.hpp"
#include "groupscale/rng.hpp"

namespace groupscale {

namespace {

// greedy search on a subset, falling back to identity when the subset is too
// small or spans fewer than two classes (scaling such a set only overfits)
ScalingVector fit_subset(const PredictionSet& val, const std::vector<int>& members,
                         const SearchConfig& config, int min_size, bool* fitted) {
  *fitted = false;
  if (members.size() < static_cast<std::size_t>(std::max(min_size, 1)))
    return ScalingVector::identity(val.num_classes());
  std::set<int> classes;
  for (int i : members) classes.insert(val.labels()[i]);
  if (classes.size() < 2) return ScalingVector::identity(val.num_classes());
  *fitted = true;
  return greedy_search(val.subset(members), config).scaling;
}

std::vector<int> route_predict(const Matrix& scores, const std::vector<int>& route,
                               const std::vector<ScalingVector>& scalings) {
  std::vector<int> preds(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const std::vector<double>& f = scalings[route[i]].factors;
    const double* row = scores.row(i);
    int best = 0;
    double best_v = f[0] * row[0];
    for (std::size_t c = 1; c < f.size(); ++c) {
      double v = f[c] * row[c];
      if (v > best_v) {
        best_v = v;
        best = static_cast<int>(c);
      }
    }
    preds[i] = best;
  }
  return preds;
}

}  // namespace

ClusterScalingModel irs_fit(const PredictionSet& val, int K, const SearchConfig& config,
                            std::uint64_t seed, int min_cluster_size) {
  config.validate(val.num_classes());
  if (!val.has_features()) throw std::invalid_argument("IRS needs validation features");
  if (K < 1 || static_cast<std::size_t>(K) > val.size())
    throw std::invalid_argument("cluster count must be in [1, n]");

  ClusterScalingModel model;
  model.config = config;
  model.centroids = kmeans_fit(val.features(), K, seed);
  model.scalings.resize(K);
  model.fitted.assign(K, 0);
  std::vector<std::vector<int>> members(K);
  for (std::size_t i = 0; i < val.size(); ++i)
    members[model.centroids.assignment[i]].push_back(static_cast<int>(i));
  for (int k = 0; k < K; ++k) {
    bool fitted = false;
    model.scalings[k] = fit_subset(val, members[k], config, min_cluster_size, &fitted);
    model.fitted[k] = fitted ? 1 : 0;
  }
  return model;
}

std::vector<int> irs_predict(const ClusterScalingModel& model, const PredictionSet& test) {
  if (!test.has_features()) throw std::invalid_argument("IRS needs test features");
  if (test.num_classes() != static_cast<int>(model.scalings.empty()
                                                 ? 0
                                                 : model.scalings[0].factors.size()))
    throw std::invalid_argument("model class count does not match the test set");
  std::vector<int> route = kmeans_assign(test.features(), model.centroids);
  return route_predict(test.scores(), route, model.scalings);
}

namespace {

// the trade-off pool reachable once cluster-wise scalings are in place: the
// cluster-adjusted scores re-swept by a global greedy search
TradeoffPool irs_pool(const PredictionSet& val, const ClusterScalingModel& model) {
  std::vector<int> route = kmeans_assign(val.features(), model.centroids);
  Matrix scores = val.scores();
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const std::vector<double>& f = model.scalings[route[i]].factors;
    double* row = scores.row(i);
    double sum = 0.0;
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      row[c] *= f[c];
      sum += row[c];
    }
    for (std::size_t c = 0; c < scores.cols(); ++c) row[c] /= sum;
  }
  PredictionSet adjusted(std::move(scores), val.labels(), val.attributes(),
                         val.num_attributes());
  return greedy_search(adjusted, model.config).pool;
}

}  // namespace

SelectKResult select_k(const PredictionSet& val, const std::vector<int>& candidates,
                       const SearchConfig& config, std::uint64_t seed) {
  if (candidates.empty()) throw std::invalid_argument("no cluster-count candidates");
  if (config.target != Target::WorstGroup && config.target != Target::Unbiased)
    throw std::invalid_argument("cluster-count selection needs a worst or unbiased target");
  SelectKResult out;
  out.candidates = candidates;
  out.coverage.resize(candidates.size());
  bool first = true;
  double best = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ClusterScalingModel model = irs_fit(val, candidates[i], config, seed);
    double cov = robust_coverage(irs_pool(val, model), config.target).coverage;
    out.coverage[i] = cov;
    if (first || cov > best || (cov == best && candidates[i] < out.best_k)) {
      best = cov;
      out.best_k = candidates[i];
      first = false;
    }
  }
  return out;
}

AttributeEstimator fit_attribute_estimator(const Matrix& features,
                                           const std::vector<int>& attributes,
                                           int num_attributes, double labeled_fraction,
                                           std::uint64_t seed) {
  const std::size_t n = features.rows();
  if (n == 0 || attributes.size() != n)
    throw std::invalid_argument("features/attributes length mismatch");
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0))
    throw std::invalid_argument("labeled fraction must be in (0, 1]");
  for (int a : attributes)
    if (a < 0 || a >= num_attributes) throw std::invalid_argument("attribute out of range");

  std::size_t m = static_cast<std::size_t>(
      std::llround(labeled_fraction * static_cast<double>(n)));
  m = std::min(std::max<std::size_t>(m, 1), n);
  Rng rng(seed);
  std::vector<int> perm = rng.permutation(n);
  std::vector<int> picked(perm.begin(), perm.begin() + m);
  std::sort(picked.begin(), picked.end());

  std::vector<int> sub_attr(m);
  for (std::size_t i = 0; i < m; ++i) sub_attr[i] = attributes[picked[i]];
  std::vector<char> seen(num_attributes, 0);
  for (int a : sub_attr) seen[a] = 1;
  for (int a = 0; a < num_attributes; ++a)
    if (!seen[a])
      throw std::invalid_argument("attribute value " + std::to_string(a) +
                                  " has no labeled sample after subsampling");

  AttributeEstimator est;
  est.num_attributes = num_attributes;
  est.seed = seed;
  est.labeled_count = static_cast<int>(m);
  Matrix sub_features = features.take_rows(picked);
  TrainOptions opt;
  opt.epochs = est.epochs;
  opt.lr = est.lr;
  opt.seed = seed;
  est.model = train_linear(sub_features, sub_attr, num_attributes, nullptr, opt);

  std::vector<int> preds = estimate_attributes(est, sub_features);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (preds[i] == sub_attr[i]) ++hit;
  est.train_accuracy = static_cast<double>(hit) / static_cast<double>(m);
  return est;
}

std::vector<int> estimate_attributes(const AttributeEstimator& estimator,
                                     const Matrix& features) {
  const Matrix& w = estimator.model.weights;
  if (features.cols() != w.rows())
    throw std::invalid_argument("feature dimension does not match the estimator");
  std::vector<int> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const double* x = features.row(i);
    int best = 0;
    double best_v = 0.0;
    for (std::size_t a = 0; a < w.cols(); ++a) {
      double v = estimator.model.bias[a];
      for (std::size_t j = 0; j < w.rows(); ++j) v += x[j] * w(j, a);
      if (a == 0 || v > best_v) {
        best_v = v;
        best = static_cast<int>(a);
      }
    }
    out[i] = best;
  }
  return out;
}

AttributeScalingModel ars_fit(const PredictionSet& val, const SearchConfig& config,
                              double labeled_fraction, std::uint64_t seed,
                              int min_partition_size) {
  config.validate(val.num_classes());
  if (!val.has_features()) throw std::invalid_argument("ARS needs validation features");
  const int A = val.num_attributes();

  AttributeScalingModel model;
  model.config = config;
  model.estimator =
      fit_attribute_estimator(val.features(), val.attributes(), A, labeled_fraction, seed);
  model.scalings.resize(A);
  model.fitted.assign(A, 0);
  std::vector<std::vector<int>> members(A);
  for (std::size_t i = 0; i < val.size(); ++i)
    members[val.attributes()[i]].push_back(static_cast<int>(i));
  for (int a = 0; a < A; ++a) {
    bool fitted = false;
    model.scalings[a] = fit_subset(val, members[a], config, min_partition_size, &fitted);
    model.fitted[a] = fitted ? 1 : 0;
  }
  return model;
}

std::vector<int> ars_predict(const AttributeScalingModel& model, const PredictionSet& test) {
  if (!test.has_features()) throw std::invalid_argument("ARS needs test features");
  if (model.scalings.empty() ||
      test.num_classes() != static_cast<int>(model.scalings[0].factors.size()))
    throw std::invalid_argument("model class count does not match the test set");
  std::vector<int> route = estimate_attributes(model.estimator, test.features());
  return route_predict(test.scores(), route, model.scalings);
}

}  // namespace groupscale
