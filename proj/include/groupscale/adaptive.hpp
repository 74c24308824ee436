#pragma once

#include <cstdint>
#include <vector>

#include "groupscale/clustering.hpp"
#include "groupscale/scaling.hpp"
#include "groupscale/synth.hpp"
#include "groupscale/types.hpp"

namespace groupscale {

// Cluster-routed scaling: validation samples are clustered in feature space,
// each cluster gets its own scaling vector, test samples inherit the vector
// of their nearest centroid.
struct ClusterScalingModel {
  Centroids centroids;
  std::vector<ScalingVector> scalings;  // one per cluster
  std::vector<char> fitted;             // 0 = identity fallback (degenerate cluster)
  SearchConfig config;
};

ClusterScalingModel irs_fit(const PredictionSet& val, int K, const SearchConfig& config,
                            std::uint64_t seed = 0, int min_cluster_size = 5);

std::vector<int> irs_predict(const ClusterScalingModel& model, const PredictionSet& test);

struct SelectKResult {
  int best_k = 1;
  std::vector<int> candidates;
  std::vector<double> coverage;  // validation robust coverage per candidate
};

SelectKResult select_k(const PredictionSet& val, const std::vector<int>& candidates,
                       const SearchConfig& config, std::uint64_t seed = 0);

// linear attribute classifier over frozen features
struct AttributeEstimator {
  LinearModel model;  // weights d x A
  int num_attributes = 1;
  int epochs = 500;
  double lr = 0.1;
  std::uint64_t seed = 0;
  int labeled_count = 0;
  double train_accuracy = 0.0;  // held-in accuracy on the labeled subsample
};

AttributeEstimator fit_attribute_estimator(const Matrix& features,
                                           const std::vector<int>& attributes,
                                           int num_attributes, double labeled_fraction = 1.0,
                                           std::uint64_t seed = 0);

std::vector<int> estimate_attributes(const AttributeEstimator& estimator,
                                     const Matrix& features);

// Attribute-routed scaling: validation is partitioned by true attribute, each
// partition gets its own scaling vector, test samples are routed by the
// estimated attribute.
struct AttributeScalingModel {
  AttributeEstimator estimator;
  std::vector<ScalingVector> scalings;  // one per attribute value
  std::vector<char> fitted;
  SearchConfig config;
};

AttributeScalingModel ars_fit(const PredictionSet& val, const SearchConfig& config,
                              double labeled_fraction = 1.0, std::uint64_t seed = 0,
                              int min_partition_size = 5);

std::vector<int> ars_predict(const AttributeScalingModel& model, const PredictionSet& test);

}  // namespace groupscale
