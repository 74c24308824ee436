#pragma once

#include <optional>
#include <string>

#include "groupscale/adaptive.hpp"
#include "groupscale/coverage.hpp"
#include "groupscale/scaling.hpp"
#include "groupscale/synth.hpp"
#include "groupscale/types.hpp"

namespace groupscale {

// Prediction CSV: header `label,attribute,score_0,...,score_{C-1}`, one row
// per sample. Feature CSV: header `f_0,...,f_{d-1}`. All numbers dot-decimal,
// written with 17 significant digits so doubles survive a round trip.

PredictionSet load_prediction_set(const std::string& prediction_path,
                                  const std::optional<std::string>& feature_path,
                                  bool logits);

void save_prediction_set(const PredictionSet& data, const std::string& prediction_path,
                         const std::optional<std::string>& feature_path = std::nullopt);

Matrix load_features(const std::string& path);
void save_features(const Matrix& features, const std::string& path);

void save_pool(const TradeoffPool& pool, const std::string& path);
TradeoffPool load_pool(const std::string& path);

void save_report(const CoverageReport& report, const std::string& path);
CoverageReport load_report(const std::string& path);

// plot-ready frontier: average_accuracy, robust_accuracy, scaling_exponents
void export_frontier_csv(const std::vector<FrontierPoint>& frontier, const std::string& path);

void save_cluster_model(const ClusterScalingModel& model, const std::string& path);
ClusterScalingModel load_cluster_model(const std::string& path);

void save_attribute_model(const AttributeScalingModel& model, const std::string& path);
AttributeScalingModel load_attribute_model(const std::string& path);

void save_centroids_csv(const Centroids& centroids, const std::string& path);

SyntheticConfig load_synth_config(const std::string& path);
void save_synth_config(const SyntheticConfig& config, const std::string& path);

// one nonnegative weight per (class, attribute) group, one value per line
std::vector<double> load_group_weights(const std::string& path);

}  // namespace groupscale
