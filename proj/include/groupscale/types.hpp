#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "groupscale/matrix.hpp"

namespace groupscale {

enum class Target { WorstGroup, Unbiased, Average, Balanced };

const char* target_name(Target t);
Target target_from_name(const std::string& name);

// A group is a (class, attribute) pair indexed row-major: g = y * A + a.
inline int group_index(int label, int attribute, int num_attributes) {
  return label * num_attributes + attribute;
}

// Scored classifier outputs over a labeled, attribute-annotated sample set.
// Score rows live on the probability simplex; features are optional and only
// required by the cluster/attribute routed predictors.
class PredictionSet {
 public:
  PredictionSet(Matrix scores, std::vector<int> labels, std::vector<int> attributes,
                int num_attributes, std::optional<Matrix> features = std::nullopt);

  std::size_t size() const { return labels_.size(); }
  int num_classes() const { return static_cast<int>(scores_.cols()); }
  int num_attributes() const { return num_attributes_; }
  int num_groups() const { return num_classes() * num_attributes_; }

  const Matrix& scores() const { return scores_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<int>& attributes() const { return attributes_; }
  bool has_features() const { return features_.has_value(); }
  const Matrix& features() const;

  PredictionSet subset(const std::vector<int>& idx) const;

 private:
  Matrix scores_;
  std::vector<int> labels_;
  std::vector<int> attributes_;
  int num_attributes_ = 1;
  std::optional<Matrix> features_;
};

// Integer correctness tallies per group; the single source every accuracy
// metric is derived from, so incremental sweeps and from-scratch evaluation
// agree bit for bit.
struct GroupCounts {
  int num_classes = 0;
  int num_attributes = 0;
  std::vector<std::int64_t> correct;  // size C*A
  std::vector<std::int64_t> total;    // size C*A

  static GroupCounts tally(const std::vector<int>& preds, const std::vector<int>& labels,
                           const std::vector<int>& attributes, int num_classes,
                           int num_attributes);
};

struct MetricBundle {
  std::vector<double> per_group;  // size C*A, 0.0 where absent
  std::vector<char> present;      // size C*A
  int empty_groups = 0;           // recorded, never raised
  double worst_group = 0.0;
  double unbiased = 0.0;
  double average = 0.0;
  double balanced = 0.0;
  std::optional<double> adjusted_average;
};

struct GroupAccuracies {
  int num_classes = 0;
  int num_attributes = 0;
  std::vector<double> value;  // size C*A, 0.0 where absent
  std::vector<char> present;  // size C*A
};

GroupAccuracies group_accuracy(const std::vector<int>& preds, const std::vector<int>& labels,
                               const std::vector<int>& attributes, int num_classes,
                               int num_attributes);

MetricBundle bundle_from_counts(const GroupCounts& counts,
                                const std::vector<double>* group_weights = nullptr);

MetricBundle metric_bundle(const std::vector<int>& preds, const std::vector<int>& labels,
                           const std::vector<int>& attributes, int num_classes,
                           int num_attributes, const std::vector<double>* group_weights = nullptr);

MetricBundle metric_bundle(const PredictionSet& data, const std::vector<int>& preds,
                           const std::vector<double>* group_weights = nullptr);

double adjusted_average(const GroupAccuracies& acc, const std::vector<double>& weights);

double target_value(const MetricBundle& bundle, Target target);

}  // namespace groupscale
