#include "groupscale/types.hpp"

#include <cmath>
#include <stdexcept>

namespace groupscale {

const char* target_name(Target t) {
  switch (t) {
    case Target::WorstGroup: return "worst";
    case Target::Unbiased: return "unbiased";
    case Target::Average: return "average";
    case Target::Balanced: return "balanced";
  }
  throw std::invalid_argument("unknown target");
}

Target target_from_name(const std::string& name) {
  if (name == "worst" || name == "worst_group") return Target::WorstGroup;
  if (name == "unbiased") return Target::Unbiased;
  if (name == "average") return Target::Average;
  if (name == "balanced") return Target::Balanced;
  throw std::invalid_argument("unknown target metric: " + name);
}

PredictionSet::PredictionSet(Matrix scores, std::vector<int> labels, std::vector<int> attributes,
                             int num_attributes, std::optional<Matrix> features)
    : scores_(std::move(scores)),
      labels_(std::move(labels)),
      attributes_(std::move(attributes)),
      num_attributes_(num_attributes),
      features_(std::move(features)) {
  const std::size_t n = scores_.rows();
  if (n == 0) throw std::invalid_argument("prediction set needs at least one sample");
  if (scores_.cols() < 2) throw std::invalid_argument("prediction set needs at least two classes");
  if (labels_.size() != n || attributes_.size() != n)
    throw std::invalid_argument("labels/attributes length does not match score rows");
  if (num_attributes_ < 1) throw std::invalid_argument("num_attributes must be >= 1");
  const int C = num_classes();
  for (std::size_t i = 0; i < n; ++i) {
    if (labels_[i] < 0 || labels_[i] >= C)
      throw std::invalid_argument("label out of range at row " + std::to_string(i));
    if (attributes_[i] < 0 || attributes_[i] >= num_attributes_)
      throw std::invalid_argument("attribute out of range at row " + std::to_string(i));
    double sum = 0.0;
    const double* r = scores_.row(i);
    for (int c = 0; c < C; ++c) {
      if (!(r[c] >= 0.0) || !std::isfinite(r[c]))
        throw std::invalid_argument("score not a finite nonnegative value at row " +
                                    std::to_string(i));
      sum += r[c];
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("score row " + std::to_string(i) +
                                  " is not on the probability simplex");
  }
  if (features_ && features_->rows() != n)
    throw std::invalid_argument("feature rows do not match sample count");
}

const Matrix& PredictionSet::features() const {
  if (!features_) throw std::invalid_argument("prediction set carries no features");
  return *features_;
}

PredictionSet PredictionSet::subset(const std::vector<int>& idx) const {
  if (idx.empty()) throw std::invalid_argument("subset needs at least one index");
  std::vector<int> lab(idx.size()), att(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || static_cast<std::size_t>(idx[k]) >= size())
      throw std::invalid_argument("subset index out of range");
    lab[k] = labels_[idx[k]];
    att[k] = attributes_[idx[k]];
  }
  std::optional<Matrix> feat;
  if (features_) feat = features_->take_rows(idx);
  return PredictionSet(scores_.take_rows(idx), std::move(lab), std::move(att), num_attributes_,
                       std::move(feat));
}

GroupCounts GroupCounts::tally(const std::vector<int>& preds, const std::vector<int>& labels,
                               const std::vector<int>& attributes, int num_classes,
                               int num_attributes) {
  if (preds.size() != labels.size() || labels.size() != attributes.size())
    throw std::invalid_argument("preds/labels/attributes length mismatch");
  if (labels.empty()) throw std::invalid_argument("empty sample set");
  GroupCounts gc;
  gc.num_classes = num_classes;
  gc.num_attributes = num_attributes;
  gc.correct.assign(static_cast<std::size_t>(num_classes) * num_attributes, 0);
  gc.total.assign(static_cast<std::size_t>(num_classes) * num_attributes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw std::invalid_argument("label out of range");
    if (attributes[i] < 0 || attributes[i] >= num_attributes)
      throw std::invalid_argument("attribute out of range");
    int g = group_index(labels[i], attributes[i], num_attributes);
    gc.total[g] += 1;
    if (preds[i] == labels[i]) gc.correct[g] += 1;
  }
  return gc;
}

GroupAccuracies group_accuracy(const std::vector<int>& preds, const std::vector<int>& labels,
                               const std::vector<int>& attributes, int num_classes,
                               int num_attributes) {
  GroupCounts gc = GroupCounts::tally(preds, labels, attributes, num_classes, num_attributes);
  GroupAccuracies out;
  out.num_classes = num_classes;
  out.num_attributes = num_attributes;
  out.value.assign(gc.total.size(), 0.0);
  out.present.assign(gc.total.size(), 0);
  for (std::size_t g = 0; g < gc.total.size(); ++g) {
    if (gc.total[g] > 0) {
      out.present[g] = 1;
      out.value[g] = static_cast<double>(gc.correct[g]) / static_cast<double>(gc.total[g]);
    }
  }
  return out;
}

// All means below run in ascending group/class index order; incremental
// evaluation reuses this function so both paths share one accumulation order.
MetricBundle bundle_from_counts(const GroupCounts& counts,
                                const std::vector<double>* group_weights) {
  MetricBundle b;
  const std::size_t G = counts.total.size();
  b.per_group.assign(G, 0.0);
  b.present.assign(G, 0);
  double sum_ga = 0.0;
  int n_present = 0;
  std::int64_t total_correct = 0, total = 0;
  bool first = true;
  for (std::size_t g = 0; g < G; ++g) {
    total_correct += counts.correct[g];
    total += counts.total[g];
    if (counts.total[g] == 0) {
      ++b.empty_groups;
      continue;
    }
    double ga = static_cast<double>(counts.correct[g]) / static_cast<double>(counts.total[g]);
    b.per_group[g] = ga;
    b.present[g] = 1;
    sum_ga += ga;
    ++n_present;
    if (first || ga < b.worst_group) b.worst_group = ga;
    first = false;
  }
  if (total == 0) throw std::invalid_argument("metric bundle over an empty sample set");
  b.unbiased = sum_ga / n_present;
  b.average = static_cast<double>(total_correct) / static_cast<double>(total);
  double sum_class = 0.0;
  int n_class = 0;
  for (int c = 0; c < counts.num_classes; ++c) {
    std::int64_t cc = 0, ct = 0;
    for (int a = 0; a < counts.num_attributes; ++a) {
      int g = group_index(c, a, counts.num_attributes);
      cc += counts.correct[g];
      ct += counts.total[g];
    }
    if (ct > 0) {
      sum_class += static_cast<double>(cc) / static_cast<double>(ct);
      ++n_class;
    }
  }
  b.balanced = sum_class / n_class;
  if (group_weights) {
    GroupAccuracies acc;
    acc.num_classes = counts.num_classes;
    acc.num_attributes = counts.num_attributes;
    acc.value = b.per_group;
    acc.present = b.present;
    b.adjusted_average = adjusted_average(acc, *group_weights);
  }
  return b;
}

MetricBundle metric_bundle(const std::vector<int>& preds, const std::vector<int>& labels,
                           const std::vector<int>& attributes, int num_classes,
                           int num_attributes, const std::vector<double>* group_weights) {
  return bundle_from_counts(
      GroupCounts::tally(preds, labels, attributes, num_classes, num_attributes), group_weights);
}

MetricBundle metric_bundle(const PredictionSet& data, const std::vector<int>& preds,
                           const std::vector<double>* group_weights) {
  return metric_bundle(preds, data.labels(), data.attributes(), data.num_classes(),
                       data.num_attributes(), group_weights);
}

double adjusted_average(const GroupAccuracies& acc, const std::vector<double>& weights) {
  if (weights.size() != acc.value.size())
    throw std::invalid_argument("group weight vector has wrong length");
  double sum = 0.0;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    if (!(weights[g] >= 0.0))
      throw std::invalid_argument("group weights must be nonnegative");
    sum += weights[g];
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("group weights must sum to 1");
  double out = 0.0;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    if (acc.present[g] && weights[g] == 0.0)
      throw std::invalid_argument("group weight support misses a present group");
    if (!acc.present[g] && weights[g] > 0.0)
      throw std::invalid_argument("positive weight on an absent group");
    out += weights[g] * acc.value[g];
  }
  return out;
}

double target_value(const MetricBundle& bundle, Target target) {
  switch (target) {
    case Target::WorstGroup: return bundle.worst_group;
    case Target::Unbiased: return bundle.unbiased;
    case Target::Average: return bundle.average;
    case Target::Balanced: return bundle.balanced;
  }
  throw std::invalid_argument("unknown target");
}

}  // namespace groupscale
