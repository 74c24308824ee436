#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "groupscale/matrix.hpp"
#include "groupscale/types.hpp"

namespace groupscale {

// Spurious-correlation generator: each class has a designated attribute
// (attribute index capped at A-1, so with more classes than attributes the
// tail classes share the last one) that tracks it with probability rho and
// leaks into the features more strongly than the class itself, which is what
// makes a plain linear fit collapse on minority groups.
struct SyntheticConfig {
  int n_train = 4000;
  int n_val = 6000;
  int n_test = 8000;
  int num_classes = 3;
  int num_attributes = 2;
  int feature_dim = 6;
  double rho = 0.95;              // in [1/A, 1]
  double class_separation = 1.0;  // weight of the class embedding
  double attribute_leakage = 1.5; // weight of the attribute embedding
  double noise_sigma = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

// labeled samples without scores; scores come from a trained model
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> attributes;

  std::size_t size() const { return labels.size(); }
};

struct SyntheticData {
  Dataset train, val, test;
};

SyntheticData generate(const SyntheticConfig& config);

struct TrainOptions {
  int epochs = 300;
  double lr = 0.1;
  std::uint64_t seed = 0;
};

struct LinearModel {
  Matrix weights;  // d x C
  std::vector<double> bias;
  std::vector<double> loss_log;  // one entry per epoch, non-increasing
};

// mean weighted softmax cross-entropy at (weights, bias) and, when the grad
// pointers are non-null, its analytic gradient
double linear_loss_grad(const Matrix& features, const std::vector<int>& labels,
                        int num_classes, const std::vector<double>* sample_weights,
                        const Matrix& weights, const std::vector<double>& bias,
                        Matrix* grad_weights = nullptr,
                        std::vector<double>* grad_bias = nullptr);

LinearModel train_linear(const Matrix& features, const std::vector<int>& labels,
                         int num_classes, const std::vector<double>* sample_weights = nullptr,
                         const TrainOptions& options = {});

Matrix predict_proba(const LinearModel& model, const Matrix& features);

std::vector<double> cr_weights(const std::vector<int>& labels);
std::vector<double> gr_weights(const std::vector<int>& labels,
                               const std::vector<int>& attributes);

enum class SubsampleMode { Class, Group };

// indices retained after balancing every class/group down to the minimum
// class/group size; returned in ascending order
std::vector<int> subsample_balanced(const std::vector<int>& labels,
                                    const std::vector<int>& attributes, SubsampleMode mode,
                                    std::uint64_t seed);

// training-set group proportions, the natural weights for adjusted averages
std::vector<double> group_proportions(const std::vector<int>& labels,
                                      const std::vector<int>& attributes, int num_classes,
                                      int num_attributes);

PredictionSet to_prediction_set(const LinearModel& model, const Dataset& data,
                                int num_attributes);

}  // namespace groupscale
