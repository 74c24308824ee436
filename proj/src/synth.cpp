#include "groupscale/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "groupscale/rng.hpp"

namespace groupscale {

void SyntheticConfig::validate() const {
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw std::invalid_argument("split sizes must be positive");
  if (num_classes < 2) throw std::invalid_argument("need at least two classes");
  if (num_attributes < 1) throw std::invalid_argument("need at least one attribute value");
  if (feature_dim < 2) throw std::invalid_argument("feature dimension must be >= 2");
  double lo = 1.0 / num_attributes;
  if (!(rho >= lo - 1e-12 && rho <= 1.0))
    throw std::invalid_argument("rho must lie in [1/A, 1]");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
}

namespace {

Dataset generate_split(const SyntheticConfig& cfg, int n, Rng rng) {
  Dataset out;
  out.features = Matrix(n, cfg.feature_dim);
  out.labels.resize(n);
  out.attributes.resize(n);
  for (int i = 0; i < n; ++i) {
    int y = static_cast<int>(rng.integer(cfg.num_classes));
    int aligned = std::min(y, cfg.num_attributes - 1);
    int a = aligned;
    if (cfg.num_attributes > 1 && rng.uniform() >= cfg.rho) {
      // uniform over the non-aligned values
      int r = static_cast<int>(rng.integer(cfg.num_attributes - 1));
      a = r < aligned ? r : r + 1;
    }
    out.labels[i] = y;
    out.attributes[i] = a;
    double* row = out.features.row(i);
    for (int j = 0; j < cfg.feature_dim; ++j) row[j] = cfg.noise_sigma * rng.normal();
    row[y % cfg.feature_dim] += cfg.class_separation;
    row[(cfg.num_classes + a) % cfg.feature_dim] += cfg.attribute_leakage;
  }
  return out;
}

}  // namespace

SyntheticData generate(const SyntheticConfig& config) {
  config.validate();
  SyntheticData data;
  data.train = generate_split(config, config.n_train, Rng::substream(config.seed, 0));
  data.val = generate_split(config, config.n_val, Rng::substream(config.seed, 1));
  data.test = generate_split(config, config.n_test, Rng::substream(config.seed, 2));
  return data;
}

namespace {

// row-wise softmax with max subtraction
void softmax_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* row = m.row(i);
    double mx = row[0];
    for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (std::size_t j = 0; j < m.cols(); ++j) row[j] /= sum;
  }
}

Matrix logits_of(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  Matrix out(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xi = x.row(i);
    double* oi = out.row(i);
    for (std::size_t c = 0; c < w.cols(); ++c) oi[c] = b[c];
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double* wj = w.row(j);
      for (std::size_t c = 0; c < w.cols(); ++c) oi[c] += xi[j] * wj[c];
    }
  }
  return out;
}

// mean weighted cross-entropy: (1/n) sum_i w_i * -log p_i[y_i]
double loss_of(const Matrix& probs, const std::vector<int>& labels,
               const std::vector<double>* w) {
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double p = std::max(probs(i, labels[i]), 1e-300);
    double l = -std::log(p);
    sum += w ? (*w)[i] * l : l;
  }
  return sum / static_cast<double>(probs.rows());
}

}  // namespace

double linear_loss_grad(const Matrix& features, const std::vector<int>& labels,
                        int num_classes, const std::vector<double>* sample_weights,
                        const Matrix& weights, const std::vector<double>& bias,
                        Matrix* grad_weights, std::vector<double>* grad_bias) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n == 0) throw std::invalid_argument("empty training set");
  if (weights.rows() != d || weights.cols() != static_cast<std::size_t>(num_classes) ||
      bias.size() != static_cast<std::size_t>(num_classes))
    throw std::invalid_argument("parameter shapes do not match the features");
  Matrix probs = logits_of(features, weights, bias);
  softmax_rows(probs);
  double loss = loss_of(probs, labels, sample_weights);
  if (grad_weights && grad_bias) {
    // grad = (1/n) X^T diag(w) (P - Y)
    *grad_weights = Matrix(d, num_classes);
    grad_bias->assign(num_classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double wi = sample_weights ? (*sample_weights)[i] : 1.0;
      const double* xi = features.row(i);
      const double* pi = probs.row(i);
      for (int c = 0; c < num_classes; ++c) {
        double g = wi * (pi[c] - (labels[i] == c ? 1.0 : 0.0)) / static_cast<double>(n);
        (*grad_bias)[c] += g;
        for (std::size_t j = 0; j < d; ++j) (*grad_weights)(j, c) += xi[j] * g;
      }
    }
  }
  return loss;
}

LinearModel train_linear(const Matrix& features, const std::vector<int>& labels,
                         int num_classes, const std::vector<double>* sample_weights,
                         const TrainOptions& options) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n == 0) throw std::invalid_argument("empty training set");
  if (labels.size() != n) throw std::invalid_argument("label count does not match features");
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw std::invalid_argument("label out of range");
  if (sample_weights) {
    if (sample_weights->size() != n)
      throw std::invalid_argument("sample weight count does not match features");
    double s = 0.0;
    for (double w : *sample_weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("sample weights must be nonnegative");
      s += w;
    }
    if (!(s > 0.0)) throw std::invalid_argument("sample weights must have positive sum");
  }
  if (options.epochs < 0 || !(options.lr > 0.0))
    throw std::invalid_argument("bad training options");

  LinearModel model;
  model.weights = Matrix(d, num_classes);
  model.bias.assign(num_classes, 0.0);
  Rng rng(options.seed);
  for (double& v : model.weights.data()) v = 0.01 * rng.normal();

  double lr = options.lr;
  double loss = linear_loss_grad(features, labels, num_classes, sample_weights,
                                 model.weights, model.bias);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Matrix gw;
    std::vector<double> gb;
    linear_loss_grad(features, labels, num_classes, sample_weights, model.weights,
                     model.bias, &gw, &gb);
    Matrix w_prev = model.weights;
    std::vector<double> b_prev = model.bias;
    while (true) {
      for (std::size_t t = 0; t < model.weights.data().size(); ++t)
        model.weights.data()[t] = w_prev.data()[t] - lr * gw.data()[t];
      for (int c = 0; c < num_classes; ++c) model.bias[c] = b_prev[c] - lr * gb[c];
      double next_loss = linear_loss_grad(features, labels, num_classes, sample_weights,
                                          model.weights, model.bias);
      if (!std::isfinite(next_loss))
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
      if (next_loss <= loss || lr <= 1e-12) {
        loss = next_loss;
        break;
      }
      lr *= 0.5;  // keep the recorded loss curve non-increasing
    }
    model.loss_log.push_back(loss);
  }
  for (double v : model.weights.data())
    if (!std::isfinite(v)) throw std::runtime_error("non-finite parameters after training");
  return model;
}

Matrix predict_proba(const LinearModel& model, const Matrix& features) {
  if (features.cols() != model.weights.rows())
    throw std::invalid_argument("feature dimension does not match the model");
  Matrix probs = logits_of(features, model.weights, model.bias);
  softmax_rows(probs);
  return probs;
}

std::vector<double> cr_weights(const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("empty label vector");
  int C = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::int64_t> count(C, 0);
  for (int y : labels) count[y]++;
  std::vector<double> w(labels.size());
  double n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    w[i] = n / static_cast<double>(count[labels[i]]);
  return w;
}

std::vector<double> gr_weights(const std::vector<int>& labels,
                               const std::vector<int>& attributes) {
  if (labels.empty()) throw std::invalid_argument("empty label vector");
  if (labels.size() != attributes.size())
    throw std::invalid_argument("labels/attributes length mismatch");
  int A = *std::max_element(attributes.begin(), attributes.end()) + 1;
  int C = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::int64_t> count(static_cast<std::size_t>(C) * A, 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    count[group_index(labels[i], attributes[i], A)]++;
  std::vector<double> w(labels.size());
  double n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    w[i] = n / static_cast<double>(count[group_index(labels[i], attributes[i], A)]);
  return w;
}

std::vector<int> subsample_balanced(const std::vector<int>& labels,
                                    const std::vector<int>& attributes, SubsampleMode mode,
                                    std::uint64_t seed) {
  if (labels.empty()) throw std::invalid_argument("empty label vector");
  if (labels.size() != attributes.size())
    throw std::invalid_argument("labels/attributes length mismatch");
  int A = *std::max_element(attributes.begin(), attributes.end()) + 1;
  auto key = [&](std::size_t i) {
    return mode == SubsampleMode::Class ? labels[i] : group_index(labels[i], attributes[i], A);
  };
  std::vector<std::vector<int>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int k = key(i);
    if (members.size() <= static_cast<std::size_t>(k)) members.resize(k + 1);
    members[k].push_back(static_cast<int>(i));
  }
  std::size_t keep = labels.size();
  for (const auto& m : members)
    if (!m.empty()) keep = std::min(keep, m.size());
  std::vector<int> retained;
  Rng rng(seed);
  for (auto& m : members) {
    if (m.empty()) continue;
    std::vector<int> perm = rng.permutation(m.size());
    for (std::size_t k = 0; k < keep; ++k) retained.push_back(m[perm[k]]);
  }
  std::sort(retained.begin(), retained.end());
  return retained;
}

std::vector<double> group_proportions(const std::vector<int>& labels,
                                      const std::vector<int>& attributes, int num_classes,
                                      int num_attributes) {
  GroupCounts gc = GroupCounts::tally(std::vector<int>(labels.size(), 0), labels, attributes,
                                      num_classes, num_attributes);
  std::vector<double> w(gc.total.size());
  for (std::size_t g = 0; g < w.size(); ++g)
    w[g] = static_cast<double>(gc.total[g]) / static_cast<double>(labels.size());
  return w;
}

PredictionSet to_prediction_set(const LinearModel& model, const Dataset& data,
                                int num_attributes) {
  return PredictionSet(predict_proba(model, data.features), data.labels, data.attributes,
                       num_attributes, data.features);
}

}  // namespace groupscale
