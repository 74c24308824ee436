#include "groupscale/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <stdexcept>

#include "groupscale/clustering.hpp"

namespace groupscale {

ScalingVector ScalingVector::identity(int num_classes) {
  ScalingVector s;
  s.factors.assign(num_classes, 1.0);
  s.exponents = std::vector<int>(num_classes, 0);
  return s;
}

std::vector<double> ScalingVector::canonical() const {
  std::vector<double> out(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) out[i] = factors[i] / factors[0];
  return out;
}

void SearchConfig::validate(int num_classes) const {
  if (!(grid_base > 1.0)) throw std::invalid_argument("grid base must be > 1");
  if (exp_min > 0 || exp_max < 0)
    throw std::invalid_argument("grid exponent range must contain 0");
  if (passes < 1) throw std::invalid_argument("passes must be >= 1");
  if (!class_order.empty()) {
    if (class_order.size() != static_cast<std::size_t>(num_classes))
      throw std::invalid_argument("class_order length must equal the class count");
    std::vector<char> seen(num_classes, 0);
    for (int c : class_order) {
      if (c < 0 || c >= num_classes || seen[c])
        throw std::invalid_argument("class_order must be a permutation of [0, C)");
      seen[c] = 1;
    }
  }
}

std::vector<int> scaled_predict(const Matrix& scores, const std::vector<double>& factors) {
  if (factors.size() != scores.cols())
    throw std::invalid_argument("scaling vector length does not match class count");
  for (double f : factors)
    if (!(f > 0.0) || !std::isfinite(f))
      throw std::invalid_argument("scaling factors must be strictly positive and finite");
  std::vector<int> preds(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const double* row = scores.row(i);
    int best = 0;
    double best_v = factors[0] * row[0];
    for (std::size_t c = 1; c < factors.size(); ++c) {
      double v = factors[c] * row[c];
      if (v > best_v) {
        best_v = v;
        best = static_cast<int>(c);
      }
    }
    preds[i] = best;
  }
  return preds;
}

std::vector<int> scaled_predict(const PredictionSet& data, const ScalingVector& s) {
  return scaled_predict(data.scores(), s.factors);
}

Grid grid_values(const SearchConfig& config) {
  if (!(config.grid_base > 1.0)) throw std::invalid_argument("grid base must be > 1");
  if (config.exp_min > 0 || config.exp_max < 0)
    throw std::invalid_argument("grid exponent range must contain 0");
  Grid g;
  g.base = config.grid_base;
  g.exp_min = config.exp_min;
  g.exp_max = config.exp_max;
  g.values.reserve(config.exp_max - config.exp_min + 1);
  for (int n = config.exp_min; n <= config.exp_max; ++n)
    g.values.push_back(std::pow(config.grid_base, static_cast<double>(n)));
  return g;
}

bool TradeoffPool::add(TradeoffPoint point) {
  std::vector<double> canon = point.scaling.canonical();
  std::string key(reinterpret_cast<const char*>(canon.data()), canon.size() * sizeof(double));
  if (!seen_.insert(std::move(key)).second) return false;
  points_.push_back(std::move(point));
  return true;
}

namespace {

// Evaluates every grid candidate for the classes in `sweep` (which share one
// factor) with all other factors held fixed; calls visit(grid_index, bundle)
// in ascending grid order. Single-class sweeps flip samples incrementally at
// the grid step where the swept class overtakes the best fixed class, using
// the same floating comparisons a from-scratch argmax would make.
void sweep_candidates(const PredictionSet& val, const std::vector<double>& factors,
                      const std::vector<int>& sweep, const Grid& grid,
                      const std::function<void(std::size_t, const MetricBundle&)>& visit) {
  const Matrix& scores = val.scores();
  const std::size_t n = val.size();
  const int C = val.num_classes();
  const int A = val.num_attributes();

  if (sweep.size() == 1) {
    const int c = sweep[0];
    std::vector<double> best_other(n);
    std::vector<int> other_pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = scores.row(i);
      int best = -1;
      double best_v = 0.0;
      for (int k = 0; k < C; ++k) {
        if (k == c) continue;
        double v = factors[k] * row[k];
        if (best < 0 || v > best_v) {
          best_v = v;
          best = k;
        }
      }
      best_other[i] = best_v;
      other_pred[i] = best;
    }

    // first grid index where the swept class wins the row argmax
    std::vector<std::vector<int>> flip_at(grid.size());
    GroupCounts counts;
    counts.num_classes = C;
    counts.num_attributes = A;
    counts.correct.assign(static_cast<std::size_t>(C) * A, 0);
    counts.total.assign(static_cast<std::size_t>(C) * A, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = scores(i, c);
      auto beats = [&](std::size_t g) {
        double v = grid.values[g] * p;
        return v > best_other[i] || (v == best_other[i] && c < other_pred[i]);
      };
      std::size_t lo = 0, hi = grid.size();
      while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (beats(mid))
          hi = mid;
        else
          lo = mid + 1;
      }
      if (lo < grid.size()) flip_at[lo].push_back(static_cast<int>(i));
      int g = group_index(val.labels()[i], val.attributes()[i], A);
      counts.total[g] += 1;
      if (other_pred[i] == val.labels()[i]) counts.correct[g] += 1;
    }

    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      for (int i : flip_at[gi]) {
        int lab = val.labels()[i];
        int g = group_index(lab, val.attributes()[i], A);
        counts.correct[g] += (c == lab) - (other_pred[i] == lab);
      }
      visit(gi, bundle_from_counts(counts));
    }
    return;
  }

  std::vector<double> tmp = factors;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (int c : sweep) tmp[c] = grid.values[gi];
    std::vector<int> preds = scaled_predict(scores, tmp);
    visit(gi, bundle_from_counts(
                  GroupCounts::tally(preds, val.labels(), val.attributes(), C, A)));
  }
}

struct SweepWinner {
  bool found = false;
  std::size_t index = 0;
  MetricBundle bundle;
};

// deterministic candidate choice: target, then average accuracy, then the
// exponent magnitude, then the signed exponent
SweepWinner pick_winner(const PredictionSet& val, const std::vector<double>& factors,
                        const std::vector<int>& sweep, const Grid& grid, Target target,
                        std::optional<double> min_average,
                        const std::function<void(std::size_t, const MetricBundle&)>& record) {
  SweepWinner win;
  double best_t = 0.0, best_avg = 0.0;
  int best_abs = 0, best_exp = 0;
  sweep_candidates(val, factors, sweep, grid, [&](std::size_t gi, const MetricBundle& b) {
    record(gi, b);
    if (min_average && b.average < *min_average) return;
    double t = target_value(b, target);
    int e = grid.exponent_at(gi);
    int abs_e = e < 0 ? -e : e;
    bool better;
    if (!win.found)
      better = true;
    else if (t != best_t)
      better = t > best_t;
    else if (b.average != best_avg)
      better = b.average > best_avg;
    else if (abs_e != best_abs)
      better = abs_e < best_abs;
    else
      better = e < best_exp;
    if (better) {
      win.found = true;
      win.index = gi;
      win.bundle = b;
      best_t = t;
      best_avg = b.average;
      best_abs = abs_e;
      best_exp = e;
    }
  });
  return win;
}

SearchResult sweep_search(const PredictionSet& val, const SearchConfig& config,
                          const std::vector<std::vector<int>>& sweep_sets,
                          std::optional<double> min_average, PointSource source) {
  const int C = val.num_classes();
  Grid grid = grid_values(config);
  std::vector<double> factors(C, 1.0);
  std::vector<int> exponents(C, 0);

  SearchResult result;
  for (int pass = 0; pass < config.passes; ++pass) {
    for (const std::vector<int>& sweep : sweep_sets) {
      auto record = [&](std::size_t gi, const MetricBundle& b) {
        ScalingVector sv;
        sv.factors = factors;
        sv.exponents = exponents;
        for (int c : sweep) {
          sv.factors[c] = grid.values[gi];
          (*sv.exponents)[c] = grid.exponent_at(gi);
        }
        result.pool.add({std::move(sv), b, source});
      };
      SweepWinner win =
          pick_winner(val, factors, sweep, grid, config.target, min_average, record);
      if (win.found) {
        for (int c : sweep) {
          factors[c] = grid.values[win.index];
          exponents[c] = grid.exponent_at(win.index);
        }
      }
    }
  }

  result.scaling.factors = factors;
  result.scaling.exponents = exponents;
  std::vector<int> preds = scaled_predict(val.scores(), factors);
  result.metrics = bundle_from_counts(
      GroupCounts::tally(preds, val.labels(), val.attributes(), C, val.num_attributes()));
  result.feasible = !min_average || result.metrics.average >= *min_average;
  return result;
}

}  // namespace

SearchResult greedy_search(const PredictionSet& val, const SearchConfig& config,
                           std::optional<double> min_average) {
  config.validate(val.num_classes());
  const int C = val.num_classes();
  std::vector<int> order = config.class_order;
  if (order.empty()) {
    order.resize(C);
    for (int c = 0; c < C; ++c) order[c] = c;
  }
  std::vector<std::vector<int>> sweeps;
  sweeps.reserve(order.size());
  for (int c : order) sweeps.push_back({c});
  return sweep_search(val, config, sweeps, min_average, PointSource::GreedyTrajectory);
}

SearchResult full_grid_search(const PredictionSet& val, const SearchConfig& config,
                              std::int64_t budget) {
  config.validate(val.num_classes());
  const int C = val.num_classes();
  Grid grid = grid_values(config);
  const std::size_t G = grid.size();

  double evals = 1.0;
  for (int c = 1; c < C; ++c) evals *= static_cast<double>(G);
  if (evals > static_cast<double>(budget))
    throw std::invalid_argument("full grid search needs " + std::to_string(evals) +
                                " evaluations, above the budget of " + std::to_string(budget));

  SearchResult result;
  std::vector<double> factors(C, 1.0);
  std::vector<int> exponents(C, 0);
  std::vector<std::size_t> idx(C > 1 ? C - 2 : 0, 0);  // classes 1..C-2; class C-1 is swept

  bool found = false;
  double best_t = 0.0, best_avg = 0.0;
  long best_l1 = 0;
  std::vector<int> best_exps;
  std::vector<int> sweep{C - 1};

  while (true) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      factors[k + 1] = grid.values[idx[k]];
      exponents[k + 1] = grid.exponent_at(idx[k]);
    }
    sweep_candidates(val, factors, sweep, grid, [&](std::size_t gi, const MetricBundle& b) {
      ScalingVector sv;
      sv.factors = factors;
      sv.factors[C - 1] = grid.values[gi];
      sv.exponents = exponents;
      (*sv.exponents)[C - 1] = grid.exponent_at(gi);
      double t = target_value(b, config.target);
      long l1 = 0;
      for (int e : *sv.exponents) l1 += e < 0 ? -e : e;
      bool better;
      if (!found)
        better = true;
      else if (t != best_t)
        better = t > best_t;
      else if (b.average != best_avg)
        better = b.average > best_avg;
      else if (l1 != best_l1)
        better = l1 < best_l1;
      else
        better = *sv.exponents < best_exps;
      if (better) {
        found = true;
        best_t = t;
        best_avg = b.average;
        best_l1 = l1;
        best_exps = *sv.exponents;
        result.scaling = sv;
        result.metrics = b;
      }
      result.pool.add({std::move(sv), b, PointSource::GridSweep});
    });
    std::size_t k = 0;
    for (; k < idx.size(); ++k) {
      if (++idx[k] < G) break;
      idx[k] = 0;
    }
    if (k == idx.size()) break;
  }
  return result;
}

Matrix class_signatures(const Matrix& features, const std::vector<int>& labels, int num_classes) {
  if (features.rows() != labels.size())
    throw std::invalid_argument("feature rows do not match label count");
  Matrix sig(num_classes, features.cols(), 0.0);
  std::vector<std::int64_t> count(num_classes, 0);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    int y = labels[i];
    if (y < 0 || y >= num_classes) throw std::invalid_argument("label out of range");
    count[y] += 1;
    const double* row = features.row(i);
    for (std::size_t j = 0; j < features.cols(); ++j) sig(y, j) += row[j];
  }
  for (int y = 0; y < num_classes; ++y) {
    if (count[y] == 0)
      throw std::invalid_argument("class " + std::to_string(y) + " has no samples");
    for (std::size_t j = 0; j < features.cols(); ++j)
      sig(y, j) /= static_cast<double>(count[y]);
  }
  return sig;
}

std::vector<int> derive_superclasses(const Matrix& signatures, int k, std::uint64_t seed) {
  if (k < 1 || static_cast<std::size_t>(k) > signatures.rows())
    throw std::invalid_argument("superclass count must be in [1, C]");
  Centroids cent = kmeans_fit(signatures, k, seed);
  return kmeans_assign(signatures, cent);
}

SearchResult superclass_search(const PredictionSet& val, const SearchConfig& config,
                               const std::vector<int>& assignment,
                               std::optional<double> min_average) {
  config.validate(val.num_classes());
  const int C = val.num_classes();
  if (assignment.size() != static_cast<std::size_t>(C))
    throw std::invalid_argument("superclass assignment length must equal the class count");
  int k = 0;
  for (int a : assignment) {
    if (a < 0) throw std::invalid_argument("superclass indices must be nonnegative");
    k = std::max(k, a + 1);
  }
  std::vector<std::vector<int>> sweeps(k);
  for (int c = 0; c < C; ++c) sweeps[assignment[c]].push_back(c);
  for (int j = 0; j < k; ++j)
    if (sweeps[j].empty())
      throw std::invalid_argument("superclass " + std::to_string(j) + " has no classes");
  return sweep_search(val, config, sweeps, min_average, PointSource::GreedyTrajectory);
}

}  // namespace groupscale
