#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "groupscale/types.hpp"

namespace groupscale {

struct ScalingVector {
  std::vector<double> factors;                // strictly positive, length C
  std::optional<std::vector<int>> exponents;  // grid exponents when grid-derived

  static ScalingVector identity(int num_classes);
  // factors divided by factors[0]; predictions are invariant under uniform
  // positive rescaling, so this is the comparable form
  std::vector<double> canonical() const;
};

struct SearchConfig {
  double grid_base = 1.05;
  int exp_min = -200;
  int exp_max = 200;
  Target target = Target::Unbiased;
  std::vector<int> class_order;  // empty = ascending
  int passes = 1;

  void validate(int num_classes) const;
};

// pred rule of the scaled classifier: argmax_c s_c * score_ic, ties to the
// lowest class index
std::vector<int> scaled_predict(const Matrix& scores, const std::vector<double>& factors);
std::vector<int> scaled_predict(const PredictionSet& data, const ScalingVector& s);

struct Grid {
  double base = 1.05;
  int exp_min = -200;
  int exp_max = 200;
  std::vector<double> values;  // base^n ascending in n

  int exponent_at(std::size_t index) const { return exp_min + static_cast<int>(index); }
  std::size_t size() const { return values.size(); }
};

Grid grid_values(const SearchConfig& config);

enum class PointSource { GridSweep, GreedyTrajectory, Explicit };

struct TradeoffPoint {
  ScalingVector scaling;
  MetricBundle metrics;
  PointSource source = PointSource::Explicit;
};

// Evaluated (scaling, metrics) pool, deduplicated by the canonical form of
// the scaling vector. Insertion order is preserved.
class TradeoffPool {
 public:
  bool add(TradeoffPoint point);
  const std::vector<TradeoffPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<TradeoffPoint> points_;
  std::unordered_set<std::string> seen_;
};

struct SearchResult {
  ScalingVector scaling;
  MetricBundle metrics;
  TradeoffPool pool;
  bool feasible = true;  // false: constraint failed at every candidate
};

SearchResult greedy_search(const PredictionSet& val, const SearchConfig& config,
                           std::optional<double> min_average = std::nullopt);

SearchResult full_grid_search(const PredictionSet& val, const SearchConfig& config,
                              std::int64_t budget = 10'000'000);

// per-class mean feature rows, the clustering input for superclass derivation
Matrix class_signatures(const Matrix& features, const std::vector<int>& labels, int num_classes);

std::vector<int> derive_superclasses(const Matrix& signatures, int k, std::uint64_t seed);

SearchResult superclass_search(const PredictionSet& val, const SearchConfig& config,
                               const std::vector<int>& assignment,
                               std::optional<double> min_average = std::nullopt);

}  // namespace groupscale
