#pragma once

#include <vector>

#include "groupscale/scaling.hpp"
#include "groupscale/types.hpp"

namespace groupscale {

struct FrontierPoint {
  double average = 0.0;
  double robust = 0.0;
  ScalingVector scaling;
};

struct CoverageReport {
  Target target = Target::WorstGroup;  // worst or unbiased
  int slices = 1000;
  double coverage = 0.0;
  std::vector<FrontierPoint> frontier;  // average accuracy descending
};

struct RealizedCoverage {
  Target target = Target::WorstGroup;
  int slices = 1000;
  int feasible_thresholds = 0;
  double value = 0.0;
};

// maximal points under (average, robust) domination; sorted by average
// descending, robust descending, then canonical scaling
std::vector<FrontierPoint> pareto_frontier(const TradeoffPool& pool, Target target);

CoverageReport robust_coverage(const TradeoffPool& pool, Target target, int D = 1000);

// Validation-chosen scalings replayed on the test split: per threshold d/D
// the pool point maximizing validation robust accuracy among those with
// validation average >= d/D is selected; the result is the mean test robust
// accuracy of the selected scalings over feasible thresholds.
RealizedCoverage realized_coverage(const TradeoffPool& val_pool, const PredictionSet& test,
                                   Target target, int D = 1000);

}  // namespace groupscale
