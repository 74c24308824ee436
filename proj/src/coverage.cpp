#include "groupscale/coverage.hpp"

#include <algorithm>
#include <stdexcept>

namespace groupscale {

namespace {

double robust_metric(const MetricBundle& b, Target t) {
  if (t == Target::WorstGroup) return b.worst_group;
  if (t == Target::Unbiased) return b.unbiased;
  throw std::invalid_argument("coverage target must be worst or unbiased");
}

}  // namespace

std::vector<FrontierPoint> pareto_frontier(const TradeoffPool& pool, Target target) {
  if (pool.size() == 0) throw std::invalid_argument("pareto frontier of an empty pool");
  struct Entry {
    double aa, ra;
    std::vector<double> canon;
    const TradeoffPoint* point;
  };
  std::vector<Entry> entries;
  entries.reserve(pool.size());
  for (const TradeoffPoint& p : pool.points())
    entries.push_back({p.metrics.average, robust_metric(p.metrics, target),
                       p.scaling.canonical(), &p});
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.aa != b.aa) return a.aa > b.aa;
    if (a.ra != b.ra) return a.ra > b.ra;
    return a.canon < b.canon;
  });

  std::vector<FrontierPoint> frontier;
  double best_ra_above = -1.0;  // max RA among strictly higher-AA points
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].aa == entries[i].aa) ++j;
    double block_max = entries[i].ra;  // block sorted RA descending
    for (std::size_t k = i; k < j; ++k) {
      if (entries[k].ra == block_max && entries[k].ra > best_ra_above)
        frontier.push_back({entries[k].aa, entries[k].ra, entries[k].point->scaling});
    }
    best_ra_above = std::max(best_ra_above, block_max);
    i = j;
  }
  return frontier;
}

CoverageReport robust_coverage(const TradeoffPool& pool, Target target, int D) {
  if (D < 1) throw std::invalid_argument("slice count must be >= 1");
  CoverageReport report;
  report.target = target;
  report.slices = D;
  report.frontier = pareto_frontier(pool, target);

  // frontier is average-descending, so the feasible points for a rising
  // threshold form a shrinking prefix whose best robust accuracy sits at the
  // prefix end
  std::ptrdiff_t j = static_cast<std::ptrdiff_t>(report.frontier.size()) - 1;
  double sum = 0.0;
  for (int d = 0; d < D; ++d) {
    double t = static_cast<double>(d) / static_cast<double>(D);
    while (j >= 0 && report.frontier[j].average < t) --j;
    if (j >= 0) sum += report.frontier[j].robust;
  }
  report.coverage = sum / static_cast<double>(D);
  return report;
}

RealizedCoverage realized_coverage(const TradeoffPool& val_pool, const PredictionSet& test,
                                   Target target, int D) {
  if (D < 1) throw std::invalid_argument("slice count must be >= 1");
  std::vector<FrontierPoint> frontier = pareto_frontier(val_pool, target);
  for (const FrontierPoint& p : frontier)
    if (p.scaling.factors.size() != static_cast<std::size_t>(test.num_classes()))
      throw std::invalid_argument("pool scalings do not match the test class count");

  // test robust accuracy per frontier point, evaluated on demand; the
  // threshold selection below only ever picks the first point of an equal
  // (average, robust) block, i.e. the earliest index attaining the prefix max
  std::vector<double> test_ra(frontier.size());
  std::vector<char> have(frontier.size(), 0);
  auto eval = [&](std::size_t idx) {
    if (!have[idx]) {
      std::vector<int> preds = scaled_predict(test, frontier[idx].scaling);
      test_ra[idx] = robust_metric(metric_bundle(test, preds), target);
      have[idx] = 1;
    }
    return test_ra[idx];
  };

  std::ptrdiff_t j = static_cast<std::ptrdiff_t>(frontier.size()) - 1;
  double sum = 0.0;
  int feasible = 0;
  for (int d = 0; d < D; ++d) {
    double t = static_cast<double>(d) / static_cast<double>(D);
    while (j >= 0 && frontier[j].average < t) --j;
    if (j < 0) continue;
    std::size_t sel = static_cast<std::size_t>(j);
    while (sel > 0 && frontier[sel - 1].robust == frontier[sel].robust &&
           frontier[sel - 1].average == frontier[sel].average)
      --sel;
    sum += eval(sel);
    ++feasible;
  }
  if (feasible == 0) throw std::invalid_argument("no threshold is feasible for the pool");

  RealizedCoverage out;
  out.target = target;
  out.slices = D;
  out.feasible_thresholds = feasible;
  out.value = sum / static_cast<double>(feasible);
  return out;
}

}  // namespace groupscale
