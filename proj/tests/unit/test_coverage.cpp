#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "../oracles.hpp"
#include "groupscale/coverage.hpp"

using namespace groupscale;

namespace {

// pool point with fabricated metrics; worst and unbiased carry the same value
// so either robust target reads the intended number
TradeoffPoint fake_point(double average, double robust, std::vector<double> factors) {
  TradeoffPoint p;
  p.scaling.factors = std::move(factors);
  p.metrics.average = average;
  p.metrics.worst_group = robust;
  p.metrics.unbiased = robust;
  return p;
}

TradeoffPool pool_of(const std::vector<std::pair<double, double>>& pts) {
  TradeoffPool pool;
  double f = 1.0;
  for (const auto& [aa, ra] : pts) {
    pool.add(fake_point(aa, ra, {1.0, f}));
    f += 1.0;
  }
  return pool;
}

}  // namespace

TEST_CASE("single perfect point covers the whole threshold range") {
  TradeoffPool pool = pool_of({{1.0, 1.0}});
  CoverageReport rep = robust_coverage(pool, Target::WorstGroup);
  CHECK(rep.coverage == 1.0);
  CHECK(rep.slices == 1000);
  CHECK(rep.frontier.size() == 1);
}

TEST_CASE("single imperfect point covers a truncated range") {
  TradeoffPool pool = pool_of({{0.95, 0.8}});
  CoverageReport rep = robust_coverage(pool, Target::WorstGroup);
  // thresholds d/1000 for d = 0..950 are feasible: 951 slices at 0.8
  CHECK(rep.coverage == doctest::Approx(0.7608).epsilon(1e-9));
  CHECK(rep.coverage == oracle::coverage_direct(pool, Target::WorstGroup, 1000));
}

TEST_CASE("two-point pool mixes both plateaus") {
  TradeoffPool pool = pool_of({{1.0, 0.5}, {0.9, 0.9}});
  CoverageReport rep = robust_coverage(pool, Target::WorstGroup);
  // d = 0..900 take 0.9, d = 901..999 fall back to 0.5
  CHECK(rep.coverage == doctest::Approx(0.8604).epsilon(1e-9));
  CHECK(rep.coverage == oracle::coverage_direct(pool, Target::WorstGroup, 1000));
  CHECK(rep.frontier.size() == 2);
  CHECK(rep.frontier[0].average == 1.0);
  CHECK(rep.frontier[1].robust == 0.9);
}

TEST_CASE("dominated points drop off the frontier") {
  TradeoffPool pool = pool_of({{0.9, 0.5}, {0.8, 0.6}, {0.85, 0.4}});
  std::vector<FrontierPoint> f = pareto_frontier(pool, Target::WorstGroup);
  REQUIRE(f.size() == 2);
  CHECK(f[0].average == 0.9);
  CHECK(f[0].robust == 0.5);
  CHECK(f[1].average == 0.8);
  CHECK(f[1].robust == 0.6);
}

TEST_CASE("equal metric duplicates stay on the frontier in canonical order") {
  TradeoffPool pool;
  pool.add(fake_point(0.9, 0.8, {1.0, 2.0}));
  pool.add(fake_point(0.9, 0.8, {1.0, 1.0}));
  pool.add(fake_point(1.0, 0.5, {3.0, 1.0}));
  std::vector<FrontierPoint> f = pareto_frontier(pool, Target::WorstGroup);
  REQUIRE(f.size() == 3);
  CHECK(f[0].average == 1.0);
  CHECK(f[1].scaling.canonical() == std::vector<double>{1.0, 1.0});
  CHECK(f[2].scaling.canonical() == std::vector<double>{1.0, 2.0});
}

TEST_CASE("frontier matches the pairwise domination scan on random pools") {
  Rng rng(51);
  for (int it = 0; it < 20; ++it) {
    TradeoffPool pool;
    int m = 2 + static_cast<int>(rng.integer(30));
    for (int i = 0; i < m; ++i) {
      double aa = 0.05 * static_cast<double>(rng.integer(21));
      double ra = 0.05 * static_cast<double>(rng.integer(21));
      pool.add(fake_point(aa, ra, {1.0, 1.0 + static_cast<double>(i)}));
    }
    for (Target t : {Target::WorstGroup, Target::Unbiased}) {
      std::vector<FrontierPoint> got = pareto_frontier(pool, t);
      std::vector<FrontierPoint> want = oracle::pareto_bruteforce(pool, t);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].average == want[i].average);
        CHECK(got[i].robust == want[i].robust);
        CHECK(got[i].scaling.canonical() == want[i].scaling.canonical());
      }
    }
  }
}

TEST_CASE("frontier extraction is idempotent") {
  Rng rng(52);
  TradeoffPool pool;
  for (int i = 0; i < 25; ++i)
    pool.add(fake_point(0.1 * static_cast<double>(rng.integer(11)),
                        0.1 * static_cast<double>(rng.integer(11)),
                        {1.0, 1.0 + static_cast<double>(i)}));
  std::vector<FrontierPoint> once = pareto_frontier(pool, Target::WorstGroup);
  TradeoffPool again;
  for (const FrontierPoint& p : once)
    again.add(fake_point(p.average, p.robust, p.scaling.factors));
  std::vector<FrontierPoint> twice = pareto_frontier(again, Target::WorstGroup);
  REQUIRE(twice.size() == once.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i].average == once[i].average);
    CHECK(twice[i].robust == once[i].robust);
  }
}

TEST_CASE("coverage equals the direct definition on random pools") {
  Rng rng(53);
  for (int it = 0; it < 20; ++it) {
    TradeoffPool pool;
    int m = 1 + static_cast<int>(rng.integer(40));
    for (int i = 0; i < m; ++i)
      pool.add(fake_point(rng.uniform(), rng.uniform(), {1.0, 1.0 + static_cast<double>(i)}));
    for (int D : {1, 7, 100, 1000})
      for (Target t : {Target::WorstGroup, Target::Unbiased})
        CHECK(robust_coverage(pool, t, D).coverage == oracle::coverage_direct(pool, t, D));
  }
}

TEST_CASE("coverage computed from the frontier alone matches the full pool") {
  Rng rng(54);
  PredictionSet data = oracle::random_set(rng, 120, 2, 2);
  SearchConfig cfg;
  cfg.target = Target::WorstGroup;
  SearchResult res = greedy_search(data, cfg);
  CoverageReport full = robust_coverage(res.pool, Target::WorstGroup);
  TradeoffPool trimmed;
  for (const FrontierPoint& p : full.frontier) {
    MetricBundle b = metric_bundle(data, scaled_predict(data, p.scaling));
    trimmed.add({p.scaling, b, PointSource::Explicit});
  }
  CHECK(robust_coverage(trimmed, Target::WorstGroup).coverage == full.coverage);
}

TEST_CASE("adding a point never lowers coverage") {
  TradeoffPool pool = pool_of({{0.9, 0.6}});
  double before = robust_coverage(pool, Target::WorstGroup).coverage;
  pool.add(fake_point(0.7, 0.9, {1.0, 99.0}));
  double after = robust_coverage(pool, Target::WorstGroup).coverage;
  CHECK(after >= before);
  pool.add(fake_point(1.0, 1.0, {1.0, 123.0}));
  CHECK(robust_coverage(pool, Target::WorstGroup).coverage == 1.0);
}

TEST_CASE("coverage rejects bad arguments") {
  TradeoffPool empty;
  CHECK_THROWS_AS(pareto_frontier(empty, Target::WorstGroup), std::invalid_argument);
  TradeoffPool pool = pool_of({{0.9, 0.6}});
  CHECK_THROWS_AS(robust_coverage(pool, Target::WorstGroup, 0), std::invalid_argument);
  CHECK_THROWS_AS(robust_coverage(pool, Target::Average), std::invalid_argument);
  CHECK_THROWS_AS(robust_coverage(pool, Target::Balanced), std::invalid_argument);
}

TEST_CASE("replay on the validation split reproduces the restricted mean") {
  Rng rng(55);
  for (Target t : {Target::WorstGroup, Target::Unbiased}) {
    PredictionSet data = oracle::random_set(rng, 150, 2, 2);
    SearchConfig cfg;
    cfg.target = t;
    SearchResult res = greedy_search(data, cfg);
    const int D = 200;
    RealizedCoverage rc = realized_coverage(res.pool, data, t, D);

    std::vector<FrontierPoint> frontier = pareto_frontier(res.pool, t);
    double sum = 0.0;
    int feasible = 0;
    for (int d = 0; d < D; ++d) {
      double thr = static_cast<double>(d) / static_cast<double>(D);
      bool any = false;
      double best = 0.0;
      for (const FrontierPoint& p : frontier) {
        if (p.average < thr) continue;
        if (!any || p.robust > best) best = p.robust;
        any = true;
      }
      if (any) {
        sum += best;
        ++feasible;
      }
    }
    CHECK(rc.feasible_thresholds == feasible);
    CHECK(rc.value == sum / static_cast<double>(feasible));
  }
}

TEST_CASE("replay picks the first point of an equal validation block") {
  // two pool points tie on validation metrics but act differently on test;
  // the canonical sort puts the identity scaling first, so the replay must
  // use it
  TradeoffPool pool;
  pool.add(fake_point(0.9, 0.8, {1.0, 2.0}));
  pool.add(fake_point(0.9, 0.8, {1.0, 1.0}));
  Matrix scores = Matrix::from_rows({{0.6, 0.4}});
  PredictionSet test(scores, {1}, {0}, 1);
  RealizedCoverage rc = realized_coverage(pool, test, Target::WorstGroup, 1);
  CHECK(rc.feasible_thresholds == 1);
  CHECK(rc.value == 0.0);  // identity predicts class 0, which is wrong
}

TEST_CASE("replay on a held-out split matches an independent evaluation") {
  Rng rng(56);
  PredictionSet val = oracle::random_set(rng, 120, 2, 2);
  PredictionSet test = oracle::random_set(rng, 90, 2, 2);
  SearchConfig cfg;
  cfg.target = Target::WorstGroup;
  SearchResult res = greedy_search(val, cfg);
  const int D = 100;
  RealizedCoverage rc = realized_coverage(res.pool, test, Target::WorstGroup, D);

  std::vector<FrontierPoint> frontier = oracle::pareto_bruteforce(res.pool, Target::WorstGroup);
  double sum = 0.0;
  int feasible = 0;
  for (int d = 0; d < D; ++d) {
    double thr = static_cast<double>(d) / static_cast<double>(D);
    double best = -1.0;
    std::size_t pick = frontier.size();
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      if (frontier[i].average < thr) continue;
      if (frontier[i].robust > best) {
        best = frontier[i].robust;
        pick = i;
      }
    }
    if (pick == frontier.size()) continue;
    oracle::Metrics m = oracle::evaluate(test, frontier[pick].scaling.factors);
    sum += m.worst;
    ++feasible;
  }
  CHECK(rc.feasible_thresholds == feasible);
  CHECK(rc.value == sum / static_cast<double>(feasible));
}

TEST_CASE("replay validates its inputs") {
  TradeoffPool pool;
  pool.add(fake_point(0.9, 0.8, {1.0, 1.0, 1.0}));
  Matrix scores = Matrix::from_rows({{0.6, 0.4}});
  PredictionSet test(scores, {1}, {0}, 1);
  CHECK_THROWS_AS(realized_coverage(pool, test, Target::WorstGroup), std::invalid_argument);
  TradeoffPool ok;
  ok.add(fake_point(0.9, 0.8, {1.0, 1.0}));
  CHECK_THROWS_AS(realized_coverage(ok, test, Target::WorstGroup, 0), std::invalid_argument);
}
