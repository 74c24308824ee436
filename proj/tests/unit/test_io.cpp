#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "groupscale/adaptive.hpp"
#include "groupscale/coverage.hpp"
#include "groupscale/io.hpp"

using namespace groupscale;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / ("groupscale_io_" + std::to_string(counter()++));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("prediction sets survive a save/load round trip bit for bit") {
  TempDir tmp;
  Rng rng(91);
  PredictionSet data = oracle::random_set(rng, 40, 3, 2, true, 4);
  save_prediction_set(data, tmp / "p.csv", tmp / "f.csv");
  PredictionSet back = load_prediction_set(tmp / "p.csv", tmp / "f.csv", false);
  CHECK(back.scores() == data.scores());
  CHECK(back.labels() == data.labels());
  CHECK(back.attributes() == data.attributes());
  CHECK(back.num_attributes() == data.num_attributes());
  CHECK(back.features() == data.features());

  save_prediction_set(back, tmp / "p2.csv", tmp / "f2.csv");
  PredictionSet again = load_prediction_set(tmp / "p2.csv", tmp / "f2.csv", false);
  CHECK(again.scores() == back.scores());
}

TEST_CASE("logit rows pass through a max-subtracted softmax") {
  TempDir tmp;
  write_text(tmp / "l.csv", "label,attribute,score_0,score_1\n0,0,2.0,0.0\n");
  PredictionSet data = load_prediction_set(tmp / "l.csv", std::nullopt, true);
  double e = std::exp(-2.0);
  CHECK(data.scores()(0, 0) == 1.0 / (1.0 + e));
  CHECK(data.scores()(0, 1) == e / (1.0 + e));
}

TEST_CASE("near-simplex rows are kept, drifted rows renormalized, bad rows rejected") {
  TempDir tmp;
  write_text(tmp / "keep.csv", "label,attribute,score_0,score_1\n0,0,0.5,0.5000000005\n");
  PredictionSet keep = load_prediction_set(tmp / "keep.csv", std::nullopt, false);
  CHECK(keep.scores()(0, 1) == 0.5000000005);  // within 1e-9: bits untouched

  write_text(tmp / "renorm.csv", "label,attribute,score_0,score_1\n0,0,0.5,0.50000005\n");
  PredictionSet renorm = load_prediction_set(tmp / "renorm.csv", std::nullopt, false);
  double sum = 0.5 + 0.50000005;
  CHECK(renorm.scores()(0, 0) == 0.5 / sum);
  CHECK(renorm.scores()(0, 1) == 0.50000005 / sum);

  write_text(tmp / "bad.csv", "label,attribute,score_0,score_1\n0,0,0.5,0.500002\n");
  CHECK_THROWS_AS(load_prediction_set(tmp / "bad.csv", std::nullopt, false),
                  std::invalid_argument);
}

TEST_CASE("negative probabilities point the user at the logits flag") {
  TempDir tmp;
  write_text(tmp / "neg.csv", "label,attribute,score_0,score_1\n0,0,1.1,-0.1\n");
  std::string msg =
      message_of([&] { load_prediction_set(tmp / "neg.csv", std::nullopt, false); });
  CHECK(msg.find("--logits") != std::string::npos);
  // the same file parses fine as logits
  CHECK_NOTHROW(load_prediction_set(tmp / "neg.csv", std::nullopt, true));
}

TEST_CASE("prediction csv errors carry the line number") {
  TempDir tmp;
  write_text(tmp / "h.csv", "labels,attribute,score_0,score_1\n0,0,0.5,0.5\n");
  CHECK_THROWS_AS(load_prediction_set(tmp / "h.csv", std::nullopt, false),
                  std::invalid_argument);
  write_text(tmp / "col.csv", "label,attribute,score_0,prob_1\n0,0,0.5,0.5\n");
  CHECK_THROWS_AS(load_prediction_set(tmp / "col.csv", std::nullopt, false),
                  std::invalid_argument);
  write_text(tmp / "short.csv",
             "label,attribute,score_0,score_1\n0,0,0.5,0.5\n0,0,0.5\n");
  std::string msg =
      message_of([&] { load_prediction_set(tmp / "short.csv", std::nullopt, false); });
  CHECK(msg.find(":3:") != std::string::npos);
  write_text(tmp / "num.csv", "label,attribute,score_0,score_1\n0,0,0.5,zz\n");
  msg = message_of([&] { load_prediction_set(tmp / "num.csv", std::nullopt, false); });
  CHECK(msg.find("malformed number 'zz'") != std::string::npos);
  write_text(tmp / "lab.csv", "label,attribute,score_0,score_1\n-1,0,0.5,0.5\n");
  CHECK_THROWS_AS(load_prediction_set(tmp / "lab.csv", std::nullopt, false),
                  std::invalid_argument);
  write_text(tmp / "head.csv", "label,attribute,score_0,score_1\n");
  CHECK_THROWS_AS(load_prediction_set(tmp / "head.csv", std::nullopt, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_prediction_set(tmp / "missing.csv", std::nullopt, false),
                  std::runtime_error);
}

TEST_CASE("feature csv round trips and rejects bad values") {
  TempDir tmp;
  Rng rng(92);
  Matrix f(7, 3);
  for (double& v : f.data()) v = rng.normal() * 1e3;
  save_features(f, tmp / "f.csv");
  CHECK(load_features(tmp / "f.csv") == f);

  write_text(tmp / "badh.csv", "f_0,g_1\n0.0,1.0\n");
  CHECK_THROWS_AS(load_features(tmp / "badh.csv"), std::invalid_argument);
  write_text(tmp / "inf.csv", "f_0\ninf\n");
  CHECK_THROWS_AS(load_features(tmp / "inf.csv"), std::invalid_argument);
  write_text(tmp / "ragged.csv", "f_0,f_1\n0.0,1.0\n2.0\n");
  std::string msg = message_of([&] { load_features(tmp / "ragged.csv"); });
  CHECK(msg.find(":3:") != std::string::npos);
}

TEST_CASE("trade-off pools round trip with metrics and provenance intact") {
  TempDir tmp;
  Rng rng(93);
  PredictionSet data = oracle::random_set(rng, 60, 2, 2);
  SearchConfig cfg;
  cfg.exp_min = -30;
  cfg.exp_max = 30;
  SearchResult res = greedy_search(data, cfg);
  save_pool(res.pool, tmp / "pool.json");
  TradeoffPool back = load_pool(tmp / "pool.json");
  REQUIRE(back.size() == res.pool.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const TradeoffPoint& a = res.pool.points()[i];
    const TradeoffPoint& b = back.points()[i];
    CHECK(a.scaling.factors == b.scaling.factors);
    CHECK(a.scaling.exponents == b.scaling.exponents);
    CHECK(a.metrics.per_group == b.metrics.per_group);
    CHECK(a.metrics.present == b.metrics.present);
    CHECK(a.metrics.worst_group == b.metrics.worst_group);
    CHECK(a.metrics.unbiased == b.metrics.unbiased);
    CHECK(a.metrics.average == b.metrics.average);
    CHECK(a.metrics.balanced == b.metrics.balanced);
    CHECK(a.metrics.empty_groups == b.metrics.empty_groups);
    CHECK(a.source == b.source);
  }
  CHECK_THROWS_AS(load_pool(tmp / "nope.json"), std::runtime_error);
  write_text(tmp / "junk.json", "{not json");
  CHECK_THROWS_AS(load_pool(tmp / "junk.json"), std::invalid_argument);
}

TEST_CASE("coverage reports round trip") {
  TempDir tmp;
  Rng rng(94);
  PredictionSet data = oracle::random_set(rng, 50, 2, 2);
  SearchConfig cfg;
  cfg.target = Target::WorstGroup;
  SearchResult res = greedy_search(data, cfg);
  CoverageReport rep = robust_coverage(res.pool, Target::WorstGroup, 500);
  save_report(rep, tmp / "rep.json");
  CoverageReport back = load_report(tmp / "rep.json");
  CHECK(back.target == rep.target);
  CHECK(back.slices == rep.slices);
  CHECK(back.coverage == rep.coverage);
  REQUIRE(back.frontier.size() == rep.frontier.size());
  for (std::size_t i = 0; i < back.frontier.size(); ++i) {
    CHECK(back.frontier[i].average == rep.frontier[i].average);
    CHECK(back.frontier[i].robust == rep.frontier[i].robust);
    CHECK(back.frontier[i].scaling.factors == rep.frontier[i].scaling.factors);
  }
}

TEST_CASE("frontier csv uses exponents when available") {
  TempDir tmp;
  FrontierPoint with_e;
  with_e.average = 0.75;
  with_e.robust = 0.5;
  with_e.scaling.factors = {1.0, 1.5513};
  with_e.scaling.exponents = std::vector<int>{0, 9};
  FrontierPoint bare;
  bare.average = 0.25;
  bare.robust = 0.125;
  bare.scaling.factors = {1.0, 2.0};
  export_frontier_csv({with_e, bare}, tmp / "front.csv");
  std::string want =
      "average_accuracy,robust_accuracy,scaling_exponents\n"
      "0.75,0.5,0;9\n"
      "0.25,0.125,1;2\n";
  std::ifstream in(tmp / "front.csv", std::ios::binary);
  std::string got((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(got == want);
}

TEST_CASE("cluster models round trip") {
  TempDir tmp;
  Rng rng(95);
  PredictionSet data = oracle::random_set(rng, 40, 2, 2, true);
  SearchConfig cfg;
  cfg.target = Target::WorstGroup;
  ClusterScalingModel model = irs_fit(data, 3, cfg, 5, 2);
  save_cluster_model(model, tmp / "m.json");
  ClusterScalingModel back = load_cluster_model(tmp / "m.json");
  CHECK(back.centroids.points == model.centroids.points);
  CHECK(back.centroids.assignment == model.centroids.assignment);
  CHECK(back.centroids.inertia == model.centroids.inertia);
  CHECK(back.centroids.inertia_history == model.centroids.inertia_history);
  CHECK(back.centroids.iterations == model.centroids.iterations);
  CHECK(back.centroids.shift == model.centroids.shift);
  CHECK(back.centroids.scale == model.centroids.scale);
  REQUIRE(back.scalings.size() == model.scalings.size());
  for (std::size_t k = 0; k < back.scalings.size(); ++k) {
    CHECK(back.scalings[k].factors == model.scalings[k].factors);
    CHECK(back.scalings[k].exponents == model.scalings[k].exponents);
  }
  CHECK(back.fitted == model.fitted);
  CHECK(back.config.grid_base == model.config.grid_base);
  CHECK(back.config.exp_min == model.config.exp_min);
  CHECK(back.config.exp_max == model.config.exp_max);
  CHECK(back.config.target == model.config.target);
  CHECK(back.config.passes == model.config.passes);
  // routed predictions are identical through the round trip
  CHECK(irs_predict(back, data) == irs_predict(model, data));

  save_report(robust_coverage(greedy_search(data, cfg).pool, Target::WorstGroup),
              tmp / "notmodel.json");
  CHECK_THROWS_AS(load_cluster_model(tmp / "notmodel.json"), std::invalid_argument);
}

TEST_CASE("attribute models round trip") {
  TempDir tmp;
  Rng rng(96);
  PredictionSet data = oracle::random_set(rng, 40, 2, 2, true);
  SearchConfig cfg;
  AttributeScalingModel model = ars_fit(data, cfg, 0.8, 5, 2);
  save_attribute_model(model, tmp / "a.json");
  AttributeScalingModel back = load_attribute_model(tmp / "a.json");
  CHECK(back.estimator.model.weights == model.estimator.model.weights);
  CHECK(back.estimator.model.bias == model.estimator.model.bias);
  CHECK(back.estimator.model.loss_log == model.estimator.model.loss_log);
  CHECK(back.estimator.num_attributes == model.estimator.num_attributes);
  CHECK(back.estimator.labeled_count == model.estimator.labeled_count);
  CHECK(back.estimator.train_accuracy == model.estimator.train_accuracy);
  CHECK(back.estimator.seed == model.estimator.seed);
  REQUIRE(back.scalings.size() == model.scalings.size());
  for (std::size_t k = 0; k < back.scalings.size(); ++k)
    CHECK(back.scalings[k].factors == model.scalings[k].factors);
  CHECK(back.fitted == model.fitted);
  CHECK(ars_predict(back, data) == ars_predict(model, data));
  save_cluster_model(irs_fit(data, 2, cfg, 1, 2), tmp / "c.json");
  CHECK_THROWS_AS(load_attribute_model(tmp / "c.json"), std::invalid_argument);
}

TEST_CASE("centroid csv lists one row per cluster") {
  TempDir tmp;
  Centroids c;
  c.points = Matrix::from_rows({{1.5, 2.5}, {-0.25, 4.0}});
  save_centroids_csv(c, tmp / "cent.csv");
  std::ifstream in(tmp / "cent.csv", std::ios::binary);
  std::string got((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(got == "1.5,2.5\n-0.25,4\n");
}

TEST_CASE("generator configs round trip and fill defaults") {
  TempDir tmp;
  SyntheticConfig cfg;
  cfg.n_train = 123;
  cfg.rho = 0.625;
  cfg.seed = 42;
  save_synth_config(cfg, tmp / "cfg.json");
  SyntheticConfig back = load_synth_config(tmp / "cfg.json");
  CHECK(back.n_train == 123);
  CHECK(back.rho == 0.625);
  CHECK(back.seed == 42);
  CHECK(back.n_val == cfg.n_val);

  write_text(tmp / "empty.json", "{}\n");
  SyntheticConfig defaults = load_synth_config(tmp / "empty.json");
  CHECK(defaults.n_train == SyntheticConfig{}.n_train);
  CHECK(defaults.rho == SyntheticConfig{}.rho);

  write_text(tmp / "bad.json", "{\"rho\": 0.1}\n");
  CHECK_THROWS_AS(load_synth_config(tmp / "bad.json"), std::invalid_argument);
}

TEST_CASE("group weight files accept comments and blank lines") {
  TempDir tmp;
  write_text(tmp / "w.txt", "# per-group weights\n0.25  # first group\n\n  0.75\t\n");
  CHECK(load_group_weights(tmp / "w.txt") == std::vector<double>{0.25, 0.75});
  write_text(tmp / "none.txt", "# nothing here\n");
  CHECK_THROWS_AS(load_group_weights(tmp / "none.txt"), std::invalid_argument);
  write_text(tmp / "bad.txt", "0.25\noops\n");
  std::string msg = message_of([&] { load_group_weights(tmp / "bad.txt"); });
  CHECK(msg.find(":2:") != std::string::npos);
}

TEST_CASE("saving features requires features") {
  TempDir tmp;
  Rng rng(97);
  PredictionSet data = oracle::random_set(rng, 10, 2, 1);
  CHECK_THROWS_AS(save_prediction_set(data, tmp / "p.csv", tmp / "f.csv"),
                  std::invalid_argument);
}
