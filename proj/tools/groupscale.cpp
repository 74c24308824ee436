#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "groupscale/adaptive.hpp"
#include "groupscale/coverage.hpp"
#include "groupscale/io.hpp"
#include "groupscale/rng.hpp"
#include "groupscale/scaling.hpp"
#include "groupscale/synth.hpp"
#include "groupscale/types.hpp"

namespace {

using namespace groupscale;
using nlohmann::json;

struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Opts {
  std::uint64_t seed = 0;
  bool logits = false;
  std::string target = "unbiased";
  double grid_base = 1.05;
  int grid_range = 200;
  std::string weights_file, output;

  std::string pred, val, test, val_features, test_features, pool_file, pool_out, csv;
  std::string config_path, out_dir = ".";
  double val_fraction = 1.0, min_average = 0.0, labeled_fraction = 1.0, lr = 0.1;
  int k = 20, passes = 1, slices = 1000, min_cluster = 5, min_partition = 5, epochs = 300;
  bool full_grid = false, select_k_flag = false;
  std::string k_candidates;
  std::string reweight = "none", subsample;
};

std::string f4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string f6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string signed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.4f", v);
  return buf;
}

std::string pad(const std::string& s, int width) {
  std::string out = s;
  while (static_cast<int>(out.size()) < width) out.push_back(' ');
  return out;
}

SearchConfig make_config(const Opts& o) {
  SearchConfig cfg;
  cfg.grid_base = o.grid_base;
  if (o.grid_range < 0) throw std::invalid_argument("--grid-range must be >= 0");
  cfg.exp_min = -o.grid_range;
  cfg.exp_max = o.grid_range;
  cfg.target = target_from_name(o.target);
  cfg.passes = o.passes;
  return cfg;
}

std::optional<std::string> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

PredictionSet load_set(const std::string& pred_path, const std::string& feature_path,
                       bool logits) {
  return load_prediction_set(pred_path, opt_path(feature_path), logits);
}

PredictionSet take_fraction(PredictionSet data, double fraction, std::uint64_t seed) {
  if (fraction == 1.0) return data;
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("--val-fraction must lie in (0, 1]");
  const std::size_t n = data.size();
  auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  m = std::min(std::max<std::size_t>(m, 1), n);
  Rng rng = Rng::substream(seed, 3);
  std::vector<int> perm = rng.permutation(n);
  std::vector<int> idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(idx.begin(), idx.end());
  return data.subset(idx);
}

std::vector<double> maybe_weights(const Opts& o) {
  if (o.weights_file.empty()) return {};
  return load_group_weights(o.weights_file);
}

MetricBundle eval_preds(const PredictionSet& data, const std::vector<int>& preds,
                        const std::vector<double>& weights) {
  return metric_bundle(data, preds, weights.empty() ? nullptr : &weights);
}

json bundle_json(const MetricBundle& b) {
  json j;
  j["per_group"] = b.per_group;
  j["empty_groups"] = b.empty_groups;
  j["worst"] = b.worst_group;
  j["unbiased"] = b.unbiased;
  j["average"] = b.average;
  j["balanced"] = b.balanced;
  if (b.adjusted_average) j["adjusted"] = *b.adjusted_average;
  return j;
}

json scaling_json(const ScalingVector& s) {
  json j;
  j["factors"] = s.factors;
  if (s.exponents) j["exponents"] = *s.exponents;
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << "\n";
}

// shared before/after/gain layout so routed and single-vector runs compare
std::string eval_table(const MetricBundle& before, const MetricBundle& after) {
  std::ostringstream out;
  out << pad("metric", 10) << pad("before", 10) << pad("after", 10) << "gain\n";
  auto row = [&](const char* name, double b, double a) {
    out << pad(name, 10) << pad(f4(b), 10) << pad(f4(a), 10) << signed4(a - b) << "\n";
  };
  row("worst", before.worst_group, after.worst_group);
  row("unbiased", before.unbiased, after.unbiased);
  row("average", before.average, after.average);
  row("balanced", before.balanced, after.balanced);
  if (before.adjusted_average && after.adjusted_average)
    row("adjusted", *before.adjusted_average, *after.adjusted_average);
  return out.str();
}

std::string bundle_table(const PredictionSet& data, const std::vector<int>& preds,
                         const MetricBundle& b) {
  GroupCounts counts = GroupCounts::tally(preds, data.labels(), data.attributes(),
                                          data.num_classes(), data.num_attributes());
  std::ostringstream out;
  out << pad("class", 7) << pad("attribute", 11) << pad("n", 7) << "accuracy\n";
  for (int c = 0; c < data.num_classes(); ++c)
    for (int a = 0; a < data.num_attributes(); ++a) {
      int g = group_index(c, a, data.num_attributes());
      out << pad(std::to_string(c), 7) << pad(std::to_string(a), 11)
          << pad(std::to_string(counts.total[g]), 7)
          << (b.present[g] ? f4(b.per_group[g]) : std::string("-")) << "\n";
    }
  if (b.empty_groups > 0) out << "empty groups: " << b.empty_groups << "\n";
  out << pad("worst", 10) << f4(b.worst_group) << "\n";
  out << pad("unbiased", 10) << f4(b.unbiased) << "\n";
  out << pad("average", 10) << f4(b.average) << "\n";
  out << pad("balanced", 10) << f4(b.balanced) << "\n";
  if (b.adjusted_average) out << pad("adjusted", 10) << f4(*b.adjusted_average) << "\n";
  return out.str();
}

std::string describe(const PredictionSet& d) {
  std::ostringstream out;
  out << "n=" << d.size() << " C=" << d.num_classes() << " A=" << d.num_attributes();
  return out.str();
}

std::string factors_line(const ScalingVector& s) {
  std::ostringstream out;
  out << "scaling factors:";
  for (double f : s.factors) out << ' ' << f4(f);
  if (s.exponents) {
    out << "  (exponents:";
    for (int e : *s.exponents) out << ' ' << e;
    out << ")";
  }
  return out.str();
}

// best feasible pool point under the full-grid tie chain
std::optional<TradeoffPoint> pick_constrained(const TradeoffPool& pool, Target target,
                                              double min_average) {
  const TradeoffPoint* best = nullptr;
  auto l1 = [](const std::vector<int>& e) {
    long long s = 0;
    for (int v : e) s += v < 0 ? -static_cast<long long>(v) : v;
    return s;
  };
  for (const TradeoffPoint& p : pool.points()) {
    if (p.metrics.average < min_average) continue;
    if (!best) {
      best = &p;
      continue;
    }
    double tv = target_value(p.metrics, target), bv = target_value(best->metrics, target);
    if (tv != bv) {
      if (tv > bv) best = &p;
      continue;
    }
    if (p.metrics.average != best->metrics.average) {
      if (p.metrics.average > best->metrics.average) best = &p;
      continue;
    }
    if (p.scaling.exponents && best->scaling.exponents) {
      long long pl = l1(*p.scaling.exponents), bl = l1(*best->scaling.exponents);
      if (pl != bl) {
        if (pl < bl) best = &p;
        continue;
      }
      if (*p.scaling.exponents < *best->scaling.exponents) best = &p;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

TradeoffPool build_pool(const Opts& o) {
  if (!o.pool_file.empty()) return load_pool(o.pool_file);
  if (o.val.empty())
    throw std::invalid_argument("need --val predictions or a saved --pool");
  PredictionSet val =
      take_fraction(load_set(o.val, o.val_features, o.logits), o.val_fraction, o.seed);
  SearchConfig cfg = make_config(o);
  SearchResult res = o.full_grid ? full_grid_search(val, cfg) : greedy_search(val, cfg);
  return std::move(res.pool);
}

void run_metrics(const Opts& o) {
  PredictionSet data = load_set(o.pred, "", o.logits);
  std::vector<double> weights = maybe_weights(o);
  std::vector<int> preds = scaled_predict(data, ScalingVector::identity(data.num_classes()));
  MetricBundle b = eval_preds(data, preds, weights);
  std::cout << describe(data) << "\n" << bundle_table(data, preds, b);
  if (!o.output.empty()) write_json(o.output, bundle_json(b));
}

void run_search(const Opts& o, const CLI::Option* min_avg_opt) {
  PredictionSet val =
      take_fraction(load_set(o.val, o.val_features, o.logits), o.val_fraction, o.seed);
  PredictionSet test = load_set(o.test, o.test_features, o.logits);
  if (test.num_classes() != val.num_classes())
    throw std::invalid_argument("validation and test class counts differ");
  std::vector<double> weights = maybe_weights(o);
  SearchConfig cfg = make_config(o);
  std::optional<double> min_avg;
  if (min_avg_opt->count() > 0) min_avg = o.min_average;

  SearchResult res;
  if (o.full_grid) {
    res = full_grid_search(val, cfg);
    if (min_avg) {
      auto picked = pick_constrained(res.pool, cfg.target, *min_avg);
      if (!picked)
        throw Infeasible("no scaling reaches average accuracy " + f4(*min_avg) +
                         " on the validation split");
      res.scaling = picked->scaling;
      res.metrics = picked->metrics;
    }
  } else {
    res = greedy_search(val, cfg, min_avg);
    if (min_avg && !res.feasible)
      throw Infeasible("no scaling reaches average accuracy " + f4(*min_avg) +
                       " on the validation split");
  }
  if (!o.pool_out.empty()) save_pool(res.pool, o.pool_out);

  ScalingVector identity = ScalingVector::identity(test.num_classes());
  MetricBundle before = eval_preds(test, scaled_predict(test, identity), weights);
  MetricBundle after = eval_preds(test, scaled_predict(test, res.scaling), weights);

  std::cout << "validation: " << describe(val) << "\n"
            << factors_line(res.scaling) << "\n"
            << "validation " << target_name(cfg.target) << ": "
            << f4(target_value(res.metrics, cfg.target)) << "\n"
            << "test: " << describe(test) << "\n"
            << eval_table(before, after);

  if (!o.output.empty()) {
    json j;
    j["scaling"] = scaling_json(res.scaling);
    j["target"] = target_name(cfg.target);
    j["validation"] = bundle_json(res.metrics);
    j["test_before"] = bundle_json(before);
    j["test_after"] = bundle_json(after);
    j["pool_points"] = res.pool.size();
    write_json(o.output, j);
  }
}

void run_coverage(const Opts& o) {
  TradeoffPool pool = build_pool(o);
  if (!o.pool_out.empty()) save_pool(pool, o.pool_out);
  CoverageReport report = robust_coverage(pool, target_from_name(o.target), o.slices);
  std::cout << "pool points: " << pool.size() << "\n"
            << "frontier points: " << report.frontier.size() << "\n"
            << "robust coverage (" << target_name(report.target) << ", D=" << report.slices
            << "): " << f6(report.coverage) << "\n";
  if (!o.output.empty()) save_report(report, o.output);
  if (!o.csv.empty()) export_frontier_csv(report.frontier, o.csv);
}

void run_pareto(const Opts& o) {
  TradeoffPool pool = load_pool(o.pool_file);
  std::vector<FrontierPoint> frontier = pareto_frontier(pool, target_from_name(o.target));
  std::cout << "pool points: " << pool.size() << "\n"
            << "frontier points: " << frontier.size() << "\n"
            << pad("average", 10) << pad(target_name(target_from_name(o.target)), 10)
            << "exponents\n";
  for (const FrontierPoint& p : frontier) {
    std::string exps = "-";
    if (p.scaling.exponents) {
      exps.clear();
      for (std::size_t i = 0; i < p.scaling.exponents->size(); ++i)
        exps += (i ? ";" : "") + std::to_string((*p.scaling.exponents)[i]);
    }
    std::cout << pad(f4(p.average), 10) << pad(f4(p.robust), 10) << exps << "\n";
  }
  if (!o.output.empty()) export_frontier_csv(frontier, o.output);
}

void run_realized(const Opts& o) {
  TradeoffPool pool = build_pool(o);
  PredictionSet test = load_set(o.test, o.test_features, o.logits);
  RealizedCoverage rc = realized_coverage(pool, test, target_from_name(o.target), o.slices);
  std::cout << "pool points: " << pool.size() << "\n"
            << "realized coverage (" << target_name(rc.target) << ", D=" << rc.slices
            << "): " << f6(rc.value) << " over " << rc.feasible_thresholds
            << " feasible thresholds\n";
  if (!o.output.empty()) {
    json j;
    j["target"] = target_name(rc.target);
    j["slices"] = rc.slices;
    j["feasible_thresholds"] = rc.feasible_thresholds;
    j["value"] = rc.value;
    write_json(o.output, j);
  }
}

void run_irs(const Opts& o) {
  PredictionSet val =
      take_fraction(load_set(o.val, o.val_features, o.logits), o.val_fraction, o.seed);
  PredictionSet test = load_set(o.test, o.test_features, o.logits);
  if (test.num_classes() != val.num_classes())
    throw std::invalid_argument("validation and test class counts differ");
  std::vector<double> weights = maybe_weights(o);
  SearchConfig cfg = make_config(o);

  int k = o.k;
  json selection;
  if (o.select_k_flag || !o.k_candidates.empty()) {
    std::vector<int> candidates;
    if (o.k_candidates.empty()) {
      for (int c : {1, 2, 5, 10, 20, 50})
        if (c <= static_cast<int>(val.size())) candidates.push_back(c);
    } else {
      std::stringstream ss(o.k_candidates);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) candidates.push_back(std::stoi(tok));
    }
    SelectKResult sel = select_k(val, candidates, cfg, o.seed);
    k = sel.best_k;
    std::cout << "select-k candidates:";
    for (std::size_t i = 0; i < sel.candidates.size(); ++i)
      std::cout << ' ' << sel.candidates[i] << "=" << f6(sel.coverage[i]);
    std::cout << "\nselected K=" << k << "\n";
    selection["candidates"] = sel.candidates;
    selection["coverage"] = sel.coverage;
    selection["best_k"] = sel.best_k;
  }

  ClusterScalingModel model = irs_fit(val, k, cfg, o.seed, o.min_cluster);
  int fitted = 0;
  for (char f : model.fitted) fitted += f ? 1 : 0;

  ScalingVector identity = ScalingVector::identity(test.num_classes());
  MetricBundle before = eval_preds(test, scaled_predict(test, identity), weights);
  MetricBundle after = eval_preds(test, irs_predict(model, test), weights);

  std::cout << "validation: " << describe(val) << "\n"
            << "clusters: K=" << model.centroids.k() << ", fitted " << fitted
            << ", identity " << (static_cast<int>(model.centroids.k()) - fitted) << "\n"
            << "test: " << describe(test) << "\n"
            << eval_table(before, after);

  if (!o.output.empty()) {
    save_cluster_model(model, o.output);
    if (!selection.empty()) {
      // keep the model file loadable; selection details go next to it
      write_json(o.output + ".selection.json", selection);
    }
  }
}

void run_ars(const Opts& o) {
  PredictionSet val =
      take_fraction(load_set(o.val, o.val_features, o.logits), o.val_fraction, o.seed);
  PredictionSet test = load_set(o.test, o.test_features, o.logits);
  if (test.num_classes() != val.num_classes())
    throw std::invalid_argument("validation and test class counts differ");
  std::vector<double> weights = maybe_weights(o);
  SearchConfig cfg = make_config(o);

  AttributeScalingModel model = ars_fit(val, cfg, o.labeled_fraction, o.seed, o.min_partition);
  int fitted = 0;
  for (char f : model.fitted) fitted += f ? 1 : 0;

  ScalingVector identity = ScalingVector::identity(test.num_classes());
  MetricBundle before = eval_preds(test, scaled_predict(test, identity), weights);
  MetricBundle after = eval_preds(test, ars_predict(model, test), weights);

  std::cout << "validation: " << describe(val) << "\n"
            << "attribute estimator: labeled " << model.estimator.labeled_count
            << ", held-in accuracy " << f4(model.estimator.train_accuracy) << "\n"
            << "partitions: " << model.scalings.size() << ", fitted " << fitted << "\n"
            << "test: " << describe(test) << "\n"
            << eval_table(before, after);

  if (!o.output.empty()) save_attribute_model(model, o.output);
}

void run_synth(const Opts& o, const CLI::Option* seed_opt) {
  SyntheticConfig cfg;
  if (!o.config_path.empty()) cfg = load_synth_config(o.config_path);
  if (seed_opt->count() > 0) cfg.seed = o.seed;
  cfg.validate();
  if (o.reweight != "none" && !o.subsample.empty())
    throw std::invalid_argument("--reweight and --subsample are mutually exclusive");

  SyntheticData data = generate(cfg);

  std::string scheme = o.subsample.empty() ? (o.reweight == "none" ? "erm" : o.reweight)
                                           : o.subsample;
  TrainOptions topts;
  topts.epochs = o.epochs;
  topts.lr = o.lr;
  topts.seed = cfg.seed;

  Matrix train_x = data.train.features;
  std::vector<int> train_y = data.train.labels;
  std::vector<double> sample_weights;
  if (o.subsample == "suby" || o.subsample == "subg") {
    auto mode = o.subsample == "suby" ? SubsampleMode::Class : SubsampleMode::Group;
    std::vector<int> keep =
        subsample_balanced(data.train.labels, data.train.attributes, mode, cfg.seed);
    train_x = data.train.features.take_rows(keep);
    train_y.clear();
    for (int i : keep) train_y.push_back(data.train.labels[i]);
  } else if (o.reweight == "cr") {
    sample_weights = cr_weights(data.train.labels);
  } else if (o.reweight == "gr") {
    sample_weights = gr_weights(data.train.labels, data.train.attributes);
  }
  LinearModel model = train_linear(train_x, train_y, cfg.num_classes,
                                   sample_weights.empty() ? nullptr : &sample_weights, topts);

  std::filesystem::create_directories(o.out_dir);
  auto path = [&](const char* name) { return (std::filesystem::path(o.out_dir) / name).string(); };
  std::vector<std::string> files;
  auto emit = [&](const Dataset& split, const char* pred_name, const char* feat_name) {
    PredictionSet ps = to_prediction_set(model, split, cfg.num_attributes);
    save_prediction_set(ps, path(pred_name), path(feat_name));
    files.push_back(path(pred_name));
    files.push_back(path(feat_name));
  };
  emit(data.train, "train_predictions.csv", "train_features.csv");
  emit(data.val, "val_predictions.csv", "val_features.csv");
  emit(data.test, "test_predictions.csv", "test_features.csv");
  save_synth_config(cfg, path("synth_config.json"));
  files.push_back(path("synth_config.json"));

  std::vector<double> props = group_proportions(data.train.labels, data.train.attributes,
                                                cfg.num_classes, cfg.num_attributes);
  PredictionSet test_ps = to_prediction_set(model, data.test, cfg.num_attributes);
  std::vector<int> preds =
      scaled_predict(test_ps, ScalingVector::identity(cfg.num_classes));
  MetricBundle b = eval_preds(test_ps, preds, {});

  std::cout << "generated: train=" << cfg.n_train << " val=" << cfg.n_val
            << " test=" << cfg.n_test << " (C=" << cfg.num_classes
            << " A=" << cfg.num_attributes << " d=" << cfg.feature_dim << ", seed="
            << cfg.seed << ")\n";
  std::cout << "train group proportions:";
  for (double p : props) std::cout << ' ' << f4(p);
  std::cout << "\ntrained linear model: scheme=" << scheme << " epochs=" << topts.epochs
            << " final loss " << f6(model.loss_log.back()) << "\n";
  std::cout << "wrote " << files.size() << " files under " << o.out_dir << "\n";
  std::cout << "test metrics (unscaled):\n" << bundle_table(test_ps, preds, b);

  if (!o.output.empty()) {
    json j;
    j["scheme"] = scheme;
    j["epochs"] = topts.epochs;
    j["final_loss"] = model.loss_log.back();
    j["files"] = files;
    j["train_group_proportions"] = props;
    j["test_metrics"] = bundle_json(b);
    write_json(o.output, j);
  }
}

void add_seed(CLI::App* cmd, Opts& o) {
  cmd->add_option("--seed", o.seed, "Seed for every random choice in this command")
      ->capture_default_str();
}

void add_logits(CLI::App* cmd, Opts& o) {
  cmd->add_flag("--logits", o.logits, "Treat score columns as raw logits (softmax on load)");
}

void add_target(CLI::App* cmd, Opts& o) {
  cmd->add_option("--target", o.target, "Metric the search optimizes / coverage uses")
      ->check(CLI::IsMember({"worst", "worst_group", "unbiased", "average", "balanced"}))
      ->capture_default_str();
}

void add_grid(CLI::App* cmd, Opts& o) {
  cmd->add_option("--grid-base", o.grid_base, "Geometric grid base")->capture_default_str();
  cmd->add_option("--grid-range", o.grid_range,
                  "Grid exponent range N, candidates base^n for n in [-N, N]")
      ->capture_default_str();
}

void add_weights(CLI::App* cmd, Opts& o) {
  cmd->add_option("--weights-file", o.weights_file,
                  "Group weights (one per line) for the adjusted average row")
      ->check(CLI::ExistingFile);
}

void add_output(CLI::App* cmd, Opts& o, const char* what) {
  cmd->add_option("--output", o.output, what);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-hoc group-robustness toolkit: class-specific scaling, trade-off"
               " coverage, and routed (cluster / attribute) scaling"};
  app.require_subcommand(1);
  Opts o;

  auto* metrics = app.add_subcommand("metrics", "Per-group accuracy table for a prediction CSV");
  metrics->add_option("predictions", o.pred, "Prediction CSV")->required()
      ->check(CLI::ExistingFile);
  add_logits(metrics, o);
  add_weights(metrics, o);
  add_output(metrics, o, "Write the metric bundle as JSON");
  metrics->callback([&]() { run_metrics(o); });

  auto* search = app.add_subcommand(
      "search", "Fit a scaling vector on validation, report before/after on test");
  search->add_option("--val", o.val, "Validation prediction CSV")->required()
      ->check(CLI::ExistingFile);
  search->add_option("--test", o.test, "Test prediction CSV")->required()
      ->check(CLI::ExistingFile);
  search->add_option("--passes", o.passes, "Greedy sweep passes")->capture_default_str();
  search->add_flag("--full-grid", o.full_grid, "Exhaustive grid instead of greedy sweeps");
  auto* min_avg_opt =
      search->add_option("--min-average", o.min_average,
                         "Require validation average accuracy >= this (exit 2 if impossible)");
  search->add_option("--val-fraction", o.val_fraction,
                     "Use a seeded fraction of the validation rows")
      ->capture_default_str();
  search->add_option("--pool-out", o.pool_out, "Save the evaluated trade-off pool as JSON");
  add_seed(search, o);
  add_logits(search, o);
  add_target(search, o);
  add_grid(search, o);
  add_weights(search, o);
  add_output(search, o, "Write scaling + before/after metrics as JSON");
  search->callback([&]() { run_search(o, min_avg_opt); });

  auto* coverage = app.add_subcommand(
      "coverage", "Robust coverage and Pareto frontier of a trade-off pool");
  coverage->add_option("--val", o.val, "Validation prediction CSV (pool built by search)")
      ->check(CLI::ExistingFile);
  coverage->add_option("--pool", o.pool_file, "Saved pool JSON (skips the search)")
      ->check(CLI::ExistingFile);
  coverage->add_flag("--full-grid", o.full_grid, "Exhaustive grid when building the pool");
  coverage->add_option("--slices", o.slices, "Threshold count D")->capture_default_str();
  coverage->add_option("--val-fraction", o.val_fraction,
                       "Use a seeded fraction of the validation rows")
      ->capture_default_str();
  coverage->add_option("--pool-out", o.pool_out, "Save the evaluated pool as JSON");
  coverage->add_option("--csv", o.csv, "Write the frontier as plot-ready CSV");
  add_seed(coverage, o);
  add_logits(coverage, o);
  add_target(coverage, o);
  add_grid(coverage, o);
  add_output(coverage, o, "Write the coverage report as JSON");
  coverage->callback([&]() { run_coverage(o); });

  auto* pareto = app.add_subcommand("pareto", "Extract the Pareto frontier from a saved pool");
  pareto->add_option("--pool", o.pool_file, "Saved pool JSON")->required()
      ->check(CLI::ExistingFile);
  add_target(pareto, o);
  add_output(pareto, o, "Write the frontier as plot-ready CSV");
  pareto->callback([&]() { run_pareto(o); });

  auto* realized = app.add_subcommand(
      "realized", "Replay validation-chosen scalings on a test split");
  realized->add_option("--val", o.val, "Validation prediction CSV (pool built by search)")
      ->check(CLI::ExistingFile);
  realized->add_option("--pool", o.pool_file, "Saved validation pool JSON")
      ->check(CLI::ExistingFile);
  realized->add_option("--test", o.test, "Test prediction CSV")->required()
      ->check(CLI::ExistingFile);
  realized->add_flag("--full-grid", o.full_grid, "Exhaustive grid when building the pool");
  realized->add_option("--slices", o.slices, "Threshold count D")->capture_default_str();
  realized->add_option("--val-fraction", o.val_fraction,
                       "Use a seeded fraction of the validation rows")
      ->capture_default_str();
  add_seed(realized, o);
  add_logits(realized, o);
  add_target(realized, o);
  add_grid(realized, o);
  add_output(realized, o, "Write the realized coverage as JSON");
  realized->callback([&]() { run_realized(o); });

  auto* irs = app.add_subcommand(
      "irs", "Cluster-routed scaling: fit per-cluster vectors, route test by centroid");
  irs->add_option("--val", o.val, "Validation prediction CSV")->required()
      ->check(CLI::ExistingFile);
  irs->add_option("--val-features", o.val_features, "Validation feature CSV")->required()
      ->check(CLI::ExistingFile);
  irs->add_option("--test", o.test, "Test prediction CSV")->required()
      ->check(CLI::ExistingFile);
  irs->add_option("--test-features", o.test_features, "Test feature CSV")->required()
      ->check(CLI::ExistingFile);
  irs->add_option("--k", o.k, "Cluster count")->capture_default_str();
  irs->add_flag("--select-k", o.select_k_flag,
                "Pick K by validation robust coverage over 1,2,5,10,20,50");
  irs->add_option("--k-candidates", o.k_candidates,
                  "Comma-separated K candidates for --select-k");
  irs->add_option("--min-cluster-size", o.min_cluster,
                  "Clusters below this keep identity scaling")
      ->capture_default_str();
  irs->add_option("--val-fraction", o.val_fraction,
                  "Use a seeded fraction of the validation rows")
      ->capture_default_str();
  add_seed(irs, o);
  add_logits(irs, o);
  add_target(irs, o);
  add_grid(irs, o);
  add_weights(irs, o);
  add_output(irs, o, "Write the fitted cluster model as JSON");
  irs->callback([&]() { run_irs(o); });

  auto* ars = app.add_subcommand(
      "ars", "Attribute-routed scaling with a learned attribute estimator");
  ars->add_option("--val", o.val, "Validation prediction CSV")->required()
      ->check(CLI::ExistingFile);
  ars->add_option("--val-features", o.val_features, "Validation feature CSV")->required()
      ->check(CLI::ExistingFile);
  ars->add_option("--test", o.test, "Test prediction CSV")->required()
      ->check(CLI::ExistingFile);
  ars->add_option("--test-features", o.test_features, "Test feature CSV")->required()
      ->check(CLI::ExistingFile);
  ars->add_option("--labeled-fraction", o.labeled_fraction,
                  "Fraction of validation rows with attribute labels for the estimator")
      ->capture_default_str();
  ars->add_option("--min-partition-size", o.min_partition,
                  "Partitions below this keep identity scaling")
      ->capture_default_str();
  ars->add_option("--val-fraction", o.val_fraction,
                  "Use a seeded fraction of the validation rows")
      ->capture_default_str();
  add_seed(ars, o);
  add_logits(ars, o);
  add_target(ars, o);
  add_grid(ars, o);
  add_weights(ars, o);
  add_output(ars, o, "Write the fitted attribute model as JSON");
  ars->callback([&]() { run_ars(o); });

  auto* synth = app.add_subcommand(
      "synth", "Generate a spurious-correlation dataset and train a linear model");
  synth->add_option("--config", o.config_path, "Generator config JSON (defaults if omitted)")
      ->check(CLI::ExistingFile);
  synth->add_option("--out-dir", o.out_dir, "Directory for the emitted CSVs")
      ->capture_default_str();
  synth->add_option("--reweight", o.reweight, "Loss reweighting: none, cr (class), gr (group)")
      ->check(CLI::IsMember({"none", "cr", "gr"}))
      ->capture_default_str();
  synth->add_option("--subsample", o.subsample,
                    "Balanced subsampling: suby (per class), subg (per group)")
      ->check(CLI::IsMember({"suby", "subg"}));
  synth->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  synth->add_option("--lr", o.lr, "Initial learning rate")->capture_default_str();
  auto* synth_seed = synth->add_option("--seed", o.seed, "Overrides the config seed");
  add_output(synth, o, "Write a JSON run summary here");
  synth->callback([&]() { run_synth(o, synth_seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
