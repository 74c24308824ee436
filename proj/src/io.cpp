#include "groupscale/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace groupscale {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (text.empty()) throw std::runtime_error("empty file: " + path);
  return text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::size_t len = end - pos;
    if (len > 0 && text[pos + len - 1] == '\r') --len;
    lines.push_back(text.substr(pos, len));
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    std::size_t end = line.find(',', pos);
    if (end == std::string::npos) {
      cells.push_back(line.substr(pos));
      break;
    }
    cells.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  return cells;
}

// locale-independent number formatting/parsing
std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v, std::chars_format::general);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument(path + ":" + std::to_string(line) + ": malformed number '" +
                                cell + "'");
  return v;
}

int parse_nonneg_int(const std::string& cell, const std::string& path, std::size_t line) {
  int v = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || v < 0)
    throw std::invalid_argument(path + ":" + std::to_string(line) +
                                ": expected a nonnegative integer, got '" + cell + "'");
  return v;
}

json scaling_to_json(const ScalingVector& s) {
  json j;
  j["factors"] = s.factors;
  if (s.exponents) j["exponents"] = *s.exponents;
  return j;
}

ScalingVector scaling_from_json(const json& j) {
  ScalingVector s;
  s.factors = j.at("factors").get<std::vector<double>>();
  if (j.contains("exponents")) s.exponents = j.at("exponents").get<std::vector<int>>();
  return s;
}

json bundle_to_json(const MetricBundle& b) {
  json j;
  j["per_group"] = b.per_group;
  j["present"] = std::vector<int>(b.present.begin(), b.present.end());
  j["empty_groups"] = b.empty_groups;
  j["worst"] = b.worst_group;
  j["unbiased"] = b.unbiased;
  j["average"] = b.average;
  j["balanced"] = b.balanced;
  if (b.adjusted_average)
    j["adjusted"] = *b.adjusted_average;
  else
    j["adjusted"] = nullptr;
  return j;
}

MetricBundle bundle_from_json(const json& j) {
  MetricBundle b;
  b.per_group = j.at("per_group").get<std::vector<double>>();
  auto present = j.at("present").get<std::vector<int>>();
  b.present.assign(present.begin(), present.end());
  b.empty_groups = j.at("empty_groups").get<int>();
  b.worst_group = j.at("worst").get<double>();
  b.unbiased = j.at("unbiased").get<double>();
  b.average = j.at("average").get<double>();
  b.balanced = j.at("balanced").get<double>();
  if (!j.at("adjusted").is_null()) b.adjusted_average = j.at("adjusted").get<double>();
  return b;
}

const char* source_name(PointSource s) {
  switch (s) {
    case PointSource::GridSweep: return "grid";
    case PointSource::GreedyTrajectory: return "greedy";
    case PointSource::Explicit: return "explicit";
  }
  return "explicit";
}

PointSource source_from_name(const std::string& s) {
  if (s == "grid") return PointSource::GridSweep;
  if (s == "greedy") return PointSource::GreedyTrajectory;
  if (s == "explicit") return PointSource::Explicit;
  throw std::invalid_argument("unknown point source: " + s);
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a nested array");
  Matrix m(j.size(), j.at(0).size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& row = j.at(i);
    if (row.size() != m.cols()) throw std::invalid_argument("ragged nested array");
    for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) = row.at(c).get<double>();
  }
  return m;
}

json config_to_json(const SearchConfig& c) {
  json j;
  j["grid_base"] = c.grid_base;
  j["exp_min"] = c.exp_min;
  j["exp_max"] = c.exp_max;
  j["target"] = target_name(c.target);
  j["class_order"] = c.class_order;
  j["passes"] = c.passes;
  return j;
}

SearchConfig config_from_json(const json& j) {
  SearchConfig c;
  c.grid_base = j.at("grid_base").get<double>();
  c.exp_min = j.at("exp_min").get<int>();
  c.exp_max = j.at("exp_max").get<int>();
  c.target = target_from_name(j.at("target").get<std::string>());
  c.class_order = j.at("class_order").get<std::vector<int>>();
  c.passes = j.at("passes").get<int>();
  return c;
}

json linear_to_json(const LinearModel& m) {
  json j;
  j["weights"] = matrix_to_json(m.weights);
  j["bias"] = m.bias;
  j["loss_log"] = m.loss_log;
  return j;
}

LinearModel linear_from_json(const json& j) {
  LinearModel m;
  m.weights = matrix_from_json(j.at("weights"));
  m.bias = j.at("bias").get<std::vector<double>>();
  m.loss_log = j.at("loss_log").get<std::vector<double>>();
  return m;
}

json parse_json_file(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("invalid JSON in " + path);
  return j;
}

}  // namespace

PredictionSet load_prediction_set(const std::string& prediction_path,
                                  const std::optional<std::string>& feature_path,
                                  bool logits) {
  std::vector<std::string> lines = split_lines(read_file(prediction_path));
  if (lines.size() < 2)
    throw std::invalid_argument(prediction_path + ": no data rows after the header");
  std::vector<std::string> header = split_csv(lines[0]);
  if (header.size() < 4 || header[0] != "label" || header[1] != "attribute")
    throw std::invalid_argument(prediction_path + ": header must be label,attribute,score_*");
  const std::size_t C = header.size() - 2;
  for (std::size_t c = 0; c < C; ++c)
    if (header[2 + c] != "score_" + std::to_string(c))
      throw std::invalid_argument(prediction_path + ": bad score column name '" +
                                  header[2 + c] + "'");

  const std::size_t n = lines.size() - 1;
  Matrix scores(n, C);
  std::vector<int> labels(n), attributes(n);
  int max_attr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t line_no = i + 2;
    std::vector<std::string> cells = split_csv(lines[i + 1]);
    if (cells.size() != header.size())
      throw std::invalid_argument(prediction_path + ":" + std::to_string(line_no) +
                                  ": expected " + std::to_string(header.size()) +
                                  " columns, got " + std::to_string(cells.size()));
    labels[i] = parse_nonneg_int(cells[0], prediction_path, line_no);
    attributes[i] = parse_nonneg_int(cells[1], prediction_path, line_no);
    max_attr = std::max(max_attr, attributes[i]);
    for (std::size_t c = 0; c < C; ++c)
      scores(i, c) = parse_double(cells[2 + c], prediction_path, line_no);
    double* row = scores.row(i);
    if (logits) {
      double mx = row[0];
      for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
      double sum = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        row[c] = std::exp(row[c] - mx);
        sum += row[c];
      }
      for (std::size_t c = 0; c < C; ++c) row[c] /= sum;
    } else {
      double sum = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        if (row[c] < 0.0)
          throw std::invalid_argument(prediction_path + ":" + std::to_string(line_no) +
                                      ": negative score (pass --logits for raw logits)");
        sum += row[c];
      }
      if (std::fabs(sum - 1.0) > 1e-6)
        throw std::invalid_argument(prediction_path + ":" + std::to_string(line_no) +
                                    ": scores sum to " + fmt(sum) +
                                    ", outside the simplex tolerance of 1e-6");
      // renormalize only when needed so an exact save/load round trip
      // reproduces the same bits
      if (std::fabs(sum - 1.0) > 1e-9)
        for (std::size_t c = 0; c < C; ++c) row[c] /= sum;
    }
  }

  std::optional<Matrix> features;
  if (feature_path) {
    features = load_features(*feature_path);
    if (features->rows() != n)
      throw std::invalid_argument(*feature_path + ": " + std::to_string(features->rows()) +
                                  " feature rows vs " + std::to_string(n) +
                                  " prediction rows");
  }
  return PredictionSet(std::move(scores), std::move(labels), std::move(attributes),
                       max_attr + 1, std::move(features));
}

void save_prediction_set(const PredictionSet& data, const std::string& prediction_path,
                         const std::optional<std::string>& feature_path) {
  std::ostringstream out;
  out << "label,attribute";
  for (int c = 0; c < data.num_classes(); ++c) out << ",score_" << c;
  out << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels()[i] << ',' << data.attributes()[i];
    for (int c = 0; c < data.num_classes(); ++c) out << ',' << fmt(data.scores()(i, c));
    out << "\n";
  }
  write_file(prediction_path, out.str());
  if (feature_path) save_features(data.features(), *feature_path);
}

Matrix load_features(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.size() < 2) throw std::invalid_argument(path + ": no data rows after the header");
  std::vector<std::string> header = split_csv(lines[0]);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] != "f_" + std::to_string(j))
      throw std::invalid_argument(path + ": bad feature column name '" + header[j] + "'");
  Matrix m(lines.size() - 1, header.size());
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    std::size_t line_no = i + 2;
    std::vector<std::string> cells = split_csv(lines[i + 1]);
    if (cells.size() != header.size())
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " columns, got " +
                                  std::to_string(cells.size()));
    for (std::size_t j = 0; j < header.size(); ++j) {
      m(i, j) = parse_double(cells[j], path, line_no);
      if (!std::isfinite(m(i, j)))
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": non-finite feature value");
    }
  }
  return m;
}

void save_features(const Matrix& features, const std::string& path) {
  std::ostringstream out;
  for (std::size_t j = 0; j < features.cols(); ++j) out << (j ? "," : "") << "f_" << j;
  out << "\n";
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j)
      out << (j ? "," : "") << fmt(features(i, j));
    out << "\n";
  }
  write_file(path, out.str());
}

void save_pool(const TradeoffPool& pool, const std::string& path) {
  json points = json::array();
  for (const TradeoffPoint& p : pool.points()) {
    json j;
    j["scaling"] = scaling_to_json(p.scaling);
    j["metrics"] = bundle_to_json(p.metrics);
    j["source"] = source_name(p.source);
    points.push_back(std::move(j));
  }
  json doc;
  doc["points"] = std::move(points);
  write_file(path, doc.dump(1) + "\n");
}

TradeoffPool load_pool(const std::string& path) {
  json doc = parse_json_file(path);
  TradeoffPool pool;
  for (const json& j : doc.at("points"))
    pool.add({scaling_from_json(j.at("scaling")), bundle_from_json(j.at("metrics")),
              source_from_name(j.at("source").get<std::string>())});
  return pool;
}

void save_report(const CoverageReport& report, const std::string& path) {
  json j;
  j["target"] = target_name(report.target);
  j["slices"] = report.slices;
  j["coverage"] = report.coverage;
  json frontier = json::array();
  for (const FrontierPoint& p : report.frontier) {
    json e;
    e["average"] = p.average;
    e["robust"] = p.robust;
    e["scaling"] = scaling_to_json(p.scaling);
    frontier.push_back(std::move(e));
  }
  j["frontier"] = std::move(frontier);
  write_file(path, j.dump(1) + "\n");
}

CoverageReport load_report(const std::string& path) {
  json j = parse_json_file(path);
  CoverageReport report;
  report.target = target_from_name(j.at("target").get<std::string>());
  report.slices = j.at("slices").get<int>();
  report.coverage = j.at("coverage").get<double>();
  for (const json& e : j.at("frontier"))
    report.frontier.push_back({e.at("average").get<double>(), e.at("robust").get<double>(),
                               scaling_from_json(e.at("scaling"))});
  return report;
}

void export_frontier_csv(const std::vector<FrontierPoint>& frontier, const std::string& path) {
  std::ostringstream out;
  out << "average_accuracy,robust_accuracy,scaling_exponents\n";
  for (const FrontierPoint& p : frontier) {
    out << fmt(p.average) << ',' << fmt(p.robust) << ',';
    if (p.scaling.exponents) {
      const std::vector<int>& e = *p.scaling.exponents;
      for (std::size_t i = 0; i < e.size(); ++i) out << (i ? ";" : "") << e[i];
    } else {
      for (std::size_t i = 0; i < p.scaling.factors.size(); ++i)
        out << (i ? ";" : "") << fmt(p.scaling.factors[i]);
    }
    out << "\n";
  }
  write_file(path, out.str());
}

namespace {

json centroids_to_json(const Centroids& c) {
  json j;
  j["points"] = matrix_to_json(c.points);
  j["inertia"] = c.inertia;
  j["assignment"] = c.assignment;
  j["inertia_history"] = c.inertia_history;
  j["iterations"] = c.iterations;
  j["shift"] = c.shift;
  j["scale"] = c.scale;
  return j;
}

Centroids centroids_from_json(const json& j) {
  Centroids c;
  c.points = matrix_from_json(j.at("points"));
  c.inertia = j.at("inertia").get<double>();
  c.assignment = j.at("assignment").get<std::vector<int>>();
  c.inertia_history = j.at("inertia_history").get<std::vector<double>>();
  c.iterations = j.at("iterations").get<int>();
  c.shift = j.at("shift").get<std::vector<double>>();
  c.scale = j.at("scale").get<std::vector<double>>();
  return c;
}

}  // namespace

void save_cluster_model(const ClusterScalingModel& model, const std::string& path) {
  json j;
  j["kind"] = "cluster_scaling";
  j["centroids"] = centroids_to_json(model.centroids);
  json scalings = json::array();
  for (const ScalingVector& s : model.scalings) scalings.push_back(scaling_to_json(s));
  j["scalings"] = std::move(scalings);
  j["fitted"] = std::vector<int>(model.fitted.begin(), model.fitted.end());
  j["config"] = config_to_json(model.config);
  write_file(path, j.dump(1) + "\n");
}

ClusterScalingModel load_cluster_model(const std::string& path) {
  json j = parse_json_file(path);
  if (j.value("kind", "") != "cluster_scaling")
    throw std::invalid_argument(path + ": not a cluster scaling model");
  ClusterScalingModel model;
  model.centroids = centroids_from_json(j.at("centroids"));
  for (const json& s : j.at("scalings")) model.scalings.push_back(scaling_from_json(s));
  auto fitted = j.at("fitted").get<std::vector<int>>();
  model.fitted.assign(fitted.begin(), fitted.end());
  model.config = config_from_json(j.at("config"));
  return model;
}

void save_attribute_model(const AttributeScalingModel& model, const std::string& path) {
  json j;
  j["kind"] = "attribute_scaling";
  json est;
  est["model"] = linear_to_json(model.estimator.model);
  est["num_attributes"] = model.estimator.num_attributes;
  est["epochs"] = model.estimator.epochs;
  est["lr"] = model.estimator.lr;
  est["seed"] = model.estimator.seed;
  est["labeled_count"] = model.estimator.labeled_count;
  est["train_accuracy"] = model.estimator.train_accuracy;
  j["estimator"] = std::move(est);
  json scalings = json::array();
  for (const ScalingVector& s : model.scalings) scalings.push_back(scaling_to_json(s));
  j["scalings"] = std::move(scalings);
  j["fitted"] = std::vector<int>(model.fitted.begin(), model.fitted.end());
  j["config"] = config_to_json(model.config);
  write_file(path, j.dump(1) + "\n");
}

AttributeScalingModel load_attribute_model(const std::string& path) {
  json j = parse_json_file(path);
  if (j.value("kind", "") != "attribute_scaling")
    throw std::invalid_argument(path + ": not an attribute scaling model");
  AttributeScalingModel model;
  const json& est = j.at("estimator");
  model.estimator.model = linear_from_json(est.at("model"));
  model.estimator.num_attributes = est.at("num_attributes").get<int>();
  model.estimator.epochs = est.at("epochs").get<int>();
  model.estimator.lr = est.at("lr").get<double>();
  model.estimator.seed = est.at("seed").get<std::uint64_t>();
  model.estimator.labeled_count = est.at("labeled_count").get<int>();
  model.estimator.train_accuracy = est.at("train_accuracy").get<double>();
  for (const json& s : j.at("scalings")) model.scalings.push_back(scaling_from_json(s));
  auto fitted = j.at("fitted").get<std::vector<int>>();
  model.fitted.assign(fitted.begin(), fitted.end());
  model.config = config_from_json(j.at("config"));
  return model;
}

void save_centroids_csv(const Centroids& centroids, const std::string& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < centroids.points.rows(); ++i) {
    for (std::size_t j = 0; j < centroids.points.cols(); ++j)
      out << (j ? "," : "") << fmt(centroids.points(i, j));
    out << "\n";
  }
  write_file(path, out.str());
}

SyntheticConfig load_synth_config(const std::string& path) {
  json j = parse_json_file(path);
  SyntheticConfig c;
  c.n_train = j.value("n_train", c.n_train);
  c.n_val = j.value("n_val", c.n_val);
  c.n_test = j.value("n_test", c.n_test);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.num_attributes = j.value("num_attributes", c.num_attributes);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.rho = j.value("rho", c.rho);
  c.class_separation = j.value("class_separation", c.class_separation);
  c.attribute_leakage = j.value("attribute_leakage", c.attribute_leakage);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

void save_synth_config(const SyntheticConfig& c, const std::string& path) {
  json j;
  j["n_train"] = c.n_train;
  j["n_val"] = c.n_val;
  j["n_test"] = c.n_test;
  j["num_classes"] = c.num_classes;
  j["num_attributes"] = c.num_attributes;
  j["feature_dim"] = c.feature_dim;
  j["rho"] = c.rho;
  j["class_separation"] = c.class_separation;
  j["attribute_leakage"] = c.attribute_leakage;
  j["noise_sigma"] = c.noise_sigma;
  j["seed"] = c.seed;
  write_file(path, j.dump(1) + "\n");
}

std::vector<double> load_group_weights(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  std::vector<double> weights;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string cell = lines[i];
    std::size_t hash = cell.find('#');
    if (hash != std::string::npos) cell = cell.substr(0, hash);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.pop_back();
    std::size_t start = cell.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    weights.push_back(parse_double(cell.substr(start), path, i + 1));
  }
  if (weights.empty()) throw std::invalid_argument(path + ": no weights found");
  return weights;
}

}  // namespace groupscale
