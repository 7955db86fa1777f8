/*
 * Copyright 2026 The Cheem Explorer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cheem/bundle.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cheem/error.hpp"
#include "cheem/statistics.hpp"
#include "cheem/tour.hpp"

namespace cheem {
namespace {

using nlohmann::json;

constexpr double kUnitNormTolerance = 1e-9;
constexpr double kZeroAttribution = 1e-12;

// ---------------------------------------------------------------------------
// Pipeline

template <typename Fn>
auto run_stage(std::string_view stage, const PipelineOptions& options,
               std::vector<std::pair<std::string, double>>& timings, Fn&& fn) {
  if (options.progress) options.progress(stage, std::nullopt);
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;
    timings.emplace_back(std::string(stage), elapsed.count());
    if (options.progress) options.progress(stage, elapsed.count());
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto result = fn();
      finish();
      return result;
    }
  } catch (const StageError&) {
    throw;
  } catch (const ValidationError& e) {
    throw StageError(std::string(stage), e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON helpers

[[noreturn]] void invariant(const std::string& message) {
  throw BundleError(BundleError::Kind::kInvariant, message);
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t cols, const char* what) {
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& row = j.at(i);
    if (row.size() != cols) {
      invariant(std::string(what) + " row " + std::to_string(i) + " has " +
                std::to_string(row.size()) + " entries, expected " +
                std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          row.at(c).get<double>();
    }
  }
  return m;
}

json flags_to_json(const std::vector<char>& flags) {
  json out = json::array();
  for (char f : flags) out.push_back(f != 0);
  return out;
}

std::vector<char> flags_from_json(const json& j) {
  std::vector<char> out;
  for (const json& f : j) out.push_back(f.get<bool>() ? 1 : 0);
  return out;
}

json embedding_to_json(const Embedding2D& e) {
  return {{"coordinates", matrix_to_json(e.coordinates)},
          {"loadings", matrix_to_json(e.loadings)},
          {"variance_explained",
           {e.variance_explained[0], e.variance_explained[1]}},
          {"rank_deficient", e.rank_deficient}};
}

Embedding2D embedding_from_json(const json& j) {
  Embedding2D e;
  e.coordinates = matrix_from_json(j.at("coordinates"), 2, "coordinates");
  e.loadings = matrix_from_json(j.at("loadings"), 2, "loadings");
  const json& ve = j.at("variance_explained");
  if (ve.size() != 2) invariant("variance_explained needs two entries");
  e.variance_explained = {ve.at(0).get<double>(), ve.at(1).get<double>()};
  e.rank_deficient = j.at("rank_deficient").get<bool>();
  return e;
}

json tree_to_json(const Tree& t) {
  json feature = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), cover = json::array();
  for (const TreeNode& n : t.nodes()) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    cover.push_back(n.cover);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"cover", cover},         {"value", t.values()}};
}

Tree tree_from_json(const json& j, std::size_t value_dim) {
  const json& feature = j.at("feature");
  const json& threshold = j.at("threshold");
  const json& left = j.at("left");
  const json& right = j.at("right");
  const json& cover = j.at("cover");
  const std::size_t count = feature.size();
  if (threshold.size() != count || left.size() != count ||
      right.size() != count || cover.size() != count) {
    invariant("tree node arrays differ in length");
  }
  std::vector<TreeNode> nodes(count);
  for (std::size_t i = 0; i < count; ++i) {
    nodes[i].feature = feature.at(i).get<std::int32_t>();
    nodes[i].threshold = threshold.at(i).get<double>();
    nodes[i].left = left.at(i).get<std::int32_t>();
    nodes[i].right = right.at(i).get<std::int32_t>();
    nodes[i].cover = cover.at(i).get<std::int64_t>();
  }
  try {
    return Tree(std::move(nodes), j.at("value").get<std::vector<double>>(),
                value_dim);
  } catch (const ValidationError& e) {
    invariant(std::string("tree: ") + e.what());
  }
}

json to_json(const CheemBundle& b) {
  const Dataset& ds = b.dataset;
  const bool classification = b.task() == Task::kClassification;

  json dataset = {{"name", ds.name},
                  {"feature_names", ds.feature_names},
                  {"row_labels", ds.row_labels},
                  {"x", matrix_to_json(ds.x)},
                  {"means", b.scaled.means},
                  {"sds", b.scaled.sds},
                  {"scaled", matrix_to_json(b.scaled.values)}};
  if (classification) {
    dataset["observed"] = ds.categorical().observed;
    dataset["levels"] = ds.categorical().levels;
  } else {
    dataset["observed"] = ds.quantitative().observed;
  }

  const ModelSummary& m = b.model;
  json trees = json::array();
  for (const Tree& t : m.forest.trees) trees.push_back(tree_to_json(t));
  json model = {
      {"hyper",
       {{"n_trees", m.hyper.n_trees},
        {"mtry", m.hyper.mtry},
        {"min_node", m.hyper.min_node}}},
      {"seed", m.seed},
      {"forest",
       {{"num_features", m.forest.num_features},
        {"class_levels", m.forest.class_levels},
        {"seed", m.forest.seed},
        {"trees", std::move(trees)}}}};
  if (classification) {
    model["predicted"] = m.predicted_class;
    model["probabilities"] = matrix_to_json(m.probabilities);
    model["misclassified"] = flags_to_json(m.misclassified);
  } else {
    model["predicted"] = m.predicted_value;
    model["residuals"] = m.residuals;
  }

  const AttributionSummary& a = b.attribution;
  json attribution = {{"raw", matrix_to_json(a.raw.values)},
                      {"normalized", matrix_to_json(a.normalized)},
                      {"zero_attribution", flags_to_json(a.zero_attribution)},
                      {"baseline", a.raw.baselines}};
  if (classification) {
    attribution["explained_class"] = a.raw.explained_class;
    attribution["target"] = "probability of the predicted class";
  } else {
    attribution["explained_class"] = nullptr;
    attribution["target"] = "predicted value";
  }

  json statistics = {{"log_maha_data", b.statistics.log_maha_data},
                     {"log_maha_attr", b.statistics.log_maha_attr}};
  if (classification) {
    statistics["predicted_class"] = b.statistics.predicted_class;
  } else {
    statistics["residual"] = b.statistics.residual;
  }

  json timings = json::object();
  for (const auto& [stage, ms] : b.timings_ms) timings[stage] = ms;

  return {{"format_version", b.format_version},
          {"task", std::string(task_name(b.task()))},
          {"dataset", std::move(dataset)},
          {"model", std::move(model)},
          {"attribution", std::move(attribution)},
          {"embeddings",
           {{"data", embedding_to_json(b.embeddings.data)},
            {"attribution", embedding_to_json(b.embeddings.attribution)}}},
          {"statistics", std::move(statistics)},
          {"timings_ms", std::move(timings)}};
}

CheemBundle from_json(const json& j) {
  if (!j.is_object()) {
    throw BundleError(BundleError::Kind::kParse, "bundle is not a JSON object");
  }
  CheemBundle b;
  b.format_version = j.at("format_version").get<std::string>();
  const std::string major = b.format_version.substr(0, b.format_version.find('.'));
  const std::string expected_major(
      kBundleFormatVersion.substr(0, kBundleFormatVersion.find('.')));
  if (major != expected_major) {
    throw BundleError(BundleError::Kind::kVersion,
                      "unsupported bundle format_version '" + b.format_version +
                          "' (this build reads " + expected_major + ".x)");
  }

  Task task;
  try {
    task = parse_task(j.at("task").get<std::string>());
  } catch (const ValidationError& e) {
    invariant(e.what());
  }
  const bool classification = task == Task::kClassification;

  const json& jd = j.at("dataset");
  Dataset& ds = b.dataset;
  ds.name = jd.at("name").get<std::string>();
  ds.feature_names = jd.at("feature_names").get<std::vector<std::string>>();
  ds.row_labels = jd.at("row_labels").get<std::vector<std::string>>();
  const std::size_t p = ds.feature_names.size();
  const std::size_t n = ds.row_labels.size();
  ds.x = matrix_from_json(jd.at("x"), p, "x");
  if (classification) {
    CategoricalResponse c;
    c.observed = jd.at("observed").get<std::vector<int>>();
    c.levels = jd.at("levels").get<std::vector<std::string>>();
    ds.response = std::move(c);
  } else {
    ds.response =
        QuantitativeResponse{jd.at("observed").get<std::vector<double>>()};
  }
  b.scaled.means = jd.at("means").get<std::vector<double>>();
  b.scaled.sds = jd.at("sds").get<std::vector<double>>();
  b.scaled.values = matrix_from_json(jd.at("scaled"), p, "scaled");

  const json& jm = j.at("model");
  ModelSummary& m = b.model;
  m.hyper.n_trees = jm.at("hyper").at("n_trees").get<std::size_t>();
  m.hyper.mtry = jm.at("hyper").at("mtry").get<std::size_t>();
  m.hyper.min_node = jm.at("hyper").at("min_node").get<std::size_t>();
  m.seed = jm.at("seed").get<std::uint64_t>();
  const json& jf = jm.at("forest");
  m.forest.task = task;
  m.forest.hyper = m.hyper;
  m.forest.seed = jf.at("seed").get<std::uint64_t>();
  m.forest.num_features = jf.at("num_features").get<std::size_t>();
  m.forest.class_levels = jf.at("class_levels").get<std::vector<std::string>>();
  for (const json& t : jf.at("trees")) {
    m.forest.trees.push_back(tree_from_json(t, m.forest.value_dim()));
  }
  if (classification) {
    m.predicted_class = jm.at("predicted").get<std::vector<int>>();
    const std::size_t k = ds.categorical().levels.size();
    m.probabilities = matrix_from_json(jm.at("probabilities"), k, "probabilities");
    m.misclassified = flags_from_json(jm.at("misclassified"));
  } else {
    m.predicted_value = jm.at("predicted").get<std::vector<double>>();
    m.residuals = jm.at("residuals").get<std::vector<double>>();
  }

  const json& ja = j.at("attribution");
  AttributionSummary& a = b.attribution;
  a.raw.values = matrix_from_json(ja.at("raw"), p, "attribution raw");
  a.raw.baselines = ja.at("baseline").get<std::vector<double>>();
  if (classification) {
    a.raw.explained_class = ja.at("explained_class").get<std::vector<int>>();
  }
  a.normalized = matrix_from_json(ja.at("normalized"), p, "attribution normalized");
  a.zero_attribution = flags_from_json(ja.at("zero_attribution"));

  const json& je = j.at("embeddings");
  b.embeddings.data = embedding_from_json(je.at("data"));
  b.embeddings.attribution = embedding_from_json(je.at("attribution"));

  const json& js = j.at("statistics");
  b.statistics.log_maha_data = js.at("log_maha_data").get<std::vector<double>>();
  b.statistics.log_maha_attr = js.at("log_maha_attr").get<std::vector<double>>();
  if (classification) {
    b.statistics.predicted_class = js.at("predicted_class").get<std::vector<int>>();
  } else {
    b.statistics.residual = js.at("residual").get<std::vector<double>>();
  }

  for (const auto& [stage, ms] : j.at("timings_ms").items()) {
    b.timings_ms.emplace_back(stage, ms.get<double>());
  }
  (void)n;
  return b;
}

void expect_size(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) {
    invariant(std::string(what) + " has " + std::to_string(actual) +
              " entries, expected " + std::to_string(expected));
  }
}

void expect_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) invariant(std::string(what) + " is not finite");
  }
}

}  // namespace

std::vector<std::string> ColorStatistics::available(Task task) const {
  if (task == Task::kClassification) {
    return {"predicted_class", "log_maha_data", "log_maha_attr"};
  }
  return {"residual", "log_maha_data", "log_maha_attr"};
}

std::vector<double> ColorStatistics::values(Task task,
                                            std::string_view name) const {
  if (name == "log_maha_data") return log_maha_data;
  if (name == "log_maha_attr") return log_maha_attr;
  if (name == "predicted_class") {
    if (task != Task::kClassification) {
      throw ValidationError("predicted_class is only defined for classification");
    }
    return {predicted_class.begin(), predicted_class.end()};
  }
  if (name == "residual") {
    if (task != Task::kRegression) {
      throw ValidationError("residual is only defined for regression");
    }
    return residual;
  }
  throw ValidationError("unknown color statistic '" + std::string(name) + "'");
}

CheemBundle compute_bundle(const Dataset& ds, std::optional<Hyperparams> hyper,
                           std::uint64_t seed, const PipelineOptions& options) {
  CheemBundle b;
  run_stage("validate", options, b.timings_ms, [&] { validate(ds); });
  b.dataset = ds;
  const std::size_t n = ds.rows();
  const bool classification = ds.task() == Task::kClassification;
  const Hyperparams h = hyper.value_or(default_hyper(ds.task(), n, ds.cols()));

  b.model.hyper = h;
  b.model.seed = seed;
  b.model.forest = run_stage("train", options, b.timings_ms, [&] {
    return train(ds, h, seed, TrainOptions{options.threads});
  });

  run_stage("predict", options, b.timings_ms, [&] {
    ModelSummary& m = b.model;
    if (classification) {
      const auto& observed = ds.categorical().observed;
      m.probabilities.resize(static_cast<Eigen::Index>(n),
                             static_cast<Eigen::Index>(ds.num_classes()));
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const Prediction pred = predict(m.forest, row_span(ds.x, r));
        m.predicted_class.push_back(pred.predicted_class);
        for (std::size_t k = 0; k < pred.probabilities.size(); ++k) {
          m.probabilities(r, static_cast<Eigen::Index>(k)) = pred.probabilities[k];
        }
        m.misclassified.push_back(pred.predicted_class != observed[i] ? 1 : 0);
      }
    } else {
      const auto& observed = ds.quantitative().observed;
      for (std::size_t i = 0; i < n; ++i) {
        const Prediction pred =
            predict(m.forest, row_span(ds.x, static_cast<Eigen::Index>(i)));
        m.predicted_value.push_back(pred.value);
        m.residuals.push_back(observed[i] - pred.value);
      }
    }
  });

  b.attribution.raw = run_stage("attribution", options, b.timings_ms, [&] {
    return attribution_matrix(b.model.forest, ds,
                              AttributionOptions{options.threads});
  });

  ScaledMatrix scaled_attr;
  run_stage("scale", options, b.timings_ms, [&] {
    b.scaled = scale(ds.x);
    scaled_attr = scale(b.attribution.raw.values);
    const Matrix& raw = b.attribution.raw.values;
    b.attribution.normalized = Matrix::Zero(raw.rows(), raw.cols());
    b.attribution.zero_attribution.assign(n, 0);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const double len = norm(row_span(raw, i));
      if (!(len >= kZeroAttribution)) {
        b.attribution.zero_attribution[static_cast<std::size_t>(i)] = 1;
        continue;
      }
      b.attribution.normalized.row(i) = raw.row(i) / len;
    }
  });

  run_stage("pca", options, b.timings_ms, [&] {
    b.embeddings.data = pca2(b.scaled.values);
    b.embeddings.attribution = pca2(scaled_attr.values);
  });

  run_stage("statistics", options, b.timings_ms, [&] {
    if (classification) {
      b.statistics.predicted_class = b.model.predicted_class;
    } else {
      b.statistics.residual = b.model.residuals;
    }
    b.statistics.log_maha_data = log_mahalanobis(b.scaled.values);
    b.statistics.log_maha_attr = log_mahalanobis(scaled_attr.values);
  });
  return b;
}

void check_bundle(const CheemBundle& b) {
  const std::size_t n = b.rows();
  const std::size_t p = b.cols();
  try {
    validate(b.dataset);
  } catch (const ValidationError& e) {
    invariant(std::string("dataset: ") + e.what());
  }
  const bool classification = b.task() == Task::kClassification;
  const auto rows_of = [](const Matrix& m) {
    return static_cast<std::size_t>(m.rows());
  };

  expect_size(b.scaled.means.size(), p, "means");
  expect_size(b.scaled.sds.size(), p, "sds");
  expect_size(rows_of(b.scaled.values), n, "scaled");

  const ModelSummary& m = b.model;
  try {
    m.forest.check();
  } catch (const ValidationError& e) {
    invariant(std::string("forest: ") + e.what());
  }
  if (m.forest.num_features != p) invariant("forest arity does not match data");
  if (m.forest.task != b.task()) invariant("forest task does not match data");
  if (m.forest.trees.size() != m.hyper.n_trees) {
    invariant("forest tree count does not match n_trees");
  }

  const AttributionSummary& a = b.attribution;
  expect_size(rows_of(a.raw.values), n, "attribution raw");
  expect_size(rows_of(a.normalized), n, "attribution normalized");
  expect_size(a.zero_attribution.size(), n, "zero_attribution");
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double len = norm(row_span(a.normalized, r));
    if (a.zero_attribution[i] ? len != 0.0
                              : std::abs(len - 1.0) > kUnitNormTolerance) {
      invariant("normalized attribution row " + std::to_string(i) +
                " has norm " + std::to_string(len));
    }
  }

  if (classification) {
    const auto& observed = b.dataset.categorical().observed;
    const std::size_t k = b.dataset.num_classes();
    expect_size(m.predicted_class.size(), n, "predicted");
    expect_size(rows_of(m.probabilities), n, "probabilities");
    expect_size(m.misclassified.size(), n, "misclassified");
    expect_size(a.raw.baselines.size(), k, "baseline");
    expect_size(a.raw.explained_class.size(), n, "explained_class");
    expect_size(b.statistics.predicted_class.size(), n, "predicted_class");
    for (std::size_t i = 0; i < n; ++i) {
      if (m.predicted_class[i] < 0 ||
          static_cast<std::size_t>(m.predicted_class[i]) >= k) {
        invariant("predicted class out of range in row " + std::to_string(i));
      }
      if ((m.misclassified[i] != 0) != (m.predicted_class[i] != observed[i])) {
        invariant("misclassified flag inconsistent in row " + std::to_string(i));
      }
      if (a.raw.explained_class[i] < 0 ||
          static_cast<std::size_t>(a.raw.explained_class[i]) >= k) {
        invariant("explained class out of range in row " + std::to_string(i));
      }
    }
  } else {
    expect_size(m.predicted_value.size(), n, "predicted");
    expect_size(m.residuals.size(), n, "residuals");
    expect_size(a.raw.baselines.size(), 1, "baseline");
    expect_size(b.statistics.residual.size(), n, "residual");
    expect_finite(b.statistics.residual, "residual");
  }

  for (const Embedding2D* e : {&b.embeddings.data, &b.embeddings.attribution}) {
    expect_size(rows_of(e->coordinates), n, "embedding coordinates");
    expect_size(rows_of(e->loadings), p, "embedding loadings");
  }
  expect_size(b.statistics.log_maha_data.size(), n, "log_maha_data");
  expect_size(b.statistics.log_maha_attr.size(), n, "log_maha_attr");
  expect_finite(b.statistics.log_maha_data, "log_maha_data");
  expect_finite(b.statistics.log_maha_attr, "log_maha_attr");
  for (const auto& [stage, ms] : b.timings_ms) {
    if (!(ms >= 0.0)) invariant("timing for stage " + stage + " is negative");
  }
}

std::string serialize_bundle(const CheemBundle& b) {
  return to_json(b).dump() + "\n";
}

CheemBundle parse_bundle(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw BundleError(BundleError::Kind::kParse,
                      std::string("bundle is not valid JSON: ") + e.what());
  }
  CheemBundle b;
  try {
    b = from_json(j);
  } catch (const json::exception& e) {
    throw BundleError(BundleError::Kind::kParse,
                      std::string("bundle is missing or mistypes a field: ") +
                          e.what());
  }
  check_bundle(b);
  return b;
}

void save_bundle(const CheemBundle& b, const std::filesystem::path& path) {
  const std::string text = serialize_bundle(b);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw BundleError(BundleError::Kind::kIo,
                      "cannot write '" + path.string() + "'");
  }
  out << text;
  if (!out.flush()) {
    throw BundleError(BundleError::Kind::kIo,
                      "failed writing '" + path.string() + "'");
  }
}

CheemBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw BundleError(BundleError::Kind::kIo,
                      "cannot read '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_bundle(buffer.str());
}

}  // namespace cheem
