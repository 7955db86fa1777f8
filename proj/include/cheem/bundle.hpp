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

// The precomputed bundle: everything the explorer needs, computed once from
// a dataset and stored as a single JSON document.
//
// Top-level keys: format_version, task, dataset, model, attribution,
// embeddings, statistics, timings_ms. Matrices are row-major nested arrays
// and numbers are written with round-trip precision.

#ifndef CHEEM_BUNDLE_HPP_
#define CHEEM_BUNDLE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cheem/dataset.hpp"
#include "cheem/forest.hpp"
#include "cheem/pca.hpp"
#include "cheem/shap.hpp"

namespace cheem {

inline constexpr std::string_view kBundleFormatVersion = "1.0";

struct ModelSummary {
  Hyperparams hyper;
  std::uint64_t seed = 0;
  std::vector<double> predicted_value;  // regression only
  std::vector<int> predicted_class;     // classification only
  Matrix probabilities;                 // n x classes (classification only)
  std::vector<double> residuals;    // observed - predicted (regression only)
  std::vector<char> misclassified;  // classification only
  Forest forest;
};

struct AttributionSummary {
  AttributionMatrix raw;
  Matrix normalized;  // rows scaled to unit norm
  std::vector<char> zero_attribution;  // rows with no direction, left at 0
};

struct Embeddings {
  Embedding2D data;
  Embedding2D attribution;
};

struct ColorStatistics {
  std::vector<int> predicted_class;  // classification only
  std::vector<double> residual;      // regression only
  std::vector<double> log_maha_data;
  std::vector<double> log_maha_attr;

  std::vector<std::string> available(Task task) const;
  // Values of the named statistic as reals; throws ValidationError if the
  // name is unknown or not defined for the task.
  std::vector<double> values(Task task, std::string_view name) const;
};

struct CheemBundle {
  std::string format_version{kBundleFormatVersion};
  Dataset dataset;
  ScaledMatrix scaled;  // z-scaled predictors
  ModelSummary model;
  AttributionSummary attribution;
  Embeddings embeddings;
  ColorStatistics statistics;
  std::vector<std::pair<std::string, double>> timings_ms;

  Task task() const { return dataset.task(); }
  std::size_t rows() const { return dataset.rows(); }
  std::size_t cols() const { return dataset.cols(); }
};

struct PipelineOptions {
  std::size_t threads = 1;
  // Called with a stage name when the stage starts and with its duration
  // once it has finished.
  std::function<void(std::string_view stage, std::optional<double> ms)> progress;
};

// train -> attributions -> scaling -> PCA of both spaces -> statistics.
// Failures are rethrown as StageError tagged with the stage name.
CheemBundle compute_bundle(const Dataset& ds,
                           std::optional<Hyperparams> hyper, std::uint64_t seed,
                           const PipelineOptions& options = {});

class BundleError : public std::runtime_error {
 public:
  enum class Kind { kIo, kParse, kVersion, kInvariant };

  BundleError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string serialize_bundle(const CheemBundle& b);
CheemBundle parse_bundle(std::string_view json_text);

void save_bundle(const CheemBundle& b, const std::filesystem::path& path);
CheemBundle load_bundle(const std::filesystem::path& path);

// Throws BundleError(kInvariant) on shape or consistency violations.
void check_bundle(const CheemBundle& b);

}  // namespace cheem

#endif  // CHEEM_BUNDLE_HPP_
