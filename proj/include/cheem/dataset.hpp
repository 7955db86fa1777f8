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

// Tabular input: a complete numeric predictor matrix plus a categorical or
// quantitative response, and the z-scaling used by every downstream view.

#ifndef CHEEM_DATASET_HPP_
#define CHEEM_DATASET_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cheem/matrix.hpp"

namespace cheem {

enum class Task { kClassification, kRegression };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);

struct CategoricalResponse {
  std::vector<int> observed;        // class index per row
  std::vector<std::string> levels;  // class names, indexed by class
};

struct QuantitativeResponse {
  std::vector<double> observed;
};

using Response = std::variant<CategoricalResponse, QuantitativeResponse>;

struct Dataset {
  std::string name;
  Matrix x;  // original units
  std::vector<std::string> feature_names;
  std::vector<std::string> row_labels;
  Response response;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
  Task task() const;
  // Number of classes; 0 for regression.
  std::size_t num_classes() const;
  const CategoricalResponse& categorical() const;
  const QuantitativeResponse& quantitative() const;
};

// Throws ValidationError unless the dataset satisfies the data contract:
// finite values, n >= 10, p >= 2, unique feature names, and for a
// categorical response at least two levels each observed at least twice.
void validate(const Dataset& ds);

enum class TaskSelection { kAuto, kClassification, kRegression };

struct CsvOptions {
  std::string response_column;
  TaskSelection task = TaskSelection::kAuto;
  // Optional column used for row labels; it is excluded from predictors.
  std::optional<std::string> label_column;
  // Auto mode treats a numeric response with at most this many distinct
  // values as categorical.
  std::size_t max_auto_classes = 10;
};

// Parses an RFC-4180 CSV with a header row. Every non-response, non-label
// column is a predictor and must be numeric in every row.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);
Dataset parse_csv(std::string_view text, const CsvOptions& options,
                  std::string name = "data");

struct ScaledMatrix {
  Matrix values;              // z-scores
  std::vector<double> means;  // original units
  std::vector<double> sds;    // sample sd; 0 for constant columns
};

// Column-wise z-scaling with the (n - 1) denominator. Constant columns become
// all-zero columns with a recorded sd of 0.
ScaledMatrix scale(const Matrix& x);
inline ScaledMatrix scale(const Dataset& ds) { return scale(ds.x); }

Matrix unscale(const ScaledMatrix& scaled);

}  // namespace cheem

#endif  // CHEEM_DATASET_HPP_
