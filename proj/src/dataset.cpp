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

#include "cheem/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "cheem/csv.hpp"
#include "cheem/error.hpp"

namespace cheem {
namespace {

constexpr std::size_t kMinRows = 10;
constexpr std::size_t kMinFeatures = 2;

bool is_missing_token(std::string_view cell) {
  std::string_view t = cell;
  while (!t.empty() && t.front() == ' ') t.remove_prefix(1);
  while (!t.empty() && t.back() == ' ') t.remove_suffix(1);
  return t.empty() || t == "NA" || t == "NaN" || t == "nan" || t == "null";
}

std::string cell_ref(std::size_t data_row, const std::string& column) {
  // Data rows are reported 1-based; the header is line 1 of the file.
  return "row " + std::to_string(data_row + 1) + " (line " +
         std::to_string(data_row + 2) + "), column '" + column + "'";
}

CategoricalResponse build_categorical(const std::vector<std::string>& cells,
                                      bool numeric) {
  CategoricalResponse out;
  out.observed.resize(cells.size());
  if (numeric) {
    std::map<double, std::string> levels;  // value -> first spelling seen
    std::vector<double> values(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      values[i] = *csv::parse_number(cells[i]);
      levels.emplace(values[i], cells[i]);
    }
    std::map<double, int> index;
    for (const auto& [value, spelling] : levels) {
      index[value] = static_cast<int>(out.levels.size());
      out.levels.push_back(spelling);
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out.observed[i] = index.at(values[i]);
    }
  } else {
    const std::set<std::string> levels(cells.begin(), cells.end());
    out.levels.assign(levels.begin(), levels.end());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out.observed[i] = static_cast<int>(
          std::lower_bound(out.levels.begin(), out.levels.end(), cells[i]) -
          out.levels.begin());
    }
  }
  return out;
}

}  // namespace

std::string_view task_name(Task task) {
  return task == Task::kClassification ? "classification" : "regression";
}

Task parse_task(std::string_view name) {
  if (name == "classification") return Task::kClassification;
  if (name == "regression") return Task::kRegression;
  throw ValidationError("unknown task '" + std::string(name) + "'");
}

Task Dataset::task() const {
  return std::holds_alternative<CategoricalResponse>(response)
             ? Task::kClassification
             : Task::kRegression;
}

std::size_t Dataset::num_classes() const {
  if (const auto* c = std::get_if<CategoricalResponse>(&response)) {
    return c->levels.size();
  }
  return 0;
}

const CategoricalResponse& Dataset::categorical() const {
  if (const auto* c = std::get_if<CategoricalResponse>(&response)) return *c;
  throw ValidationError("dataset has a quantitative response");
}

const QuantitativeResponse& Dataset::quantitative() const {
  if (const auto* q = std::get_if<QuantitativeResponse>(&response)) return *q;
  throw ValidationError("dataset has a categorical response");
}

void validate(const Dataset& ds) {
  const std::size_t n = ds.rows();
  const std::size_t p = ds.cols();
  if (n < kMinRows) {
    throw ValidationError("dataset needs at least " + std::to_string(kMinRows) +
                          " rows, got " + std::to_string(n));
  }
  if (p < kMinFeatures) {
    throw ValidationError("dataset needs at least " +
                          std::to_string(kMinFeatures) +
                          " predictors, got " + std::to_string(p));
  }
  if (ds.feature_names.size() != p) {
    throw ValidationError("feature_names length does not match columns");
  }
  if (ds.row_labels.size() != n) {
    throw ValidationError("row_labels length does not match rows");
  }
  std::set<std::string> seen;
  for (const auto& name : ds.feature_names) {
    if (!seen.insert(name).second) {
      throw ValidationError("duplicate feature name '" + name + "'");
    }
  }
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
      if (!std::isfinite(ds.x(i, j))) {
        throw ValidationError(cell_ref(static_cast<std::size_t>(i),
                                       ds.feature_names[j]) +
                              " is not finite");
      }
    }
  }
  if (const auto* c = std::get_if<CategoricalResponse>(&ds.response)) {
    if (c->observed.size() != n) {
      throw ValidationError("response length does not match rows");
    }
    if (c->levels.size() < 2) {
      throw ValidationError("categorical response needs at least 2 levels");
    }
    std::vector<std::size_t> counts(c->levels.size(), 0);
    for (int k : c->observed) {
      if (k < 0 || static_cast<std::size_t>(k) >= c->levels.size()) {
        throw ValidationError("class index out of range");
      }
      ++counts[k];
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] < 2) {
        throw ValidationError("class '" + c->levels[k] +
                              "' has fewer than 2 observations");
      }
    }
  } else {
    const auto& q = std::get<QuantitativeResponse>(ds.response);
    if (q.observed.size() != n) {
      throw ValidationError("response length does not match rows");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(q.observed[i])) {
        throw ValidationError("response in row " + std::to_string(i + 1) +
                              " is not finite");
      }
    }
  }
}

Dataset parse_csv(std::string_view text, const CsvOptions& options,
                  std::string name) {
  std::vector<csv::Record> records = csv::parse(text);
  if (records.empty()) throw ValidationError("csv: missing header row");
  const csv::Record header = std::move(records.front());
  records.erase(records.begin());
  // A lone empty record is what a blank trailing line parses to.
  std::erase_if(records, [](const csv::Record& r) {
    return r.size() == 1 && r.front().empty();
  });

  const auto column_index = [&](const std::string& column) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), column);
    return it == header.end() ? -1 : it - header.begin();
  };
  const std::ptrdiff_t response_col = column_index(options.response_column);
  if (response_col < 0) {
    throw ValidationError("response column '" + options.response_column +
                          "' not found in header");
  }
  std::ptrdiff_t label_col = -1;
  if (options.label_column) {
    label_col = column_index(*options.label_column);
    if (label_col < 0) {
      throw ValidationError("label column '" + *options.label_column +
                            "' not found in header");
    }
  }

  std::vector<std::size_t> predictor_cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) != response_col &&
        static_cast<std::ptrdiff_t>(j) != label_col) {
      predictor_cols.push_back(j);
    }
  }

  Dataset ds;
  ds.name = std::move(name);
  for (std::size_t j : predictor_cols) ds.feature_names.push_back(header[j]);
  const std::size_t n = records.size();
  ds.x.resize(static_cast<Eigen::Index>(n),
              static_cast<Eigen::Index>(predictor_cols.size()));
  std::vector<std::string> response_cells(n);
  bool response_numeric = true;

  for (std::size_t i = 0; i < n; ++i) {
    const csv::Record& r = records[i];
    if (r.size() != header.size()) {
      throw ValidationError("row " + std::to_string(i + 1) + " (line " +
                            std::to_string(i + 2) + ") has " +
                            std::to_string(r.size()) + " fields, header has " +
                            std::to_string(header.size()));
    }
    for (std::size_t jj = 0; jj < predictor_cols.size(); ++jj) {
      const std::string& cell = r[predictor_cols[jj]];
      if (is_missing_token(cell)) {
        throw ValidationError("missing value at " +
                              cell_ref(i, header[predictor_cols[jj]]));
      }
      const auto value = csv::parse_number(cell);
      if (!value) {
        throw ValidationError("non-numeric value '" + cell + "' at " +
                              cell_ref(i, header[predictor_cols[jj]]));
      }
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) =
          *value;
    }
    const std::string& y = r[response_col];
    if (is_missing_token(y)) {
      throw ValidationError("missing value at " +
                            cell_ref(i, options.response_column));
    }
    response_numeric = response_numeric && csv::parse_number(y).has_value();
    response_cells[i] = y;
    ds.row_labels.push_back(label_col >= 0 ? r[label_col]
                                           : std::to_string(i + 1));
  }

  bool classify = false;
  switch (options.task) {
    case TaskSelection::kClassification:
      classify = true;
      break;
    case TaskSelection::kRegression:
      if (!response_numeric) {
        throw ValidationError("regression requires a numeric response column '" +
                              options.response_column + "'");
      }
      break;
    case TaskSelection::kAuto: {
      if (!response_numeric) {
        classify = true;
      } else {
        std::set<double> distinct;
        for (const auto& cell : response_cells) {
          distinct.insert(*csv::parse_number(cell));
        }
        classify = distinct.size() <= options.max_auto_classes;
      }
      break;
    }
  }

  if (classify) {
    ds.response = build_categorical(response_cells, response_numeric);
  } else {
    QuantitativeResponse q;
    q.observed.reserve(n);
    for (const auto& cell : response_cells) {
      q.observed.push_back(*csv::parse_number(cell));
    }
    ds.response = std::move(q);
  }
  validate(ds);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), options, path.stem().string());
}

ScaledMatrix scale(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  ScaledMatrix out;
  out.values = Matrix::Zero(n, p);
  out.means.resize(static_cast<std::size_t>(p));
  out.sds.resize(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = x.col(j).mean();
    double ss = 0.0;
    bool constant = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = x(i, j) - mean;
      ss += d * d;
      constant = constant && x(i, j) == x(0, j);
    }
    const double sd = (constant || n < 2)
                          ? 0.0
                          : std::sqrt(ss / static_cast<double>(n - 1));
    out.means[j] = constant && n > 0 ? x(0, j) : mean;
    out.sds[j] = sd;
    if (sd > 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i, j) = (x(i, j) - mean) / sd;
      }
    }
  }
  return out;
}

Matrix unscale(const ScaledMatrix& scaled) {
  Matrix x(scaled.values.rows(), scaled.values.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      x(i, j) = scaled.values(i, j) * scaled.sds[j] + scaled.means[j];
    }
  }
  return x;
}

}  // namespace cheem
