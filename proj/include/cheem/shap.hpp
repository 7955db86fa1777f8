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

// Local variable attributions for tree ensembles.
//
// All routines share one value function: the path-dependent conditional
// expectation v(S) of a tree, where features in S follow the observation's
// branch and every other split averages its children by cover. Shapley
// values of v are computed three ways:
//
//  * tree_shap       polynomial-time recursion over root-to-leaf paths,
//  * exact_shapley   enumeration of all 2^p subsets (the oracle),
//  * breakdown       one ordering at a time; averaging over orderings gives
//                    Shapley values, a single ordering gives a breakdown.
//
// Forest attributions are the mean of the per-tree attributions.

#ifndef CHEEM_SHAP_HPP_
#define CHEEM_SHAP_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cheem/dataset.hpp"
#include "cheem/forest.hpp"
#include "cheem/matrix.hpp"

namespace cheem {

// Feature membership flags; known[j] != 0 means feature j is conditioned on.
using FeatureMask = std::vector<char>;

// Inclusive upper bound on p for subset enumeration.
inline constexpr std::size_t kMaxExactFeatures = 20;

// v(S) for a single tree. `component` selects the leaf value entry (the
// class index for probability trees, 0 for regression).
double conditional_expectation(const Tree& tree, std::span<const double> x,
                               const FeatureMask& known,
                               std::size_t component = 0);

// v(S) averaged over the trees of a forest.
double conditional_expectation(const Forest& f, std::span<const double> x,
                               const FeatureMask& known,
                               std::optional<int> target_class = std::nullopt);

// Cover-weighted mean leaf value, i.e. v of the empty set.
double expected_value(const Tree& tree, std::size_t component = 0);

std::vector<double> exact_shapley(const Tree& tree, std::span<const double> x,
                                  std::size_t component = 0);
std::vector<double> exact_shapley(const Forest& f, std::span<const double> x,
                                  std::optional<int> target_class = std::nullopt);

// Adds the tree's attributions for `x` into `phi` (length = feature count).
void tree_shap(const Tree& tree, std::span<const double> x,
               std::size_t component, std::span<double> phi);
std::vector<double> tree_shap(const Tree& tree, std::span<const double> x,
                              std::size_t num_features,
                              std::size_t component = 0);
std::vector<double> tree_shap(const Forest& f, std::span<const double> x,
                              std::optional<int> target_class = std::nullopt);

struct AttributionMatrix {
  Matrix values;  // n x p, units of the explained scalar
  // Mean explained scalar over all rows: one entry for regression, one per
  // class for classification.
  std::vector<double> baselines;
  // Class explained in each row (its predicted class); empty for regression.
  std::vector<int> explained_class;

  double baseline_for_row(std::size_t i) const {
    return explained_class.empty() ? baselines.front()
                                   : baselines[explained_class[i]];
  }
};

struct AttributionOptions {
  std::size_t threads = 1;
};

// Tree SHAP for every row of the training data the forest was fit on.
// Classification rows explain the probability of their predicted class.
AttributionMatrix attribution_matrix(const Forest& f, const Dataset& ds,
                                     const AttributionOptions& options = {});

struct BreakdownResult {
  std::vector<int> order;
  std::vector<double> contributions;  // indexed by feature, not by position
  double baseline = 0.0;              // v of the empty set
  double margin = 0.0;                // v of all features
};

BreakdownResult breakdown(const Forest& f, std::span<const double> x,
                          std::span<const int> order,
                          std::optional<int> target_class = std::nullopt);

struct SampledShap {
  std::vector<std::vector<int>> orders;
  Matrix contributions;  // n_sequences x p
  std::vector<double> mean;
  std::vector<double> median;
};

SampledShap sampled_shap(const Forest& f, std::span<const double> x,
                         std::size_t n_sequences, std::uint64_t seed,
                         std::optional<int> target_class = std::nullopt);

// Breakdowns over caller-chosen orderings; summaries as in sampled_shap.
SampledShap breakdown_distribution(const Forest& f, std::span<const double> x,
                                   std::vector<std::vector<int>> orders,
                                   std::optional<int> target_class = std::nullopt);

// Rows are sequences, columns are features, preceded by a header row.
std::string to_csv(const SampledShap& s,
                   const std::vector<std::string>& feature_names);

}  // namespace cheem

#endif  // CHEEM_SHAP_HPP_
