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

// Bagged CART forests. Classification trees are probability trees: every
// leaf holds the class frequencies of its in-bag rows, so the forest output
// is a real-valued function that tree SHAP can decompose.

#ifndef CHEEM_FOREST_HPP_
#define CHEEM_FOREST_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cheem/dataset.hpp"

namespace cheem {

struct Hyperparams {
  std::size_t n_trees = 125;
  std::size_t mtry = 1;
  std::size_t min_node = 1;

  bool operator==(const Hyperparams&) const = default;
};

// Classification: 125 trees, mtry = floor(sqrt(p)), min_node = max(1, n/500).
// Regression: 125 trees, mtry = max(1, floor(p/3)), min_node = max(5, n/500).
Hyperparams default_hyper(Task task, std::size_t n, std::size_t p);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  // Number of training rows (the full training set, not the bootstrap
  // sample) that reach this node.
  std::int64_t cover = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Flat binary tree; node 0 is the root. Every node carries a value of
// `value_dim` entries (1 for regression, the class count for
// classification); only leaf values enter predictions.
class Tree {
 public:
  Tree() = default;
  Tree(std::vector<TreeNode> nodes, std::vector<double> values,
       std::size_t value_dim);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t value_dim() const { return value_dim_; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> value(std::size_t node) const {
    return {values_.data() + node * value_dim_, value_dim_};
  }

  std::size_t leaf_for(std::span<const double> x) const;
  std::size_t depth() const { return depth_; }

  // Recomputes node covers by routing every row of `x` from the root.
  void recount_covers(const Matrix& x);

  // Throws ValidationError if structure, covers or leaf values are
  // inconsistent (cover conservation, cover >= 1, probability leaves).
  void check(bool probability_leaves) const;

  bool operator==(const Tree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> values_;
  std::size_t value_dim_ = 1;
  std::size_t depth_ = 0;
};

struct Forest {
  std::vector<Tree> trees;
  Task task = Task::kRegression;
  Hyperparams hyper;
  std::uint64_t seed = 0;
  std::size_t num_features = 0;
  std::vector<std::string> class_levels;  // empty for regression

  std::size_t value_dim() const {
    return task == Task::kClassification ? class_levels.size() : 1;
  }
  void check() const;

  bool operator==(const Forest&) const = default;
};

struct Prediction {
  double value = 0.0;                 // regression output
  std::vector<double> probabilities;  // classification output
  int predicted_class = -1;           // classification; ties -> lowest index
};

struct TrainOptions {
  std::size_t threads = 1;
};

Forest train(const Dataset& ds, const Hyperparams& hyper, std::uint64_t seed,
             const TrainOptions& options = {});

// Same as train() with caller-supplied bootstrap row indices, one list per
// tree. Feature sampling still follows the per-tree seeds.
Forest train_with_samples(const Dataset& ds, const Hyperparams& hyper,
                          std::uint64_t seed,
                          const std::vector<std::vector<std::size_t>>& samples,
                          const TrainOptions& options = {});

// Bootstrap sample (n draws with replacement) used for tree `tree_index`.
std::vector<std::size_t> bootstrap_sample(std::uint64_t seed,
                                          std::size_t tree_index,
                                          std::size_t n);

Prediction predict(const Forest& f, std::span<const double> x);

// Prediction of a single tree, expanded to the forest's value dimension.
std::vector<double> tree_output(const Tree& tree, std::span<const double> x);

// The scalar that attributions explain: the regression value, or the
// predicted probability of `target_class`.
double scalar_margin(const Forest& f, std::span<const double> x,
                     std::optional<int> target_class = std::nullopt);

}  // namespace cheem

#endif  // CHEEM_FOREST_HPP_
