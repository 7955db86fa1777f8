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

#include "cheem/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>
#include <utility>

#include "cheem/error.hpp"
#include "cheem/random.hpp"

namespace cheem {
namespace {

// Stream offsets so bootstrap draws and feature sampling of one tree do not
// share a generator.
constexpr std::uint64_t kBootstrapStream = 0;
constexpr std::uint64_t kFeatureStream = 1;

std::uint64_t tree_stream_seed(std::uint64_t seed, std::size_t tree_index,
                               std::uint64_t stream) {
  return derive_seed(derive_seed(seed, tree_index), stream);
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, const Dataset& ds, const Hyperparams& hyper,
             std::uint64_t feature_seed)
      : x_(x), hyper_(hyper), rng_(feature_seed) {
    if (ds.task() == Task::kClassification) {
      const auto& c = ds.categorical();
      classes_ = c.observed;
      num_classes_ = c.levels.size();
    } else {
      y_ = ds.quantitative().observed;
    }
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree grow(std::vector<std::size_t> sample) {
    const std::size_t dim = value_dim();
    std::vector<TreeNode> nodes(1);
    std::vector<double> values(dim);
    struct Work {
      std::size_t node;
      std::vector<std::size_t> rows;
    };
    std::vector<Work> stack;
    stack.push_back({0, std::move(sample)});

    while (!stack.empty()) {
      Work work = std::move(stack.back());
      stack.pop_back();
      nodes[work.node].cover = static_cast<std::int64_t>(work.rows.size());
      fill_value(work.rows, std::span<double>(values.data() + work.node * dim,
                                              dim));

      const SplitChoice split = find_split(work.rows);
      if (split.feature < 0) continue;

      std::vector<std::size_t> left_rows;
      std::vector<std::size_t> right_rows;
      for (std::size_t r : work.rows) {
        const double v = x_(static_cast<Eigen::Index>(r), split.feature);
        (v <= split.threshold ? left_rows : right_rows).push_back(r);
      }
      const auto left = nodes.size();
      const auto right = left + 1;
      nodes[work.node].feature = split.feature;
      nodes[work.node].threshold = split.threshold;
      nodes[work.node].left = static_cast<std::int32_t>(left);
      nodes[work.node].right = static_cast<std::int32_t>(right);
      nodes.resize(nodes.size() + 2);
      values.resize(nodes.size() * dim, 0.0);
      stack.push_back({right, std::move(right_rows)});
      stack.push_back({left, std::move(left_rows)});
    }
    return Tree(std::move(nodes), std::move(values), dim);
  }

 private:
  bool classification() const { return num_classes_ > 0; }
  std::size_t value_dim() const { return classification() ? num_classes_ : 1; }

  void fill_value(const std::vector<std::size_t>& rows,
                  std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (rows.empty()) return;
    const double m = static_cast<double>(rows.size());
    if (classification()) {
      for (std::size_t r : rows) out[classes_[r]] += 1.0;
      for (double& v : out) v /= m;
    } else {
      double sum = 0.0;
      for (std::size_t r : rows) sum += y_[r];
      out[0] = sum / m;
    }
  }

  SplitChoice find_split(const std::vector<std::size_t>& rows) {
    SplitChoice best;
    if (rows.size() < 2 * hyper_.min_node || rows.size() < 2) return best;

    // Node-level target summaries; a pure node cannot improve.
    double tolerance = 0.0;
    std::vector<double> node_counts;
    double mean = 0.0;
    if (classification()) {
      node_counts.assign(num_classes_, 0.0);
      for (std::size_t r : rows) node_counts[classes_[r]] += 1.0;
      const auto nonzero = std::count_if(node_counts.begin(), node_counts.end(),
                                         [](double c) { return c > 0.0; });
      if (nonzero < 2) return best;
      tolerance = 1e-12 * static_cast<double>(rows.size());
    } else {
      for (std::size_t r : rows) mean += y_[r];
      mean /= static_cast<double>(rows.size());
      double sse = 0.0;
      for (std::size_t r : rows) sse += (y_[r] - mean) * (y_[r] - mean);
      if (!(sse > 0.0)) return best;
      tolerance = 1e-12 * sse;
    }

    const std::size_t mtry = std::min(hyper_.mtry, features_.size());
    for (std::size_t i = 0; i < mtry; ++i) {
      const auto j = i + static_cast<std::size_t>(
                             uniform_index(rng_, features_.size() - i));
      std::swap(features_[i], features_[j]);
    }

    std::vector<std::pair<double, std::size_t>> sorted(rows.size());
    std::vector<double> left_counts;
    for (std::size_t c = 0; c < mtry; ++c) {
      const int feature = features_[c];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        sorted[i] = {x_(static_cast<Eigen::Index>(rows[i]), feature), rows[i]};
      }
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;

      const double m = static_cast<double>(rows.size());
      double left_sum = 0.0;  // of centered targets (regression)
      left_counts.assign(num_classes_, 0.0);
      double parent_score = 0.0;
      if (classification()) {
        for (double cnt : node_counts) parent_score += cnt * cnt / m;
      }
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const std::size_t r = sorted[i].second;
        if (classification()) {
          left_counts[classes_[r]] += 1.0;
        } else {
          left_sum += y_[r] - mean;
        }
        if (sorted[i].first == sorted[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = m - nl;
        double gain = 0.0;
        if (classification()) {
          double sl = 0.0;
          double sr = 0.0;
          for (std::size_t k = 0; k < num_classes_; ++k) {
            const double cl = left_counts[k];
            const double cr = node_counts[k] - cl;
            sl += cl * cl;
            sr += cr * cr;
          }
          gain = sl / nl + sr / nr - parent_score;
        } else {
          gain = left_sum * left_sum * m / (nl * nr);
        }
        if (gain > best.gain) {
          const double lo = sorted[i].first;
          const double hi = sorted[i + 1].first;
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {feature, threshold, gain};
        }
      }
    }
    if (best.feature >= 0 && !(best.gain > tolerance)) best.feature = -1;
    return best;
  }

  const Matrix& x_;
  const Hyperparams& hyper_;
  SplitMix64 rng_;
  std::vector<double> y_;
  std::vector<int> classes_;
  std::size_t num_classes_ = 0;
  std::vector<int> features_;
};

void validate_hyper(const Hyperparams& hyper, std::size_t p) {
  if (hyper.n_trees == 0) throw ValidationError("n_trees must be >= 1");
  if (hyper.mtry == 0 || hyper.mtry > p) {
    throw ValidationError("mtry must be in [1, " + std::to_string(p) + "]");
  }
  if (hyper.min_node == 0) throw ValidationError("min_node must be >= 1");
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

Hyperparams default_hyper(Task task, std::size_t n, std::size_t p) {
  Hyperparams h;
  h.n_trees = 125;
  if (task == Task::kClassification) {
    h.mtry = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p))));
    h.min_node = std::max<std::size_t>(1, n / 500);
  } else {
    h.mtry = p / 3;
    h.min_node = std::max<std::size_t>(5, n / 500);
  }
  h.mtry = std::max<std::size_t>(1, h.mtry);
  return h;
}

namespace {

std::size_t compute_depth(const std::vector<TreeNode>& nodes_) {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      for (std::int32_t c : {nodes_[i].left, nodes_[i].right}) {
        if (c <= static_cast<std::int32_t>(i) ||
            c >= static_cast<std::int32_t>(nodes_.size())) {
          throw ValidationError("node " + std::to_string(i) +
                                " has invalid children");
        }
      }
      level[nodes_[i].left] = level[i] + 1;
      level[nodes_[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

}  // namespace

Tree::Tree(std::vector<TreeNode> nodes, std::vector<double> values,
           std::size_t value_dim)
    : nodes_(std::move(nodes)), values_(std::move(values)), value_dim_(value_dim) {
  if (nodes_.empty()) throw ValidationError("tree has no nodes");
  if (value_dim_ == 0 || values_.size() != nodes_.size() * value_dim_) {
    throw ValidationError("tree values do not match node count");
  }
  depth_ = compute_depth(nodes_);
}

std::size_t Tree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& n = nodes_[i];
    i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
  }
  return i;
}


void Tree::recount_covers(const Matrix& x) {
  for (auto& n : nodes_) n.cover = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto row = row_span(x, r);
    std::size_t i = 0;
    while (true) {
      ++nodes_[i].cover;
      const TreeNode& n = nodes_[i];
      if (n.is_leaf()) break;
      i = static_cast<std::size_t>(row[n.feature] <= n.threshold ? n.left
                                                                 : n.right);
    }
  }
}

void Tree::check(bool probability_leaves) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    if (n.cover < 1) {
      throw ValidationError("node " + std::to_string(i) + " has cover < 1");
    }
    if (n.is_leaf()) {
      if (probability_leaves) {
        double sum = 0.0;
        for (double v : value(i)) {
          if (v < 0.0) throw ValidationError("negative leaf probability");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
          throw ValidationError("leaf probabilities do not sum to 1");
        }
      }
      continue;
    }
    const auto bad_child = [&](std::int32_t c) {
      return c <= static_cast<std::int32_t>(i) ||
             c >= static_cast<std::int32_t>(nodes_.size());
    };
    if (bad_child(n.left) || bad_child(n.right) || n.left == n.right) {
      throw ValidationError("node " + std::to_string(i) +
                            " has invalid children");
    }
    if (n.cover != nodes_[n.left].cover + nodes_[n.right].cover) {
      throw ValidationError("cover not conserved at node " + std::to_string(i));
    }
  }
}

void Forest::check() const {
  if (trees.empty()) throw ValidationError("forest has no trees");
  for (const Tree& t : trees) {
    if (t.value_dim() != value_dim()) {
      throw ValidationError("tree value dimension does not match task");
    }
    for (const TreeNode& n : t.nodes()) {
      if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= num_features) {
        throw ValidationError("tree splits on a feature out of range");
      }
    }
    t.check(task == Task::kClassification);
  }
}

std::vector<std::size_t> bootstrap_sample(std::uint64_t seed,
                                          std::size_t tree_index,
                                          std::size_t n) {
  SplitMix64 rng(tree_stream_seed(seed, tree_index, kBootstrapStream));
  std::vector<std::size_t> sample(n);
  for (auto& s : sample) s = static_cast<std::size_t>(uniform_index(rng, n));
  return sample;
}

Forest train_with_samples(const Dataset& ds, const Hyperparams& hyper,
                          std::uint64_t seed,
                          const std::vector<std::vector<std::size_t>>& samples,
                          const TrainOptions& options) {
  validate(ds);
  validate_hyper(hyper, ds.cols());
  if (samples.size() != hyper.n_trees) {
    throw ValidationError("expected one bootstrap sample per tree");
  }
  for (const auto& s : samples) {
    if (s.empty()) throw ValidationError("bootstrap sample is empty");
    for (std::size_t r : s) {
      if (r >= ds.rows()) throw ValidationError("bootstrap row out of range");
    }
  }

  Forest f;
  f.task = ds.task();
  f.hyper = hyper;
  f.seed = seed;
  f.num_features = ds.cols();
  if (f.task == Task::kClassification) f.class_levels = ds.categorical().levels;
  f.trees.resize(hyper.n_trees);

  parallel_for(hyper.n_trees, options.threads, [&](std::size_t t) {
    TreeGrower grower(ds.x, ds, hyper,
                      tree_stream_seed(seed, t, kFeatureStream));
    Tree tree = grower.grow(samples[t]);
    tree.recount_covers(ds.x);
    f.trees[t] = std::move(tree);
  });
  return f;
}

Forest train(const Dataset& ds, const Hyperparams& hyper, std::uint64_t seed,
             const TrainOptions& options) {
  std::vector<std::vector<std::size_t>> samples(hyper.n_trees);
  for (std::size_t t = 0; t < hyper.n_trees; ++t) {
    samples[t] = bootstrap_sample(seed, t, ds.rows());
  }
  return train_with_samples(ds, hyper, seed, samples, options);
}

std::vector<double> tree_output(const Tree& tree, std::span<const double> x) {
  const auto v = tree.value(tree.leaf_for(x));
  return {v.begin(), v.end()};
}

Prediction predict(const Forest& f, std::span<const double> x) {
  if (x.size() != f.num_features) {
    throw ValidationError("expected " + std::to_string(f.num_features) +
                          " features, got " + std::to_string(x.size()));
  }
  const std::size_t dim = f.value_dim();
  std::vector<double> sum(dim, 0.0);
  for (const Tree& t : f.trees) {
    const auto v = t.value(t.leaf_for(x));
    for (std::size_t k = 0; k < dim; ++k) sum[k] += v[k];
  }
  const double count = static_cast<double>(f.trees.size());
  Prediction out;
  if (f.task == Task::kRegression) {
    out.value = sum[0] / count;
    return out;
  }
  out.probabilities.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) out.probabilities[k] = sum[k] / count;
  out.predicted_class = static_cast<int>(
      std::max_element(out.probabilities.begin(), out.probabilities.end()) -
      out.probabilities.begin());
  return out;
}

double scalar_margin(const Forest& f, std::span<const double> x,
                     std::optional<int> target_class) {
  if (f.task == Task::kRegression) {
    if (target_class) {
      throw ValidationError("target_class is only valid for classification");
    }
    return predict(f, x).value;
  }
  if (!target_class) {
    throw ValidationError("classification margins need a target_class");
  }
  if (*target_class < 0 ||
      static_cast<std::size_t>(*target_class) >= f.class_levels.size()) {
    throw ValidationError("target_class " + std::to_string(*target_class) +
                          " out of range for " +
                          std::to_string(f.class_levels.size()) + " classes");
  }
  return predict(f, x).probabilities[*target_class];
}

}  // namespace cheem
