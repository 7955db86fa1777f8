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

#include "cheem/shap.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <sstream>
#include <thread>
#include <utility>

#include "cheem/csv.hpp"
#include "cheem/error.hpp"
#include "cheem/random.hpp"

namespace cheem {
namespace {

std::size_t component_for(const Forest& f, std::optional<int> target_class) {
  if (f.task == Task::kRegression) {
    if (target_class) {
      throw ValidationError("target_class is only valid for classification");
    }
    return 0;
  }
  if (!target_class) {
    throw ValidationError("classification attributions need a target_class");
  }
  if (*target_class < 0 ||
      static_cast<std::size_t>(*target_class) >= f.class_levels.size()) {
    throw ValidationError("target_class " + std::to_string(*target_class) +
                          " out of range for " +
                          std::to_string(f.class_levels.size()) + " classes");
  }
  return static_cast<std::size_t>(*target_class);
}

void check_arity(const Forest& f, std::span<const double> x) {
  if (x.size() != f.num_features) {
    throw ValidationError("expected " + std::to_string(f.num_features) +
                          " features, got " + std::to_string(x.size()));
  }
}

template <typename IsKnown>
double expectation_impl(const Tree& tree, std::span<const double> x,
                        std::size_t component, IsKnown&& is_known) {
  struct Item {
    std::size_t node;
    double weight;
  };
  std::vector<Item> stack{{0, 1.0}};
  double total = 0.0;
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    const TreeNode& n = tree.node(item.node);
    if (n.is_leaf()) {
      total += item.weight * tree.value(item.node)[component];
      continue;
    }
    if (is_known(n.feature)) {
      const auto next = x[n.feature] <= n.threshold ? n.left : n.right;
      stack.push_back({static_cast<std::size_t>(next), item.weight});
    } else {
      const double cover = static_cast<double>(n.cover);
      const auto& l = tree.node(n.left);
      const auto& r = tree.node(n.right);
      stack.push_back({static_cast<std::size_t>(n.right),
                       item.weight * static_cast<double>(r.cover) / cover});
      stack.push_back({static_cast<std::size_t>(n.left),
                       item.weight * static_cast<double>(l.cover) / cover});
    }
  }
  return total;
}

double expectation_for_mask(const Tree& tree, std::span<const double> x,
                            std::uint32_t mask, std::size_t component) {
  return expectation_impl(tree, x, component, [mask](int feature) {
    return ((mask >> feature) & 1U) != 0;
  });
}

// |S|! (p - |S| - 1)! / p!
std::vector<double> shapley_weights(std::size_t p) {
  std::vector<double> factorial(p + 1, 1.0);
  for (std::size_t i = 1; i <= p; ++i) {
    factorial[i] = factorial[i - 1] * static_cast<double>(i);
  }
  std::vector<double> w(p);
  for (std::size_t s = 0; s < p; ++s) {
    w[s] = factorial[s] * factorial[p - s - 1] / factorial[p];
  }
  return w;
}

std::vector<double> shapley_from_values(const std::vector<double>& v,
                                        std::size_t p) {
  const std::vector<double> weight = shapley_weights(p);
  std::vector<double> phi(p, 0.0);
  const std::uint32_t full = 1U << p;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t j = 0; j < p; ++j) {
      const std::uint32_t bit = 1U << j;
      if (mask & bit) continue;
      phi[j] += weight[size] * (v[mask | bit] - v[mask]);
    }
  }
  return phi;
}

void check_exact_size(std::size_t p) {
  if (p > kMaxExactFeatures) {
    throw ValidationError("exact Shapley enumeration supports at most " +
                          std::to_string(kMaxExactFeatures) +
                          " features, got " + std::to_string(p) +
                          "; use tree_shap instead");
  }
}

// Path bookkeeping for the polynomial-time recursion. Each element is one
// unique feature on the current root-to-node path: the fraction of cover
// that flows along the path when the feature is unknown (zero_fraction), the
// indicator that x follows the path (one_fraction), and the permutation
// weight of subsets of the given size (weight).
struct PathElement {
  int feature;
  double zero_fraction;
  double one_fraction;
  double weight;
};

// `inv[k]` holds 1/k in the helpers below.
void extend_path(PathElement* path, std::size_t depth, double zero_fraction,
                 double one_fraction, int feature, const double* inv) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  const double one = one_fraction * inv[depth + 1];
  const double zero = zero_fraction * inv[depth + 1];
  for (std::size_t i = depth; i-- > 0;) {
    path[i + 1].weight += one * path[i].weight * static_cast<double>(i + 1);
    path[i].weight = zero * path[i].weight * static_cast<double>(depth - i);
  }
}

void unwind_path(PathElement* path, std::size_t depth, std::size_t index,
                 const double* inv) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double denom = static_cast<double>(depth + 1);
  if (one != 0.0) {
    const double up = denom / one;
    const double down = zero / denom;
    double next = path[depth].weight;
    for (std::size_t i = depth; i-- > 0;) {
      const double tmp = path[i].weight;
      path[i].weight = next * up * inv[i + 1];
      next = tmp - path[i].weight * down * static_cast<double>(depth - i);
    }
  } else {
    const double scale = denom / zero;
    for (std::size_t i = 0; i < depth; ++i) {
      path[i].weight *= scale * inv[depth - i];
    }
  }
  for (std::size_t i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight of the path with element `index` removed.
double unwound_sum(const PathElement* path, std::size_t depth,
                   std::size_t index, const double* inv) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double denom = static_cast<double>(depth + 1);
  double total = 0.0;
  if (one != 0.0) {
    const double up = denom / one;
    const double down = zero / denom;
    double next = path[depth].weight;
    for (std::size_t i = depth; i-- > 0;) {
      const double tmp = next * up * inv[i + 1];
      total += tmp;
      next = path[i].weight - tmp * down * static_cast<double>(depth - i);
    }
  } else {
    const double scale = denom / zero;
    for (std::size_t i = 0; i < depth; ++i) {
      total += path[i].weight * inv[depth - i];
    }
    total *= scale;
  }
  return total;
}

class TreeShapRecursion {
 public:
  TreeShapRecursion(const Tree& tree, std::span<const double> x,
                    std::size_t component, std::span<double> phi)
      : tree_(tree), x_(x), component_(component), phi_(phi) {
    const std::size_t d = tree.depth() + 2;
    buffer_.resize(d * (d + 1) / 2 + d);
    inv_.resize(d + 1);
    for (std::size_t k = 1; k <= d; ++k) inv_[k] = 1.0 / static_cast<double>(k);
  }

  void run() { recurse(0, 0, buffer_.data(), 1.0, 1.0, -1); }

 private:
  void recurse(std::size_t node, std::size_t depth, PathElement* parent_path,
               double zero_fraction, double one_fraction, int feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature,
                inv_.data());

    const TreeNode& n = tree_.node(node);
    if (n.is_leaf()) {
      const double value = tree_.value(node)[component_];
      // Elements with one_fraction 0 share one unwound sum up to a factor
      // of 1/zero_fraction, which cancels against their weight.
      double cold_sum = 0.0;
      bool have_cold_sum = false;
      for (std::size_t i = 1; i <= depth; ++i) {
        const PathElement& e = path[i];
        if (e.one_fraction == 0.0) {
          if (!have_cold_sum) {
            for (std::size_t j = 0; j < depth; ++j) {
              cold_sum += path[j].weight * inv_[depth - j];
            }
            cold_sum *= static_cast<double>(depth + 1);
            have_cold_sum = true;
          }
          phi_[e.feature] -= cold_sum * value;
        } else {
          const double w = unwound_sum(path, depth, i, inv_.data());
          phi_[e.feature] += w * (e.one_fraction - e.zero_fraction) * value;
        }
      }
      return;
    }

    const bool go_left = x_[n.feature] <= n.threshold;
    const auto hot = static_cast<std::size_t>(go_left ? n.left : n.right);
    const auto cold = static_cast<std::size_t>(go_left ? n.right : n.left);
    const double cover = static_cast<double>(n.cover);
    const double hot_fraction =
        static_cast<double>(tree_.node(hot).cover) / cover;
    const double cold_fraction =
        static_cast<double>(tree_.node(cold).cover) / cover;

    // A feature seen earlier on the path is folded into this split.
    double incoming_zero = 1.0;
    double incoming_one = 1.0;
    std::size_t index = 0;
    while (index <= depth && path[index].feature != n.feature) ++index;
    if (index <= depth) {
      incoming_zero = path[index].zero_fraction;
      incoming_one = path[index].one_fraction;
      unwind_path(path, depth, index, inv_.data());
      --depth;
    }
    recurse(hot, depth + 1, path, hot_fraction * incoming_zero, incoming_one,
            n.feature);
    recurse(cold, depth + 1, path, cold_fraction * incoming_zero, 0.0,
            n.feature);
  }

  const Tree& tree_;
  std::span<const double> x_;
  std::size_t component_;
  std::span<double> phi_;
  std::vector<PathElement> buffer_;
  std::vector<double> inv_;
};

}  // namespace

double conditional_expectation(const Tree& tree, std::span<const double> x,
                               const FeatureMask& known,
                               std::size_t component) {
  return expectation_impl(tree, x, component, [&known](int feature) {
    return static_cast<std::size_t>(feature) < known.size() &&
           known[feature] != 0;
  });
}

double conditional_expectation(const Forest& f, std::span<const double> x,
                               const FeatureMask& known,
                               std::optional<int> target_class) {
  check_arity(f, x);
  const std::size_t component = component_for(f, target_class);
  double sum = 0.0;
  for (const Tree& t : f.trees) {
    sum += conditional_expectation(t, x, known, component);
  }
  return sum / static_cast<double>(f.trees.size());
}

double expected_value(const Tree& tree, std::size_t component) {
  const std::vector<double> none;
  return expectation_impl(tree, none, component, [](int) { return false; });
}

std::vector<double> exact_shapley(const Tree& tree, std::span<const double> x,
                                  std::size_t component) {
  const std::size_t p = x.size();
  check_exact_size(p);
  std::vector<double> v(std::size_t{1} << p);
  for (std::uint32_t mask = 0; mask < v.size(); ++mask) {
    v[mask] = expectation_for_mask(tree, x, mask, component);
  }
  return shapley_from_values(v, p);
}

std::vector<double> exact_shapley(const Forest& f, std::span<const double> x,
                                  std::optional<int> target_class) {
  check_arity(f, x);
  const std::size_t p = x.size();
  check_exact_size(p);
  const std::size_t component = component_for(f, target_class);
  std::vector<double> v(std::size_t{1} << p, 0.0);
  for (const Tree& t : f.trees) {
    for (std::uint32_t mask = 0; mask < v.size(); ++mask) {
      v[mask] += expectation_for_mask(t, x, mask, component);
    }
  }
  for (double& value : v) value /= static_cast<double>(f.trees.size());
  return shapley_from_values(v, p);
}

void tree_shap(const Tree& tree, std::span<const double> x,
               std::size_t component, std::span<double> phi) {
  TreeShapRecursion(tree, x, component, phi).run();
}

std::vector<double> tree_shap(const Tree& tree, std::span<const double> x,
                              std::size_t num_features, std::size_t component) {
  std::vector<double> phi(num_features, 0.0);
  tree_shap(tree, x, component, phi);
  return phi;
}

std::vector<double> tree_shap(const Forest& f, std::span<const double> x,
                              std::optional<int> target_class) {
  check_arity(f, x);
  const std::size_t component = component_for(f, target_class);
  std::vector<double> phi(f.num_features, 0.0);
  for (const Tree& t : f.trees) tree_shap(t, x, component, phi);
  for (double& v : phi) v /= static_cast<double>(f.trees.size());
  return phi;
}

AttributionMatrix attribution_matrix(const Forest& f, const Dataset& ds,
                                     const AttributionOptions& options) {
  if (ds.cols() != f.num_features) {
    throw ValidationError("dataset arity does not match the forest");
  }
  const std::size_t n = ds.rows();
  const std::size_t p = ds.cols();
  const std::size_t dim = f.value_dim();

  AttributionMatrix out;
  out.values = Matrix::Zero(static_cast<Eigen::Index>(n),
                            static_cast<Eigen::Index>(p));
  // Baselines from the training predictions; the same pass fixes the class
  // explained in each row.
  std::vector<double> sums(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Prediction pred = predict(f, row_span(ds.x, static_cast<Eigen::Index>(i)));
    if (f.task == Task::kRegression) {
      sums[0] += pred.value;
    } else {
      for (std::size_t k = 0; k < dim; ++k) sums[k] += pred.probabilities[k];
      out.explained_class.push_back(pred.predicted_class);
    }
  }
  out.baselines.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    out.baselines[k] = sums[k] / static_cast<double>(n);
  }

  const auto explain_row = [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const std::optional<int> target =
        f.task == Task::kRegression ? std::nullopt
                                    : std::optional<int>(out.explained_class[i]);
    const std::vector<double> phi = tree_shap(f, row_span(ds.x, r), target);
    std::copy(phi.begin(), phi.end(), row_span(out.values, r).begin());
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) explain_row(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) explain_row(i);
      });
    }
  }
  return out;
}

BreakdownResult breakdown(const Forest& f, std::span<const double> x,
                          std::span<const int> order,
                          std::optional<int> target_class) {
  check_arity(f, x);
  const std::size_t p = f.num_features;
  std::vector<char> seen(p, 0);
  if (order.size() != p) {
    throw ValidationError("order must list each of the " + std::to_string(p) +
                          " features once");
  }
  for (int j : order) {
    if (j < 0 || static_cast<std::size_t>(j) >= p || seen[j]) {
      throw ValidationError("order is not a permutation of the features");
    }
    seen[j] = 1;
  }
  BreakdownResult out;
  out.order.assign(order.begin(), order.end());
  out.contributions.assign(p, 0.0);
  FeatureMask known(p, 0);
  double previous = conditional_expectation(f, x, known, target_class);
  out.baseline = previous;
  for (int j : order) {
    known[j] = 1;
    const double current = conditional_expectation(f, x, known, target_class);
    out.contributions[j] = current - previous;
    previous = current;
  }
  out.margin = previous;
  return out;
}

SampledShap breakdown_distribution(const Forest& f, std::span<const double> x,
                                   std::vector<std::vector<int>> orders,
                                   std::optional<int> target_class) {
  const std::size_t p = f.num_features;
  SampledShap out;
  out.contributions.resize(static_cast<Eigen::Index>(orders.size()),
                           static_cast<Eigen::Index>(p));
  for (std::size_t s = 0; s < orders.size(); ++s) {
    const BreakdownResult b = breakdown(f, x, orders[s], target_class);
    std::copy(b.contributions.begin(), b.contributions.end(),
              row_span(out.contributions, static_cast<Eigen::Index>(s)).begin());
  }
  out.orders = std::move(orders);
  out.mean.resize(p);
  out.median.resize(p);
  std::vector<double> column;
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = out.contributions.col(static_cast<Eigen::Index>(j));
    column.assign(col.begin(), col.end());
    if (column.empty()) continue;
    double sum = 0.0;
    for (double v : column) sum += v;
    out.mean[j] = sum / static_cast<double>(column.size());
    std::sort(column.begin(), column.end());
    const std::size_t mid = column.size() / 2;
    out.median[j] = column.size() % 2 == 1
                        ? column[mid]
                        : (column[mid - 1] + column[mid]) / 2.0;
  }
  return out;
}

SampledShap sampled_shap(const Forest& f, std::span<const double> x,
                         std::size_t n_sequences, std::uint64_t seed,
                         std::optional<int> target_class) {
  if (n_sequences == 0) throw ValidationError("n_sequences must be >= 1");
  SplitMix64 rng(seed);
  std::vector<std::vector<int>> orders;
  orders.reserve(n_sequences);
  for (std::size_t s = 0; s < n_sequences; ++s) {
    orders.push_back(random_permutation(f.num_features, rng));
  }
  return breakdown_distribution(f, x, std::move(orders), target_class);
}

std::string to_csv(const SampledShap& s,
                   const std::vector<std::string>& feature_names) {
  std::ostringstream out;
  out.precision(17);
  out << "sequence";
  for (const auto& name : feature_names) out << ',' << csv::escape(name);
  out << '\n';
  for (Eigen::Index r = 0; r < s.contributions.rows(); ++r) {
    out << r + 1;
    for (double v : row_span(s.contributions, r)) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace cheem
