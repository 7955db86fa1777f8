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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cheem/error.hpp"
#include "cheem/forest.hpp"
#include "cheem/random.hpp"
#include "cheem/shap.hpp"
#include "support/test_support.hpp"

namespace cheem {
namespace {

// Stump on feature 0 at threshold 0: covers 50/50, leaves 0 and 10.
Tree stump(std::size_t value_dim = 1) {
  std::vector<TreeNode> nodes(3);
  nodes[0] = {0, 0.0, 1, 2, 100};
  nodes[1].cover = 50;
  nodes[2].cover = 50;
  std::vector<double> values(3 * value_dim, 0.0);
  values[2 * value_dim] = 10.0;
  return Tree(nodes, values, value_dim);
}

// Root splits feature 0 at 0; left child splits feature 1 at 0 into leaves
// 1 (cover 10) and 3 (cover 30); right child splits feature 2 at 0 into
// leaves 5 (cover 20) and 9 (cover 40).
Tree depth_two() {
  std::vector<TreeNode> nodes(7);
  nodes[0] = {0, 0.0, 1, 4, 100};
  nodes[1] = {1, 0.0, 2, 3, 40};
  nodes[2].cover = 10;
  nodes[3].cover = 30;
  nodes[4] = {2, 0.0, 5, 6, 60};
  nodes[5].cover = 20;
  nodes[6].cover = 40;
  return Tree(nodes, {0, 0, 1, 3, 0, 5, 9}, 1);
}

Forest single_tree_forest(Tree t, std::size_t p) {
  Forest f;
  f.task = Task::kRegression;
  f.num_features = p;
  f.hyper = {1, 1, 1};
  f.trees.push_back(std::move(t));
  return f;
}

FeatureMask mask_of(std::size_t p, std::initializer_list<std::size_t> known) {
  FeatureMask m(p, 0);
  for (std::size_t j : known) m[j] = 1;
  return m;
}

void expect_vectors_near(const std::vector<double>& a,
                         const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_NEAR(a[j], b[j], tol) << "feature " << j;
  }
}

TEST(ConditionalExpectation, Examples) {
  const Tree s = stump();
  const std::vector<double> right{1.0, 0.0, 0.0};
  EXPECT_EQ(conditional_expectation(s, right, mask_of(3, {})), 5.0);
  EXPECT_EQ(conditional_expectation(s, right, mask_of(3, {0, 1, 2})), 10.0);

  const Tree t = depth_two();
  const std::vector<double> x{0.5, -0.5, 0.5};
  // Hand evaluation: follow the right branch, then weight 5 and 9 by 20/40.
  EXPECT_DOUBLE_EQ(conditional_expectation(t, x, mask_of(3, {0})),
                   (20.0 * 5 + 40.0 * 9) / 60.0);
  EXPECT_DOUBLE_EQ(conditional_expectation(t, x, mask_of(3, {1})),
                   0.4 * 1.0 + 0.6 * (20.0 * 5 + 40.0 * 9) / 60.0);
  EXPECT_DOUBLE_EQ(conditional_expectation(t, x, mask_of(3, {0, 1, 2})), 9.0);
  EXPECT_DOUBLE_EQ(expected_value(t), (10.0 + 90.0 + 100.0 + 360.0) / 100.0);
}

TEST(ConditionalExpectation, AllKnownIsPrediction) {
  SplitMix64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Tree t = testing::RandomTreeBuilder(rng, 6, 5).build();
    const auto x = testing::random_point(rng, 6);
    EXPECT_EQ(conditional_expectation(t, x, FeatureMask(6, 1)),
              tree_output(t, x)[0]);
  }
}

TEST(ConditionalExpectation, MatchesRecursiveOracle) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Tree t = testing::RandomTreeBuilder(rng, 5, 5).build();
    const auto x = testing::random_point(rng, 5);
    const auto bits = uniform_index(rng, 32);
    FeatureMask known(5, 0);
    std::vector<bool> oracle_known(5, false);
    for (std::size_t j = 0; j < 5; ++j) {
      known[j] = (bits >> j) & 1u;
      oracle_known[j] = known[j] != 0;
    }
    EXPECT_NEAR(conditional_expectation(t, x, known),
                testing::oracle_expectation(t, x, oracle_known, 0, 0), 1e-12);
  }
}

TEST(ExactShapley, SingleFeature) {
  std::vector<TreeNode> nodes(3);
  nodes[0] = {0, 0.0, 1, 2, 4};
  nodes[1].cover = 1;
  nodes[2].cover = 3;
  const Tree t(nodes, {0.0, 2.0, 6.0}, 1);
  const std::vector<double> x{-1.0};
  const auto phi = exact_shapley(t, x);
  EXPECT_DOUBLE_EQ(phi[0], 2.0 - expected_value(t));
}

TEST(ExactShapley, SymmetricFeaturesShareCredit) {
  // f = 1 iff x0 > 0 and x1 > 0, built symmetrically.
  std::vector<TreeNode> nodes(5);
  nodes[0] = {0, 0.0, 1, 2, 40};
  nodes[1].cover = 20;
  nodes[2] = {1, 0.0, 3, 4, 20};
  nodes[3].cover = 10;
  nodes[4].cover = 10;
  const Tree t(nodes, {0, 0, 0, 0, 1}, 1);
  const std::vector<double> x{0.7, 0.7};
  const auto phi = exact_shapley(t, x);
  EXPECT_NEAR(phi[0], phi[1], 1e-12);
  const auto fast = tree_shap(t, x, 2);
  EXPECT_NEAR(fast[0], fast[1], 1e-12);
}

TEST(ExactShapley, MatchesPermutationOracle) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t p = 2 + uniform_index(rng, 5);
    const Tree t = testing::RandomTreeBuilder(rng, p, 4).build();
    const auto x = testing::random_point(rng, p);
    expect_vectors_near(exact_shapley(t, x),
                        testing::oracle_permutation_shapley(t, x, p), 1e-12);
  }
}

TEST(ExactShapley, RejectsTooManyFeatures) {
  SplitMix64 rng(4);
  const Forest f = testing::random_forest(rng, 1, 21, 3);
  EXPECT_THROW(exact_shapley(f, testing::random_point(rng, 21)), ValidationError);
}

TEST(TreeShap, StumpExample) {
  const Forest f = single_tree_forest(stump(), 4);
  const auto phi = tree_shap(f, std::vector<double>{1.0, 0.3, -2.0, 0.0});
  EXPECT_EQ(phi, (std::vector<double>{5.0, 0.0, 0.0, 0.0}));
}

TEST(TreeShap, MatchesExactOnFiftyTrees) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 1 + uniform_index(rng, 8);
    const std::size_t depth = 1 + uniform_index(rng, 4);
    const Tree t = testing::RandomTreeBuilder(rng, p, depth).build();
    const auto x = testing::random_point(rng, p);
    expect_vectors_near(tree_shap(t, x, p), exact_shapley(t, x), 1e-10);
  }
}

TEST(TreeShap, PropertyOracleEquivalenceDeepTrees) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 2 + uniform_index(rng, 7);
    const std::size_t depth = 1 + uniform_index(rng, 6);
    const std::size_t dim = trial % 4 == 0 ? 3 : 1;
    const Tree t = testing::RandomTreeBuilder(rng, p, depth, dim).build();
    const auto x = testing::random_point(rng, p);
    const std::size_t component = uniform_index(rng, dim);
    expect_vectors_near(tree_shap(t, x, p, component),
                        exact_shapley(t, x, component), 1e-10);
  }
}

TEST(TreeShap, PropertyLocalAccuracyAndLinearity) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t p = 2 + uniform_index(rng, 6);
    const Forest f = testing::random_forest(rng, 1 + uniform_index(rng, 10), p, 5);
    const auto x = testing::random_point(rng, p);
    const auto phi = tree_shap(f, x);
    double base = 0.0;
    std::vector<double> mean(p, 0.0);
    for (const Tree& t : f.trees) {
      base += expected_value(t);
      const auto per_tree = tree_shap(t, x, p);
      for (std::size_t j = 0; j < p; ++j) mean[j] += per_tree[j];
    }
    base /= static_cast<double>(f.trees.size());
    for (double& m : mean) m /= static_cast<double>(f.trees.size());
    const double margin = scalar_margin(f, x);
    EXPECT_NEAR(std::accumulate(phi.begin(), phi.end(), 0.0), margin - base,
                1e-8 * std::max(1.0, std::abs(margin)));
    expect_vectors_near(phi, mean, 1e-12);
  }
}

TEST(TreeShap, PropertyUnusedFeatureIsExactlyZero) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    // Trees over 4 features inside a 6-feature forest: features 4, 5 unused.
    Forest f = testing::random_forest(rng, 3, 4, 5);
    f.num_features = 6;
    const auto x = testing::random_point(rng, 6);
    const auto phi = tree_shap(f, x);
    EXPECT_EQ(phi[4], 0.0);
    EXPECT_EQ(phi[5], 0.0);
  }
}

TEST(TreeShap, RejectsArityMismatch) {
  const Forest f = single_tree_forest(stump(), 4);
  EXPECT_THROW(tree_shap(f, std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST(AttributionMatrix, RegressionLocalAccuracy) {
  const Dataset ds = testing::synthetic_regression(200, 5, 9);
  const Forest f = train(ds, default_hyper(ds.task(), ds.rows(), ds.cols()), 3);
  const AttributionMatrix a = attribution_matrix(f, ds);
  ASSERT_EQ(a.values.rows(), 200);
  ASSERT_EQ(a.values.cols(), 5);
  ASSERT_EQ(a.baselines.size(), 1u);
  double mean_margin = 0.0;
  for (Eigen::Index i = 0; i < 200; ++i) mean_margin += scalar_margin(f, row_span(ds.x, i));
  EXPECT_NEAR(a.baselines[0], mean_margin / 200.0, 1e-12);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const double margin = scalar_margin(f, row_span(ds.x, i));
    EXPECT_LE(std::abs(a.values.row(i).sum() - (margin - a.baselines[0])),
              1e-8 * std::max(1.0, std::abs(margin)));
  }
}

TEST(AttributionMatrix, PenguinsShapeAndPerClassBaselines) {
  const Dataset ds = testing::load_penguins();
  const Forest f = train(ds, default_hyper(ds.task(), ds.rows(), ds.cols()), 1);
  const AttributionMatrix a = attribution_matrix(f, ds);
  EXPECT_EQ(a.values.rows(), 333);
  EXPECT_EQ(a.values.cols(), 4);
  ASSERT_EQ(a.baselines.size(), 3u);
  ASSERT_EQ(a.explained_class.size(), 333u);
  for (std::size_t i = 0; i < 333; ++i) {
    const auto x = row_span(ds.x, static_cast<Eigen::Index>(i));
    EXPECT_EQ(a.explained_class[i], predict(f, x).predicted_class);
    const double margin = scalar_margin(f, x, a.explained_class[i]);
    EXPECT_LE(std::abs(a.values.row(static_cast<Eigen::Index>(i)).sum() -
                       (margin - a.baseline_for_row(i))),
              1e-8);
  }
}

TEST(AttributionMatrix, ConstantForestGivesZeros) {
  const Dataset ds = testing::synthetic_regression(20, 3, 1);
  Forest f;
  f.task = Task::kRegression;
  f.num_features = 3;
  TreeNode leaf;
  leaf.cover = 20;
  for (int t = 0; t < 4; ++t) f.trees.emplace_back(std::vector<TreeNode>{leaf}, std::vector<double>{2.5}, 1);
  const AttributionMatrix a = attribution_matrix(f, ds);
  EXPECT_TRUE(a.values.isZero(0.0));
  EXPECT_EQ(a.baselines[0], 2.5);
}

TEST(AttributionMatrix, ThreadCountDoesNotChangeResults) {
  const Dataset ds = testing::synthetic_regression(90, 5, 10);
  const Forest f = train(ds, {20, 2, 5}, 3);
  const AttributionMatrix a = attribution_matrix(f, ds, {1});
  const AttributionMatrix b = attribution_matrix(f, ds, {4});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.baselines, b.baselines);
}

TEST(Breakdown, TelescopesAndValidatesOrder) {
  SplitMix64 rng(11);
  const Forest f = testing::random_forest(rng, 5, 4, 4);
  const auto x = testing::random_point(rng, 4);
  const std::vector<int> order{2, 0, 3, 1};
  const BreakdownResult b = breakdown(f, x, order);
  EXPECT_NEAR(std::accumulate(b.contributions.begin(), b.contributions.end(), 0.0),
              b.margin - b.baseline, 1e-10);
  EXPECT_NEAR(b.margin, scalar_margin(f, x), 1e-12);
  EXPECT_THROW(breakdown(f, x, std::vector<int>{0, 1, 2}), ValidationError);
  EXPECT_THROW(breakdown(f, x, std::vector<int>{0, 1, 1, 3}), ValidationError);
  EXPECT_THROW(breakdown(f, x, std::vector<int>{0, 1, 2, 4}), ValidationError);
}

TEST(Breakdown, AdditiveForestIsOrderIndependent) {
  SplitMix64 rng(12);
  const Forest f = testing::additive_forest(rng, 5, 15);
  const auto x = testing::random_point(rng, 5);
  std::vector<std::vector<int>> orders;
  for (int r = 0; r < 10; ++r) orders.push_back(random_permutation(5, rng));
  const SampledShap s = breakdown_distribution(f, x, orders);
  for (Eigen::Index j = 0; j < 5; ++j) {
    const double spread = s.contributions.col(j).maxCoeff() - s.contributions.col(j).minCoeff();
    EXPECT_LE(spread, 1e-10);
  }
}

TEST(Breakdown, AverageOverAllOrdersIsShapley) {
  SplitMix64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 2 + uniform_index(rng, 5);
    const Forest f = testing::random_forest(rng, 3, p, 4);
    const auto x = testing::random_point(rng, p);
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<int>> all;
    do {
      all.push_back(order);
    } while (std::next_permutation(order.begin(), order.end()));
    const SampledShap s = breakdown_distribution(f, x, all);
    expect_vectors_near(s.mean, exact_shapley(f, x), 1e-10);
  }
}

TEST(SampledShap, DeterministicAndSummarised) {
  SplitMix64 rng(14);
  const Forest f = testing::random_forest(rng, 4, 5, 4, 3);
  const auto x = testing::random_point(rng, 5);
  const SampledShap a = sampled_shap(f, x, 25, 77, 1);
  const SampledShap b = sampled_shap(f, x, 25, 77, 1);
  EXPECT_EQ(a.contributions, b.contributions);
  EXPECT_EQ(a.orders, b.orders);
  ASSERT_EQ(a.contributions.rows(), 25);
  for (Eigen::Index j = 0; j < 5; ++j) {
    std::vector<double> column(a.contributions.col(j).begin(), a.contributions.col(j).end());
    std::sort(column.begin(), column.end());
    EXPECT_EQ(a.median[j], column[12]);
    EXPECT_NEAR(a.mean[j], a.contributions.col(j).mean(), 1e-15);
  }
  EXPECT_THROW(sampled_shap(f, x, 0, 1, 1), ValidationError);
}

TEST(SampledShap, EvenCountMedianAveragesMiddlePair) {
  SplitMix64 rng(15);
  const Forest f = testing::random_forest(rng, 4, 3, 4);
  const auto x = testing::random_point(rng, 3);
  const SampledShap s = sampled_shap(f, x, 4, 9);
  for (Eigen::Index j = 0; j < 3; ++j) {
    std::vector<double> column(s.contributions.col(j).begin(), s.contributions.col(j).end());
    std::sort(column.begin(), column.end());
    EXPECT_EQ(s.median[j], (column[1] + column[2]) / 2.0);
  }
}

TEST(SampledShap, CsvLayout) {
  SplitMix64 rng(16);
  const Forest f = testing::random_forest(rng, 2, 3, 3);
  const SampledShap s = sampled_shap(f, testing::random_point(rng, 3), 3, 1);
  const std::string text = to_csv(s, {"a", "b,c", "d"});
  EXPECT_EQ(text.substr(0, text.find('\n')), "sequence,a,\"b,c\",d");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

}  // namespace
}  // namespace cheem
