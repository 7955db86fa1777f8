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

#include <cmath>

#include "cheem/error.hpp"
#include "cheem/pca.hpp"
#include "cheem/random.hpp"
#include "cheem/statistics.hpp"
#include "support/test_support.hpp"

namespace cheem {
namespace {

Matrix random_matrix(SplitMix64& rng, Eigen::Index n, Eigen::Index p) {
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = testing::uniform(rng, -1.0, 1.0) * (j + 1);
  }
  return m;
}

TEST(Pca, TwoByTwoClosedForm) {
  SplitMix64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x = random_matrix(rng, 30, 2);
    x.col(1) += testing::uniform(rng, -2.0, 2.0) * x.col(0);
    const Eigen::RowVector2d mean = x.colwise().mean();
    const Eigen::MatrixX2d c = x.rowwise() - mean;
    const double a = c.col(0).squaredNorm() / 29.0;
    const double d = c.col(1).squaredNorm() / 29.0;
    const double b = c.col(0).dot(c.col(1)) / 29.0;
    const double half = std::sqrt((a - d) * (a - d) / 4.0 + b * b);
    const double l1 = (a + d) / 2.0 + half;
    const double l2 = (a + d) / 2.0 - half;
    const double theta = 0.5 * std::atan2(2.0 * b, a - d);

    const Embedding2D e = pca2(x);
    EXPECT_NEAR(e.variance_explained[0], l1 / (a + d), 1e-12);
    EXPECT_NEAR(e.variance_explained[1], l2 / (a + d), 1e-12);
    // First loading is +-(cos theta, sin theta).
    EXPECT_NEAR(std::abs(e.loadings(0, 0) * std::cos(theta) +
                         e.loadings(1, 0) * std::sin(theta)),
                1.0, 1e-10);
  }
}

TEST(Pca, PropertyInvariants) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = static_cast<Eigen::Index>(5 + uniform_index(rng, 60));
    const auto p = static_cast<Eigen::Index>(2 + uniform_index(rng, 8));
    const Matrix x = random_matrix(rng, n, p);
    const Embedding2D e = pca2(x);
    ASSERT_EQ(e.coordinates.rows(), n);
    ASSERT_EQ(e.loadings.rows(), p);
    const Eigen::Matrix2d gram = e.loadings.transpose() * e.loadings;
    EXPECT_TRUE(gram.isApprox(Eigen::Matrix2d::Identity(), 1e-10));
    EXPECT_GE(e.variance_explained[0], e.variance_explained[1]);
    EXPECT_GE(e.variance_explained[1], 0.0);
    EXPECT_LE(e.variance_explained[0] + e.variance_explained[1], 1.0 + 1e-12);
    const Matrix centered = x.rowwise() - x.colwise().mean();
    EXPECT_TRUE(e.coordinates.isApprox(centered * e.loadings, 1e-10));
    for (int c = 0; c < 2; ++c) {
      Eigen::Index largest = 0;
      e.loadings.col(c).cwiseAbs().maxCoeff(&largest);
      EXPECT_GT(e.loadings(largest, c), 0.0);
    }
  }
}

TEST(Pca, RankDeficientAndDegenerate) {
  Matrix x(6, 3);
  for (int i = 0; i < 6; ++i) x.row(i) << i, 2.0 * i, -i;
  const Embedding2D e = pca2(x);
  EXPECT_TRUE(e.rank_deficient);
  EXPECT_NEAR(e.variance_explained[0], 1.0, 1e-12);
  EXPECT_TRUE(e.coordinates.col(1).isZero(0.0));
  EXPECT_THROW(pca2(Matrix(2, 3)), ValidationError);
  EXPECT_THROW(pca2(Matrix::Zero(5, 1)), ValidationError);
  const Embedding2D zero = pca2(Matrix::Zero(5, 3));
  EXPECT_TRUE(zero.rank_deficient);
  EXPECT_TRUE(zero.coordinates.isZero(0.0));
}

TEST(Mahalanobis, IdentityCovarianceIsEuclidean) {
  Matrix z(1, 2);
  z << 3.0, 4.0;
  const auto d = mahalanobis_distances(z, Eigen::Matrix2d::Identity());
  EXPECT_NEAR(d[0], 5.0, 1e-15);
  EXPECT_NEAR(std::log(d[0]), 1.6094379124341003, 1e-15);
  EXPECT_THROW(mahalanobis_distances(z, Eigen::Matrix3d::Identity()), ValidationError);
}

TEST(Mahalanobis, LogFloorsZeroDistance) {
  Matrix z = Matrix::Zero(4, 2);
  z(0, 0) = 1.0;
  z(1, 0) = -1.0;
  z(2, 1) = 1.0;
  z(3, 1) = -1.0;
  Matrix with_center(5, 2);
  with_center << z, Eigen::RowVector2d::Zero();
  const auto d = log_mahalanobis(with_center);
  EXPECT_EQ(d[4], std::log(1e-12));
  EXPECT_EQ(log_mahalanobis(Matrix::Zero(5, 3))[0], std::log(1e-12));
}

TEST(Mahalanobis, MatchesGaussianEliminationOracle) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = random_matrix(rng, 50, 3);
    const auto got = log_mahalanobis(z);
    const Eigen::RowVectorXd mean = z.colwise().mean();
    std::vector<std::vector<double>> cov(3, std::vector<double>(3, 0.0));
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < 50; ++i) cov[a][b] += (z(i, a) - mean(a)) * (z(i, b) - mean(b));
        cov[a][b] /= 49.0;
      }
    }
    const double ridge = 1e-8 * (cov[0][0] + cov[1][1] + cov[2][2]) / 3.0;
    for (int a = 0; a < 3; ++a) cov[a][a] += ridge;
    for (int i = 0; i < 50; ++i) {
      const std::vector<double> r{z(i, 0) - mean(0), z(i, 1) - mean(1), z(i, 2) - mean(2)};
      const auto s = testing::oracle_solve(cov, r);
      const double q = r[0] * s[0] + r[1] * s[1] + r[2] * s[2];
      EXPECT_NEAR(got[i], std::log(std::max(std::sqrt(q), 1e-12)), 1e-8);
    }
  }
}

TEST(Mahalanobis, SingularCovarianceStaysFinite) {
  Matrix z(8, 3);
  for (int i = 0; i < 8; ++i) z.row(i) << i, i, 0.5 * i;
  for (double v : log_mahalanobis(z)) EXPECT_TRUE(std::isfinite(v));
}

TEST(ClassSeparation, Example) {
  Matrix pts(4, 1);
  pts << 0.0, 2.0, 10.0, 12.0;
  const std::vector<int> cls{0, 0, 1, 1};
  // Group means 1 and 11 around 6: between 2*25*2 = 100, within 4 * 1 = 4.
  EXPECT_DOUBLE_EQ(class_separation(pts, cls), 25.0);
  EXPECT_THROW(class_separation(pts, std::vector<int>{0, 1}), ValidationError);
}

}  // namespace
}  // namespace cheem
