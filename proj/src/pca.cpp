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

#include "cheem/pca.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "cheem/error.hpp"

namespace cheem {
namespace {

// Relative eigenvalue below which the second component counts as absent.
constexpr double kRankTolerance = 1e-12;

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index largest = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(largest))) largest = i;
  }
  if (v(largest) < 0.0) v = -v;
}

}  // namespace

Embedding2D pca2(const Matrix& values) {
  const Eigen::Index n = values.rows();
  const Eigen::Index p = values.cols();
  if (n <= 2) throw ValidationError("PCA needs more than two rows");
  if (p < 2) throw ValidationError("PCA needs at least two columns");

  const Eigen::RowVectorXd mean = values.colwise().mean();
  const Eigen::MatrixXd centered = values.rowwise() - mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw ValidationError("covariance eigendecomposition failed");
  }
  // Eigenvalues come back in increasing order.
  const Eigen::VectorXd& eigenvalues = solver.eigenvalues();
  const double total = cov.trace();

  Embedding2D out;
  out.loadings.resize(p, 2);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(p - 1 - c);
    fix_sign(v);
    out.loadings.col(c) = v;
    const double lambda = std::max(0.0, eigenvalues(p - 1 - c));
    out.variance_explained[c] = total > 0.0 ? lambda / total : 0.0;
  }
  out.coordinates = centered * out.loadings;

  const double second = std::max(0.0, eigenvalues(p - 2));
  if (!(total > 0.0) || second <= kRankTolerance * total) {
    out.rank_deficient = true;
    out.variance_explained[1] = 0.0;
    out.coordinates.col(1).setZero();
    if (!(total > 0.0)) out.coordinates.col(0).setZero();
  }
  return out;
}

}  // namespace cheem
