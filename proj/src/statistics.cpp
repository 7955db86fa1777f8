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

#include "cheem/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Cholesky>

#include "cheem/error.hpp"

namespace cheem {

std::vector<double> mahalanobis_distances(const Matrix& z,
                                          const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != z.cols() || covariance.cols() != z.cols()) {
    throw ValidationError("covariance does not match the data width");
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(covariance);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw ValidationError("covariance is not positive definite");
  }
  std::vector<double> d(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Eigen::VectorXd row = z.row(i).transpose();
    const double q = row.dot(ldlt.solve(row));
    d[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, q));
  }
  return d;
}

std::vector<double> log_mahalanobis(const Matrix& z) {
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();
  if (n < 2 || p < 1) throw ValidationError("need at least two rows");
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Matrix centered = z.rowwise() - mean;
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  double ridge = 1e-8 * cov.trace() / static_cast<double>(p);
  // An all-zero matrix has no scale at all; any positive ridge gives d = 0.
  if (!(ridge > 0.0)) ridge = 1e-8;
  cov.diagonal().array() += ridge;

  std::vector<double> d = mahalanobis_distances(centered, cov);
  for (double& v : d) v = std::log(std::max(v, kMinDistance));
  return d;
}

double class_separation(const Matrix& points, std::span<const int> classes) {
  if (static_cast<std::size_t>(points.rows()) != classes.size()) {
    throw ValidationError("one class label per point is required");
  }
  const Eigen::RowVectorXd grand = points.colwise().mean();
  std::map<int, std::pair<Eigen::RowVectorXd, double>> groups;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    auto [it, inserted] = groups.try_emplace(
        classes[i], Eigen::RowVectorXd::Zero(points.cols()), 0.0);
    it->second.first += points.row(i);
    it->second.second += 1.0;
  }
  double between = 0.0;
  for (auto& [label, group] : groups) {
    group.first /= group.second;
    between += group.second * (group.first - grand).squaredNorm();
  }
  double within = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    within += (points.row(i) - groups.at(classes[i]).first).squaredNorm();
  }
  return within > 0.0 ? between / within
                      : std::numeric_limits<double>::infinity();
}

}  // namespace cheem
