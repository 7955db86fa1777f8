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

#ifndef CHEEM_STATISTICS_HPP_
#define CHEEM_STATISTICS_HPP_

#include <span>
#include <vector>

#include "cheem/matrix.hpp"

namespace cheem {

// Floor applied to distances before taking the log.
inline constexpr double kMinDistance = 1e-12;

// sqrt(z_i' S^-1 z_i) for each row, S symmetric positive definite.
std::vector<double> mahalanobis_distances(const Matrix& z,
                                          const Eigen::MatrixXd& covariance);

// ln(max(d_i, 1e-12)) where d_i is the Mahalanobis length of row i under the
// sample covariance plus a ridge of 1e-8 * trace / p.
std::vector<double> log_mahalanobis(const Matrix& z);

// Between-class over within-class sum of squares of the rows of `points`.
double class_separation(const Matrix& points, std::span<const int> classes);

}  // namespace cheem

#endif  // CHEEM_STATISTICS_HPP_
