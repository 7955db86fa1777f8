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

#ifndef CHEEM_PCA_HPP_
#define CHEEM_PCA_HPP_

#include <array>

#include "cheem/matrix.hpp"

namespace cheem {

struct Embedding2D {
  Matrix coordinates;  // n x 2 scores
  Matrix loadings;     // p x 2, orthonormal columns
  std::array<double, 2> variance_explained{0.0, 0.0};  // fractions of total
  bool rank_deficient = false;  // second component zeroed
};

// Top two principal components from an eigendecomposition of the sample
// covariance. Each loading column is signed so that its largest-magnitude
// entry is positive. Requires more than two rows.
Embedding2D pca2(const Matrix& values);

}  // namespace cheem

#endif  // CHEEM_PCA_HPP_
