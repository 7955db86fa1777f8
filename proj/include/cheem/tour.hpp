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

// One-dimensional projection bases and the radial tour.
//
// A radial tour changes how much one variable k contributes to a unit basis b
// while every other coefficient keeps its direction: the basis is rotated in
// the plane spanned by b and the unit vector m = normalize(e_k - b_k b).
// Along the rotation b(t) = cos(t) b + sin(t) m the manipulated coefficient
// is b_k cos(t) + sqrt(1 - b_k^2) sin(t), and every other coefficient is
// multiplied by the common factor cos(t) - b_k sin(t) / sqrt(1 - b_k^2).

#ifndef CHEEM_TOUR_HPP_
#define CHEEM_TOUR_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "cheem/matrix.hpp"

namespace cheem {

// Unit-norm projection vector (norm within 1e-12 of 1).
class Basis1D {
 public:
  static constexpr double kNormTolerance = 1e-12;

  // Throws GeometryError if the coefficients are not unit norm or not finite.
  explicit Basis1D(std::vector<double> coefficients);

  const std::vector<double>& coefficients() const { return coefficients_; }
  std::size_t size() const { return coefficients_.size(); }
  double operator[](std::size_t j) const { return coefficients_[j]; }

  bool operator==(const Basis1D&) const = default;

 private:
  std::vector<double> coefficients_;
};

double norm(std::span<const double> v);

// v / |v|; GeometryError when |v| < 1e-12.
Basis1D attribution_to_basis(std::span<const double> v);

// Zeroes coefficients outside `include` and renormalizes.
Basis1D restrict_basis(const Basis1D& b, std::span<const std::size_t> include);

// Unit vector orthogonal to b along which coefficient k rotates. Requires
// |b_k| < 1 - 1e-9.
std::vector<double> manipulation_direction(const Basis1D& b, std::size_t k);

// cos(angle) b + sin(angle) m; m must be a unit vector orthogonal to b.
Basis1D rotate(const Basis1D& b, std::span<const double> m, double angle);

struct TourFrame {
  double angle = 0.0;  // radians from the starting basis
  Basis1D basis;
};

struct TourWaypoints {
  std::size_t start = 0;
  std::size_t full = 0;   // |contribution of k| == 1
  std::size_t zero = 0;   // contribution of k == 0
  std::size_t end = 0;    // back at the starting basis
};

struct TourPath {
  std::size_t manip_var = 0;
  std::vector<TourFrame> frames;
  TourWaypoints waypoints;
};

inline constexpr double kDefaultAngleStep = 0.05;

// Frames sweep the manipulated contribution start -> full -> zero -> start.
// Each leg is sampled every `angle_step` radians and always ends on its exact
// waypoint. The starting sign of the contribution is kept on the full leg
// (positive when it starts at zero).
TourPath radial_path(const Basis1D& b, std::size_t k,
                     double angle_step = kDefaultAngleStep);

// Scores y_i = sum_j values(i, j) * b_j.
std::vector<double> project(const Matrix& values, const Basis1D& b);

}  // namespace cheem

#endif  // CHEEM_TOUR_HPP_
