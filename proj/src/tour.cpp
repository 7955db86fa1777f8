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

#include "cheem/tour.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "cheem/error.hpp"

namespace cheem {
namespace {

constexpr double kZeroNorm = 1e-12;
constexpr double kAlignedTolerance = 1e-9;
constexpr double kOrthogonalTolerance = 1e-10;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> normalized(std::span<const double> v, const char* what) {
  const double len = norm(v);
  if (!(len >= kZeroNorm)) throw GeometryError(what);
  std::vector<double> out(v.begin(), v.end());
  for (double& c : out) c /= len;
  return out;
}

}  // namespace

Basis1D::Basis1D(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {
  if (coefficients_.empty()) throw GeometryError("basis has no coefficients");
  for (double c : coefficients_) {
    if (!std::isfinite(c)) throw GeometryError("basis is not finite");
  }
  const double len = norm(coefficients_);
  if (std::abs(len - 1.0) > kNormTolerance) {
    throw GeometryError("basis is not unit length (norm " +
                        std::to_string(len) + ")");
  }
}

double norm(std::span<const double> v) {
  // Scaled to avoid overflow for very large attributions.
  double largest = 0.0;
  for (double c : v) largest = std::max(largest, std::abs(c));
  if (largest == 0.0 || !std::isfinite(largest)) return largest;
  double s = 0.0;
  for (double c : v) s += (c / largest) * (c / largest);
  return largest * std::sqrt(s);
}

Basis1D attribution_to_basis(std::span<const double> v) {
  for (double c : v) {
    if (!std::isfinite(c)) throw GeometryError("attribution is not finite");
  }
  return Basis1D(normalized(v, "attribution has no direction (zero vector)"));
}

Basis1D restrict_basis(const Basis1D& b, std::span<const std::size_t> include) {
  if (include.empty()) throw GeometryError("no variables selected");
  std::vector<double> kept(b.size(), 0.0);
  for (std::size_t j : include) {
    if (j >= b.size()) {
      throw GeometryError("selected variable " + std::to_string(j) +
                          " out of range");
    }
    kept[j] = b[j];
  }
  if (kept == b.coefficients()) return b;
  return Basis1D(normalized(
      kept, "selected variables have no contribution to the basis"));
}

std::vector<double> manipulation_direction(const Basis1D& b, std::size_t k) {
  if (k >= b.size()) {
    throw GeometryError("manipulated variable " + std::to_string(k) +
                        " out of range");
  }
  if (!(std::abs(b[k]) < 1.0 - kAlignedTolerance)) {
    throw GeometryError(
        "basis already entirely this variable; no radial direction exists");
  }
  std::vector<double> m(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) m[j] = -b[k] * b[j];
  m[k] += 1.0;
  return normalized(m, "no radial direction exists");
}

Basis1D rotate(const Basis1D& b, std::span<const double> m, double angle) {
  if (m.size() != b.size()) {
    throw GeometryError("direction and basis differ in length");
  }
  if (std::abs(dot(b.coefficients(), m)) > kOrthogonalTolerance) {
    throw GeometryError("rotation direction is not orthogonal to the basis");
  }
  if (std::abs(norm(m) - 1.0) > kOrthogonalTolerance) {
    throw GeometryError("rotation direction is not unit length");
  }
  if (angle == 0.0) return b;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<double> out(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) out[j] = c * b[j] + s * m[j];
  return Basis1D(std::move(out));
}

TourPath radial_path(const Basis1D& b, std::size_t k, double angle_step) {
  if (!(angle_step > 0.0) || !std::isfinite(angle_step)) {
    throw GeometryError("angle_step must be positive");
  }
  const std::vector<double> m = manipulation_direction(b, k);

  // Contribution of k is sin(angle + phase) along the rotation.
  const double phase = std::atan2(b[k], m[k]);
  const double half_pi = std::numbers::pi / 2.0;
  const double full_angle = (b[k] >= 0.0 ? half_pi : -half_pi) - phase;
  const double zero_angle = -phase;

  TourPath path;
  path.manip_var = k;
  path.frames.push_back({0.0, b});

  const auto leg = [&](double from, double to) {
    const double span = std::abs(to - from);
    const double dir = to >= from ? 1.0 : -1.0;
    for (std::size_t i = 1;; ++i) {
      const double offset = static_cast<double>(i) * angle_step;
      if (!(offset < span - 1e-12)) break;
      const double angle = from + dir * offset;
      path.frames.push_back({angle, rotate(b, m, angle)});
    }
    path.frames.push_back({to, rotate(b, m, to)});
    return path.frames.size() - 1;
  };

  path.waypoints.start = 0;
  path.waypoints.full = leg(0.0, full_angle);
  path.waypoints.zero = leg(full_angle, zero_angle);
  path.waypoints.end = leg(zero_angle, 0.0);
  return path;
}

std::vector<double> project(const Matrix& values, const Basis1D& b) {
  if (static_cast<std::size_t>(values.cols()) != b.size()) {
    throw ValidationError("projection basis has " + std::to_string(b.size()) +
                          " coefficients for " +
                          std::to_string(values.cols()) + " columns");
  }
  std::vector<double> y(static_cast<std::size_t>(values.rows()), 0.0);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      s += values(i, j) * b[static_cast<std::size_t>(j)];
    }
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

}  // namespace cheem
