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
#include <numbers>

#include "cheem/error.hpp"
#include "cheem/random.hpp"
#include "cheem/tour.hpp"
#include "support/test_support.hpp"

namespace cheem {
namespace {

Basis1D random_basis(SplitMix64& rng, std::size_t p) {
  for (;;) {
    auto v = testing::random_point(rng, p, 1.0);
    if (norm(v) > 1e-3) return attribution_to_basis(v);
  }
}

TEST(Basis, AttributionToBasis) {
  const Basis1D b = attribution_to_basis(std::vector<double>{3.0, 4.0});
  EXPECT_NEAR(b[0], 0.6, 1e-15);
  EXPECT_NEAR(b[1], 0.8, 1e-15);
  EXPECT_EQ(attribution_to_basis(std::vector<double>{0.0, 1.0, 0.0}).coefficients(),
            (std::vector<double>{0.0, 1.0, 0.0}));
  EXPECT_THROW(attribution_to_basis(std::vector<double>{0.0, 0.0}), GeometryError);
  EXPECT_THROW(attribution_to_basis(std::vector<double>{1e-13, 0.0}), GeometryError);
}

TEST(Basis, ConstructorRequiresUnitNorm) {
  EXPECT_THROW(Basis1D({0.6, 0.81}), GeometryError);
  EXPECT_THROW(Basis1D({}), GeometryError);
  EXPECT_THROW(Basis1D({std::nan(""), 1.0}), GeometryError);
  EXPECT_NO_THROW(Basis1D({0.6, 0.8}));
}

TEST(Basis, NormAvoidsOverflow) {
  EXPECT_DOUBLE_EQ(norm(std::vector<double>{3e300, 4e300}), 5e300);
}

TEST(Basis, RestrictBasis) {
  const Basis1D b = attribution_to_basis(std::vector<double>{1.0, 2.0, 2.0});
  const std::vector<std::size_t> keep{0, 2};
  const Basis1D r = restrict_basis(b, keep);
  EXPECT_NEAR(r[0], 1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_EQ(r[1], 0.0);
  EXPECT_NEAR(r[2], 2.0 / std::sqrt(5.0), 1e-15);
  const std::vector<std::size_t> all{0, 1, 2};
  EXPECT_EQ(restrict_basis(b, all), b);
  const Basis1D sparse({0.0, 1.0, 0.0});
  const std::vector<std::size_t> other{0, 2};
  EXPECT_THROW(restrict_basis(sparse, other), GeometryError);
  EXPECT_THROW(restrict_basis(b, std::vector<std::size_t>{}), GeometryError);
}

TEST(Tour, ManipulationDirectionIsOrthogonalUnit) {
  SplitMix64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 2 + uniform_index(rng, 8);
    const Basis1D b = random_basis(rng, p);
    const std::size_t k = uniform_index(rng, p);
    const auto m = manipulation_direction(b, k);
    double dot = 0.0;
    for (std::size_t j = 0; j < p; ++j) dot += m[j] * b[j];
    EXPECT_NEAR(dot, 0.0, 1e-12);
    EXPECT_NEAR(norm(m), 1.0, 1e-12);
    EXPECT_GE(m[k], 0.0);
  }
  EXPECT_THROW(manipulation_direction(Basis1D({0.0, 1.0}), 1), GeometryError);
  EXPECT_THROW(manipulation_direction(Basis1D({0.0, -1.0}), 1), GeometryError);
  EXPECT_THROW(manipulation_direction(Basis1D({0.0, 1.0}), 2), GeometryError);
}

TEST(Tour, RotateRejectsBadDirections) {
  const Basis1D b({0.6, 0.8});
  EXPECT_THROW(rotate(b, std::vector<double>{1.0, 0.0}, 0.3), GeometryError);
  EXPECT_THROW(rotate(b, std::vector<double>{-1.6, 1.2}, 0.3), GeometryError);
  EXPECT_EQ(rotate(b, std::vector<double>{-0.8, 0.6}, 0.0), b);
}

TEST(Tour, RadialPathWaypoints) {
  const Basis1D b = attribution_to_basis(std::vector<double>{0.5, -0.3, 0.8, 0.1});
  const TourPath path = radial_path(b, 2);
  EXPECT_EQ(path.frames.front().basis, b);
  EXPECT_EQ(path.waypoints.start, 0u);
  EXPECT_NEAR(path.frames[path.waypoints.full].basis[2], 1.0, 1e-10);
  EXPECT_LE(std::abs(path.frames[path.waypoints.zero].basis[2]), 1e-10);
  EXPECT_EQ(path.waypoints.end, path.frames.size() - 1);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(path.frames.back().basis[j], b[j], 1e-10);
  }
}

TEST(Tour, NegativeContributionKeepsItsSign) {
  const Basis1D b = attribution_to_basis(std::vector<double>{0.5, -0.7, 0.2});
  const TourPath path = radial_path(b, 1);
  EXPECT_NEAR(path.frames[path.waypoints.full].basis[1], -1.0, 1e-10);
  const Basis1D zero({0.6, 0.0, 0.8});
  EXPECT_NEAR(radial_path(zero, 1).frames[radial_path(zero, 1).waypoints.full].basis[1],
              1.0, 1e-10);
}

TEST(Tour, FrameCountMatchesOracle) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 2 + uniform_index(rng, 6);
    const Basis1D b = random_basis(rng, p);
    const std::size_t k = uniform_index(rng, p);
    const double step = testing::uniform(rng, 0.01, 0.4);
    const double a = std::abs(b[k]);
    const std::vector<double> spans{std::acos(a), std::numbers::pi / 2, std::asin(a)};
    const TourPath path = radial_path(b, k, step);
    EXPECT_EQ(path.frames.size(), testing::oracle_frame_count(spans, step));
  }
}

TEST(Tour, PropertyPathGeometry) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t p = 2 + uniform_index(rng, 9);
    const Basis1D b = random_basis(rng, p);
    const std::size_t k = uniform_index(rng, p);
    const TourPath path = radial_path(b, k, testing::uniform(rng, 0.02, 0.3));
    double rest = 0.0;
    for (std::size_t j = 0; j < p; ++j) rest += j == k ? 0.0 : b[j] * b[j];
    for (std::size_t f = 0; f < path.frames.size(); ++f) {
      const Basis1D& c = path.frames[f].basis;
      EXPECT_NEAR(norm(c.coefficients()), 1.0, 1e-12);
      double cross = 0.0;
      for (std::size_t j = 0; j < p; ++j) cross += j == k ? 0.0 : c[j] * b[j];
      const double factor = cross / rest;
      for (std::size_t j = 0; j < p; ++j) {
        if (j != k) EXPECT_NEAR(c[j], factor * b[j], 1e-9);
      }
    }
    // Angles move monotonically within each leg.
    const auto& w = path.waypoints;
    for (auto [from, to] : {std::pair{w.start, w.full}, std::pair{w.full, w.zero},
                            std::pair{w.zero, w.end}}) {
      const double dir = path.frames[to].angle >= path.frames[from].angle ? 1.0 : -1.0;
      for (std::size_t f = from; f < to; ++f) {
        EXPECT_GT(dir * (path.frames[f + 1].angle - path.frames[f].angle), 0.0);
      }
    }
  }
}

TEST(Tour, RejectsBadStep) {
  const Basis1D b({0.6, 0.8});
  EXPECT_THROW(radial_path(b, 0, 0.0), GeometryError);
  EXPECT_THROW(radial_path(b, 0, -0.1), GeometryError);
  EXPECT_THROW(radial_path(b, 0, std::nan("")), GeometryError);
}

TEST(Project, ScoresAndArity) {
  Matrix x(2, 2);
  x << 1.0, 2.0, -1.0, 0.5;
  const auto y = project(x, Basis1D({0.6, 0.8}));
  EXPECT_NEAR(y[0], 2.2, 1e-15);
  EXPECT_NEAR(y[1], -0.2, 1e-15);
  EXPECT_THROW(project(x, Basis1D({1.0, 0.0, 0.0})), ValidationError);
}

}  // namespace
}  // namespace cheem
