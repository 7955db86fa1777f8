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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria (0 when all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cheem/bundle.hpp"
#include "cheem/forest.hpp"
#include "cheem/random.hpp"
#include "cheem/service.hpp"
#include "cheem/shap.hpp"
#include "cheem/statistics.hpp"
#include "cheem/tour.hpp"
#include "support/golden_cases.hpp"
#include "support/test_support.hpp"

namespace {

using cheem::Matrix;
using cheem::SplitMix64;
using nlohmann::json;

// Tolerances and budgets.
constexpr double kLocalAccuracyTol = 1e-8;
constexpr double kLocalAccuracySeconds = 10.0;
constexpr double kOracleTol = 1e-10;
constexpr double kOracleSeconds = 60.0;
constexpr std::size_t kOracleTrees = 200;
constexpr std::size_t kOraclePoints = 20;
constexpr std::size_t kOracleMaxDepth = 6;
constexpr std::size_t kOracleMaxFeatures = 8;
constexpr double kPermutationTol = 1e-10;
constexpr std::size_t kTourPairs = 1000;
constexpr double kUnitNormTol = 1e-12;
constexpr double kZeroWaypointTol = 1e-10;
constexpr double kFullWaypointTol = 1e-10;
constexpr double kCommonScaleTol = 1e-9;
constexpr double kReturnTol = 1e-10;
constexpr double kMinPenguinAccuracy = 0.95;
constexpr int kMaxPenguinMisclassified = 15;
constexpr double kPenguinSeconds = 30.0;
constexpr double kPerformanceSeconds = 60.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && outcome_.pass) {
      outcome_.pass = false;
      failure_ = what;
    }
  }
  void note(const std::string& text) {
    if (!notes_.empty()) notes_ += "; ";
    notes_ += text;
  }
  Outcome finish() {
    outcome_.detail = outcome_.pass ? notes_ : failure_ + (notes_.empty() ? "" : "; " + notes_);
    return outcome_;
  }

 private:
  Outcome outcome_;
  std::string failure_;
  std::string notes_;
};

std::string fmt(const char* format, double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), format, v);
  return buffer;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double worst_local_accuracy(const cheem::Forest& f, const cheem::Dataset& ds) {
  const cheem::AttributionMatrix a = cheem::attribution_matrix(f, ds);
  double worst = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const std::optional<int> target =
        a.explained_class.empty() ? std::nullopt : std::optional<int>(a.explained_class[i]);
    const double margin = cheem::scalar_margin(f, cheem::row_span(ds.x, r), target);
    const double gap = std::abs(a.values.row(r).sum() - (margin - a.baseline_for_row(i)));
    worst = std::max(worst, gap / std::max(1.0, std::abs(margin)));
  }
  return worst;
}

Outcome local_accuracy() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  const cheem::Dataset penguins = cheem::testing::load_penguins();
  const cheem::Forest fp = cheem::train(
      penguins, cheem::default_hyper(penguins.task(), penguins.rows(), penguins.cols()), 1);
  const double wp = worst_local_accuracy(fp, penguins);
  const cheem::Dataset synth = cheem::testing::synthetic_regression(200, 5, 2024);
  const cheem::Forest fs = cheem::train(
      synth, cheem::default_hyper(synth.task(), synth.rows(), synth.cols()), 1);
  const double ws = worst_local_accuracy(fs, synth);
  const double elapsed = seconds_since(start);
  c.require(wp <= kLocalAccuracyTol, "penguins gap " + fmt("%.3g", wp));
  c.require(ws <= kLocalAccuracyTol, "synthetic gap " + fmt("%.3g", ws));
  c.require(elapsed < kLocalAccuracySeconds, "too slow");
  c.note("worst scaled gap penguins " + fmt("%.2e", wp) + ", synthetic " + fmt("%.2e", ws));
  c.note(fmt("%.2f s", elapsed));
  return c.finish();
}

Outcome oracle_equivalence() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  SplitMix64 rng(20240601);
  double worst = 0.0;
  std::size_t comparisons = 0;
  for (std::size_t t = 0; t < kOracleTrees; ++t) {
    const std::size_t p = 1 + cheem::uniform_index(rng, kOracleMaxFeatures);
    const std::size_t depth = 1 + cheem::uniform_index(rng, kOracleMaxDepth);
    const cheem::Tree tree = cheem::testing::RandomTreeBuilder(rng, p, depth).build();
    for (std::size_t q = 0; q < kOraclePoints; ++q) {
      const auto x = cheem::testing::random_point(rng, p);
      const auto fast = cheem::tree_shap(tree, x, p);
      const auto exact = cheem::exact_shapley(tree, x);
      for (std::size_t j = 0; j < p; ++j) worst = std::max(worst, std::abs(fast[j] - exact[j]));
      ++comparisons;
    }
  }
  const double elapsed = seconds_since(start);
  c.require(worst <= kOracleTol, "max deviation " + fmt("%.3g", worst));
  c.require(elapsed < kOracleSeconds, "too slow");
  c.note(std::to_string(kOracleTrees) + " trees x " + std::to_string(kOraclePoints) +
         " points, max deviation " + fmt("%.2e", worst));
  c.note(fmt("%.2f s", elapsed));
  (void)comparisons;
  return c.finish();
}

Outcome permutation_consistency() {
  Check c;
  SplitMix64 rng(77);
  double worst_mean = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 2 + cheem::uniform_index(rng, 3);
    const std::size_t classes = trial % 2 == 0 ? 0 : 3;
    const cheem::Forest f = cheem::testing::random_forest(rng, 5, p, 5, classes);
    const auto x = cheem::testing::random_point(rng, p);
    const std::optional<int> target =
        classes == 0 ? std::nullopt : std::optional<int>(static_cast<int>(trial % 3));
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<int>> all;
    do {
      all.push_back(order);
    } while (std::next_permutation(order.begin(), order.end()));
    const cheem::SampledShap s = cheem::breakdown_distribution(f, x, all, target);
    const auto exact = cheem::exact_shapley(f, x, target);
    for (std::size_t j = 0; j < p; ++j) {
      worst_mean = std::max(worst_mean, std::abs(s.mean[j] - exact[j]));
    }
  }
  double worst_spread = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 2 + cheem::uniform_index(rng, 5);
    const cheem::Forest f = cheem::testing::additive_forest(rng, p, 12);
    const auto x = cheem::testing::random_point(rng, p);
    const cheem::SampledShap s = cheem::sampled_shap(f, x, 25, 1000 + trial);
    for (Eigen::Index j = 0; j < s.contributions.cols(); ++j) {
      worst_spread = std::max(worst_spread, s.contributions.col(j).maxCoeff() -
                                                s.contributions.col(j).minCoeff());
    }
  }
  c.require(worst_mean <= kPermutationTol, "mean over all orders deviates " + fmt("%.3g", worst_mean));
  c.require(worst_spread <= kPermutationTol, "additive spread " + fmt("%.3g", worst_spread));
  c.note("all-orders deviation " + fmt("%.2e", worst_mean) + ", additive spread " +
         fmt("%.2e", worst_spread));
  return c.finish();
}

Outcome tour_geometry() {
  Check c;
  SplitMix64 rng(4242);
  double worst_norm = 0.0, worst_zero = 0.0, worst_full = 0.0, worst_scale = 0.0,
         worst_return = 0.0;
  std::size_t frames = 0;
  for (std::size_t pair = 0; pair < kTourPairs; ++pair) {
    const std::size_t p = 2 + cheem::uniform_index(rng, 9);
    std::vector<double> v;
    do {
      v = cheem::testing::random_point(rng, p, 1.0);
    } while (cheem::norm(v) < 1e-3);
    const cheem::Basis1D b = cheem::attribution_to_basis(v);
    const std::size_t k = cheem::uniform_index(rng, p);
    const cheem::TourPath path = cheem::radial_path(b, k);
    double rest = 0.0;
    for (std::size_t j = 0; j < p; ++j) rest += j == k ? 0.0 : b[j] * b[j];
    for (const cheem::TourFrame& f : path.frames) {
      ++frames;
      worst_norm = std::max(worst_norm, std::abs(cheem::norm(f.basis.coefficients()) - 1.0));
      double cross = 0.0;
      for (std::size_t j = 0; j < p; ++j) cross += j == k ? 0.0 : f.basis[j] * b[j];
      const double factor = cross / rest;
      for (std::size_t j = 0; j < p; ++j) {
        if (j != k) worst_scale = std::max(worst_scale, std::abs(f.basis[j] - factor * b[j]));
      }
    }
    worst_zero = std::max(worst_zero, std::abs(path.frames[path.waypoints.zero].basis[k]));
    worst_full = std::max(worst_full, 1.0 - std::abs(path.frames[path.waypoints.full].basis[k]));
    for (std::size_t j = 0; j < p; ++j) {
      worst_return = std::max(worst_return, std::abs(path.frames[path.waypoints.end].basis[j] - b[j]));
    }
  }
  c.require(worst_norm <= kUnitNormTol, "norm deviation " + fmt("%.3g", worst_norm));
  c.require(worst_zero <= kZeroWaypointTol, "zero waypoint " + fmt("%.3g", worst_zero));
  c.require(worst_full <= kFullWaypointTol, "full waypoint " + fmt("%.3g", worst_full));
  c.require(worst_scale <= kCommonScaleTol, "common scale " + fmt("%.3g", worst_scale));
  c.require(worst_return <= kReturnTol, "return waypoint " + fmt("%.3g", worst_return));
  c.note(std::to_string(kTourPairs) + " pairs, " + std::to_string(frames) + " frames");
  c.note("norm " + fmt("%.1e", worst_norm) + ", zero " + fmt("%.1e", worst_zero) + ", full " +
         fmt("%.1e", worst_full) + ", scale " + fmt("%.1e", worst_scale) + ", return " +
         fmt("%.1e", worst_return));
  return c.finish();
}

Outcome penguins_end_to_end() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  const cheem::CheemBundle b = cheem::compute_bundle(cheem::testing::load_penguins(), std::nullopt, 1);
  const double elapsed = seconds_since(start);
  const int wrong = static_cast<int>(
      std::count(b.model.misclassified.begin(), b.model.misclassified.end(), 1));
  const double accuracy = 1.0 - wrong / static_cast<double>(b.rows());
  const auto& cls = b.dataset.categorical().observed;
  const double data_sep = cheem::class_separation(b.embeddings.data.coordinates, cls);
  const double attr_sep = cheem::class_separation(b.embeddings.attribution.coordinates, cls);
  c.require(accuracy >= kMinPenguinAccuracy, "accuracy " + fmt("%.3f", accuracy));
  c.require(wrong <= kMaxPenguinMisclassified, "misclassified " + std::to_string(wrong));
  c.require(attr_sep > data_sep, "attribution-space separation " + fmt("%.3f", attr_sep) +
                                     " not above data-space " + fmt("%.3f", data_sep));
  c.require(elapsed < kPenguinSeconds, "too slow");
  c.note("accuracy " + fmt("%.3f", accuracy) + ", misclassified " + std::to_string(wrong));
  c.note("separation attribution " + fmt("%.3f", attr_sep) + " vs data " + fmt("%.3f", data_sep));
  c.note(fmt("%.2f s", elapsed));
  return c.finish();
}

Outcome performance() {
  Check c;
  const cheem::Dataset ds = cheem::testing::synthetic_regression(5000, 9, 5000);
  const cheem::Hyperparams h = cheem::default_hyper(ds.task(), ds.rows(), ds.cols());
  const cheem::Forest f = cheem::train(ds, h, 1);
  const auto start = std::chrono::steady_clock::now();
  const cheem::AttributionMatrix a = cheem::attribution_matrix(f, ds, {1});
  const double elapsed = seconds_since(start);
  c.require(a.values.rows() == 5000 && a.values.cols() == 9, "wrong shape");
  c.require(h.n_trees == 125, "wrong tree count");
  c.require(elapsed <= kPerformanceSeconds, "took " + fmt("%.1f s", elapsed));
  c.note("5000x9, 125 trees, 1 thread: " + fmt("%.2f s", elapsed));
  return c.finish();
}

Outcome bundle_round_trip() {
  Check c;
  const auto dir = std::filesystem::temp_directory_path();
  const auto first = dir / "cheem_acceptance_first.json";
  const auto second = dir / "cheem_acceptance_second.json";
  const cheem::CheemBundle b = cheem::compute_bundle(cheem::testing::load_penguins(), std::nullopt, 1);
  cheem::save_bundle(b, first);
  cheem::save_bundle(cheem::load_bundle(first), second);
  const std::string a = cheem::testing::read_file(first);
  c.require(!a.empty() && a == cheem::testing::read_file(second), "save-load-save differs");

  const auto kind_of = [](const std::string& text) -> std::string {
    try {
      cheem::parse_bundle(text);
      return "accepted";
    } catch (const cheem::BundleError& e) {
      switch (e.kind()) {
        case cheem::BundleError::Kind::kIo: return "io";
        case cheem::BundleError::Kind::kParse: return "parse";
        case cheem::BundleError::Kind::kVersion: return "version";
        case cheem::BundleError::Kind::kInvariant: return "invariant";
      }
    }
    return "unknown";
  };
  json j = json::parse(a);
  j["format_version"] = "99";
  const std::string version = kind_of(j.dump());
  const std::string truncated = kind_of(a.substr(0, a.size() / 3));
  c.require(version == "version", "version mismatch reported as " + version);
  c.require(truncated == "parse", "truncation reported as " + truncated);
  c.note("byte-identical " + std::to_string(a.size()) + " bytes; errors: " + version + ", " + truncated);
  std::filesystem::remove(first);
  std::filesystem::remove(second);
  return c.finish();
}

Outcome api_contract() {
  Check c;
  const cheem::Explorer explorer(cheem::load_bundle(cheem::testing::penguins_bundle()));
  std::size_t matched = 0;
  bool saw_422 = false;
  for (const cheem::testing::GoldenCase& g : cheem::testing::golden_cases()) {
    const cheem::HttpResponse r = explorer.handle(g.method, g.path, g.query, g.body);
    const std::string text = cheem::testing::read_file(cheem::testing::golden_path(g.name));
    const bool ok = !text.empty() &&
                    json::parse(text) == json{{"status", r.status}, {"body", json::parse(r.body)}};
    c.require(ok, "golden mismatch for " + g.name);
    matched += ok;
    saw_422 = saw_422 || r.status == 422;
  }
  c.require(saw_422, "no 422 case exercised");
  c.note(std::to_string(matched) + "/" + std::to_string(cheem::testing::golden_cases().size()) +
         " golden responses match");
  return c.finish();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"local accuracy", local_accuracy},
      {"oracle equivalence", oracle_equivalence},
      {"permutation consistency", permutation_consistency},
      {"radial tour geometry", tour_geometry},
      {"penguins end-to-end", penguins_end_to_end},
      {"performance envelope", performance},
      {"bundle round trip", bundle_round_trip},
      {"API contract", api_contract},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %zu: %s %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
