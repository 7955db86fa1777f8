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

// cheem: precompute explorer bundles and serve them.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cheem/bundle.hpp"
#include "cheem/error.hpp"
#include "cheem/service.hpp"
#include "cheem/shap.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInvalid = 2;

struct PrecomputeArgs {
  std::string data;
  std::string response;
  std::string task = "auto";
  std::optional<std::string> label;
  std::uint64_t seed = 1;
  std::optional<std::size_t> trees;
  std::optional<std::size_t> mtry;
  std::optional<std::size_t> min_node;
  std::size_t threads = 1;
  std::string out;
};

struct ServeArgs {
  std::string bundle;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::optional<std::string> static_dir;
};

struct BreakdownArgs {
  std::string bundle;
  std::size_t row = 0;
  std::size_t sequences = 25;
  std::uint64_t seed = 1;
  std::optional<std::string> out;
};

int precompute(const PrecomputeArgs& a) {
  cheem::CsvOptions csv;
  csv.response_column = a.response;
  csv.label_column = a.label;
  if (a.task == "classification") {
    csv.task = cheem::TaskSelection::kClassification;
  } else if (a.task == "regression") {
    csv.task = cheem::TaskSelection::kRegression;
  }
  std::cerr << "load: " << a.data << "\n";
  const cheem::Dataset ds = cheem::load_csv(a.data, csv);
  std::cerr << "load: n=" << ds.rows() << " p=" << ds.cols()
            << " task=" << cheem::task_name(ds.task()) << "\n";

  std::optional<cheem::Hyperparams> hyper;
  if (a.trees || a.mtry || a.min_node) {
    cheem::Hyperparams h = cheem::default_hyper(ds.task(), ds.rows(), ds.cols());
    if (a.trees) h.n_trees = *a.trees;
    if (a.mtry) h.mtry = *a.mtry;
    if (a.min_node) h.min_node = *a.min_node;
    hyper = h;
  }

  cheem::PipelineOptions options;
  options.threads = a.threads;
  options.progress = [](std::string_view stage, std::optional<double> ms) {
    if (ms) {
      std::fprintf(stderr, "%.*s: done in %.1f ms\n",
                   static_cast<int>(stage.size()), stage.data(), *ms);
    } else {
      std::fprintf(stderr, "%.*s: running\n", static_cast<int>(stage.size()),
                   stage.data());
    }
  };
  const cheem::CheemBundle b = cheem::compute_bundle(ds, hyper, a.seed, options);
  cheem::save_bundle(b, a.out);
  std::cerr << "wrote " << a.out << "\n";
  return kExitOk;
}

int serve(const ServeArgs& a) {
  cheem::CheemBundle bundle;
  try {
    bundle = cheem::load_bundle(a.bundle);
  } catch (const cheem::BundleError& e) {
    throw cheem::StageError("load", e.what());
  }
  const cheem::Explorer explorer(std::move(bundle));
  cheem::ServeOptions options;
  options.host = a.host;
  options.port = a.port;
  if (a.static_dir) options.static_dir = *a.static_dir;
  cheem::HttpServer server(explorer, options);
  const int port = server.bind();
  std::cerr << "serving " << a.bundle << " on http://" << a.host << ":" << port
            << "\n";
  server.listen();
  return kExitOk;
}

int export_breakdown(const BreakdownArgs& a) {
  const cheem::CheemBundle b = cheem::load_bundle(a.bundle);
  if (a.row >= b.rows()) {
    throw cheem::ValidationError("row " + std::to_string(a.row) +
                                 " is outside [0, " + std::to_string(b.rows()) +
                                 ")");
  }
  if (a.sequences == 0) throw cheem::ValidationError("--sequences must be >= 1");
  std::optional<int> target;
  if (b.task() == cheem::Task::kClassification) {
    target = b.attribution.raw.explained_class[a.row];
  }
  const auto x = cheem::row_span(b.dataset.x, static_cast<Eigen::Index>(a.row));
  const cheem::SampledShap s =
      cheem::sampled_shap(b.model.forest, x, a.sequences, a.seed, target);
  const std::string csv = cheem::to_csv(s, b.dataset.feature_names);
  if (a.out) {
    std::ofstream out(*a.out, std::ios::binary);
    if (!(out << csv)) throw std::runtime_error("cannot write " + *a.out);
  } else {
    std::cout << csv;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Precompute and explore tree-SHAP attribution bundles"};
  app.require_subcommand(1);

  PrecomputeArgs pre;
  CLI::App* pre_cmd =
      app.add_subcommand("precompute", "Fit the forest and write a bundle");
  pre_cmd->add_option("--data", pre.data, "Input CSV")->required();
  pre_cmd->add_option("--response", pre.response, "Response column")->required();
  pre_cmd->add_option("--task", pre.task, "auto, classification or regression")
      ->check(CLI::IsMember({"auto", "classification", "regression"}));
  pre_cmd->add_option("--label", pre.label, "Column holding row labels");
  pre_cmd->add_option("--seed", pre.seed, "Random seed");
  pre_cmd->add_option("--trees", pre.trees, "Number of trees")->check(CLI::PositiveNumber);
  pre_cmd->add_option("--mtry", pre.mtry, "Candidate features per split")
      ->check(CLI::PositiveNumber);
  pre_cmd->add_option("--min-node", pre.min_node, "Minimum node size")
      ->check(CLI::PositiveNumber);
  pre_cmd->add_option("--threads", pre.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  pre_cmd->add_option("--out", pre.out, "Output bundle path")->required();

  ServeArgs srv;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve a bundle over HTTP");
  serve_cmd->add_option("--bundle", srv.bundle, "Bundle JSON")->required();
  serve_cmd->add_option("--port", srv.port, "TCP port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", srv.host, "Bind address");
  serve_cmd->add_option("--static", srv.static_dir, "Directory served under /");

  BreakdownArgs bd;
  CLI::App* bd_cmd = app.add_subcommand(
      "breakdown", "Export breakdowns over random orderings for one row as CSV");
  bd_cmd->add_option("--bundle", bd.bundle, "Bundle JSON")->required();
  bd_cmd->add_option("--row", bd.row, "Row index")->required();
  bd_cmd->add_option("--sequences", bd.sequences, "Number of orderings");
  bd_cmd->add_option("--seed", bd.seed, "Random seed");
  bd_cmd->add_option("--out", bd.out, "Output CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*pre_cmd) return precompute(pre);
    if (*serve_cmd) return serve(srv);
    if (*bd_cmd) return export_breakdown(bd);
  } catch (const cheem::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.invalid_input() ? kExitInvalid : kExitInternal;
  } catch (const cheem::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const cheem::BundleError& e) {
    std::cerr << "error: bundle: " << e.what() << "\n";
    return e.kind() == cheem::BundleError::Kind::kIo ? kExitInternal : kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
