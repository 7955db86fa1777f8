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

#include "cheem/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "cheem/error.hpp"
#include "cheem/tour.hpp"

namespace cheem {
namespace {

using nlohmann::json;

struct ApiError {
  int status;
  std::string code;
  std::string message;
};

HttpResponse error_response(int status, std::string_view code,
                            std::string_view message) {
  json body = {{"error", {{"code", code}, {"message", message}}}};
  return {status, body.dump()};
}

HttpResponse ok(const json& body) { return {200, body.dump()}; }

json parse_body(std::string_view body) {
  json j = json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ApiError{400, "bad_json", "request body must be a JSON object"};
  }
  return j;
}

std::size_t index_value(const json& v, std::size_t bound, const std::string& what) {
  if (!v.is_number_integer()) {
    throw ApiError{400, "bad_request", what + " must be an integer"};
  }
  const auto i = v.get<std::int64_t>();
  if (i < 0 || static_cast<std::uint64_t>(i) >= bound) {
    throw ApiError{400, "out_of_range",
                   what + " " + std::to_string(i) + " is outside [0, " +
                       std::to_string(bound) + ")"};
  }
  return static_cast<std::size_t>(i);
}

std::size_t parse_path_index(std::string_view text, std::size_t bound) {
  std::size_t i = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (text.empty() || ec == std::errc::invalid_argument ||
      end != text.data() + text.size()) {
    throw ApiError{400, "bad_request",
                   "observation index must be a non-negative integer"};
  }
  if (ec == std::errc::result_out_of_range || i >= bound) {
    throw ApiError{400, "out_of_range",
                   "observation index " + std::string(text) +
                       " is outside [0, " + std::to_string(bound) + ")"};
  }
  return i;
}

std::vector<double> row_vector(const Matrix& m, std::size_t i) {
  const auto r = row_span(m, static_cast<Eigen::Index>(i));
  return {r.begin(), r.end()};
}

class Router {
 public:
  explicit Router(const CheemBundle& b)
      : b_(b), classification_(b.task() == Task::kClassification) {}

  json health() const {
    return {{"status", "ok"}, {"format_version", b_.format_version}};
  }

  json meta() const {
    json m = {{"format_version", b_.format_version},
              {"name", b_.dataset.name},
              {"task", std::string(task_name(b_.task()))},
              {"n", b_.rows()},
              {"p", b_.cols()},
              {"feature_names", b_.dataset.feature_names},
              {"color_statistics", b_.statistics.available(b_.task())},
              {"default_color", default_color()},
              {"hyper",
               {{"n_trees", b_.model.hyper.n_trees},
                {"mtry", b_.model.hyper.mtry},
                {"min_node", b_.model.hyper.min_node}}},
              {"seed", b_.model.seed},
              {"baseline", b_.attribution.raw.baselines}};
    if (classification_) {
      m["class_levels"] = b_.dataset.categorical().levels;
      m["target"] = "probability of the predicted class";
    } else {
      m["target"] = "predicted value";
    }
    return m;
  }

  json global(const QueryParams& query) const {
    const auto it = query.find("color");
    const std::string color = it == query.end() ? default_color() : it->second;
    std::vector<double> values;
    try {
      values = b_.statistics.values(b_.task(), color);
    } catch (const ValidationError& e) {
      throw ApiError{400, "invalid_color", e.what()};
    }
    const Embedding2D& data = b_.embeddings.data;
    const Embedding2D& attr = b_.embeddings.attribution;
    json rows = json::array();
    for (std::size_t i = 0; i < b_.rows(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      json row = {{"index", i},
                  {"label", b_.dataset.row_labels[i]},
                  {"data_pc", {data.coordinates(r, 0), data.coordinates(r, 1)}},
                  {"attr_pc", {attr.coordinates(r, 0), attr.coordinates(r, 1)}},
                  {"observed", observed(i)},
                  {"predicted", predicted(i)},
                  {"color", values[i]}};
      if (classification_) row["misclassified"] = b_.model.misclassified[i] != 0;
      rows.push_back(std::move(row));
    }
    return {{"color", color},
            {"task", std::string(task_name(b_.task()))},
            {"variance_explained",
             {{"data", data.variance_explained},
              {"attribution", attr.variance_explained}}},
            {"rows", std::move(rows)}};
  }

  json tour(const json& req) const {
    const std::size_t n = b_.rows();
    const std::size_t p = b_.cols();
    if (!req.contains("pi_index") || !req.contains("manip_var")) {
      throw ApiError{400, "bad_request", "pi_index and manip_var are required"};
    }
    const std::size_t pi = index_value(req["pi_index"], n, "pi_index");
    const std::size_t k = index_value(req["manip_var"], p, "manip_var");

    std::optional<std::vector<std::size_t>> include;
    if (req.contains("include") && !req["include"].is_null()) {
      if (!req["include"].is_array()) {
        throw ApiError{400, "bad_request", "include must be an array"};
      }
      std::vector<std::size_t> chosen;
      for (const json& v : req["include"]) {
        chosen.push_back(index_value(v, p, "include entry"));
      }
      if (std::find(chosen.begin(), chosen.end(), k) == chosen.end()) {
        throw ApiError{400, "bad_request", "include must contain manip_var"};
      }
      include = std::move(chosen);
    }

    double step = kDefaultAngleStep;
    if (req.contains("angle_step") && !req["angle_step"].is_null()) {
      if (!req["angle_step"].is_number()) {
        throw ApiError{400, "bad_request", "angle_step must be a number"};
      }
      step = req["angle_step"].get<double>();
      if (!(step >= kMinAngleStep && step <= kMaxAngleStep)) {
        throw ApiError{400, "out_of_range",
                       "angle_step must lie in [" + std::to_string(kMinAngleStep) +
                           ", " + std::to_string(kMaxAngleStep) + "]"};
      }
    }

    std::optional<std::vector<double>> override_coefficients;
    if (req.contains("basis_override") && !req["basis_override"].is_null()) {
      const json& o = req["basis_override"];
      if (!o.is_array() || o.size() != p) {
        throw ApiError{400, "bad_request",
                       "basis_override must be an array of " + std::to_string(p) +
                           " numbers"};
      }
      std::vector<double> v;
      for (const json& c : o) {
        if (!c.is_number()) {
          throw ApiError{400, "bad_request", "basis_override must be numeric"};
        }
        v.push_back(c.get<double>());
      }
      override_coefficients = std::move(v);
    }

    // Geometry failures propagate as GeometryError and map to 422.
    const Basis1D start = [&] {
      if (override_coefficients) return attribution_to_basis(*override_coefficients);
      const Basis1D b =
          attribution_to_basis(row_vector(b_.attribution.raw.values, pi));
      return include ? restrict_basis(b, *include) : b;
    }();
    const TourPath path = radial_path(start, k, step);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    json frames = json::array();
    for (const TourFrame& f : path.frames) {
      const std::vector<double> scores = project(b_.scaled.values, f.basis);
      for (double s : scores) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
      frames.push_back({{"angle", f.angle},
                        {"basis", f.basis.coefficients()},
                        {"scores", scores}});
    }
    return {{"pi_index", pi},
            {"manip_var", k},
            {"angle_step", step},
            {"explained_target", explained_target(pi)},
            {"waypoints",
             {{"start", path.waypoints.start},
              {"full", path.waypoints.full},
              {"zero", path.waypoints.zero},
              {"end", path.waypoints.end}}},
            {"axis_range", {lo, hi}},
            {"frames", std::move(frames)}};
  }

  json observation(std::size_t i) const {
    const AttributionSummary& a = b_.attribution;
    json o = {{"index", i},
              {"label", b_.dataset.row_labels[i]},
              {"x", row_vector(b_.dataset.x, i)},
              {"scaled", row_vector(b_.scaled.values, i)},
              {"observed", observed(i)},
              {"predicted", predicted(i)},
              {"explained_target", explained_target(i)},
              {"baseline", a.raw.baseline_for_row(i)},
              {"attribution",
               {{"raw", row_vector(a.raw.values, i)},
                {"normalized", row_vector(a.normalized, i)},
                {"zero_attribution", a.zero_attribution[i] != 0}}}};
    if (classification_) {
      o["probabilities"] = row_vector(b_.model.probabilities, i);
      o["explained_class"] = a.raw.explained_class[i];
      o["misclassified"] = b_.model.misclassified[i] != 0;
    } else {
      o["residual"] = b_.model.residuals[i];
    }
    return o;
  }

  json selection(const json& req) const {
    if (!req.contains("indices") || !req["indices"].is_array()) {
      throw ApiError{400, "bad_request", "indices must be an array"};
    }
    std::vector<std::size_t> indices;
    for (const json& v : req["indices"]) {
      indices.push_back(index_value(v, b_.rows(), "index"));
    }
    const std::vector<std::string> stats = b_.statistics.available(b_.task());
    std::vector<std::vector<double>> stat_values;
    for (const std::string& s : stats) {
      stat_values.push_back(b_.statistics.values(b_.task(), s));
    }
    json rows = json::array();
    for (std::size_t i : indices) {
      json st = json::object();
      for (std::size_t s = 0; s < stats.size(); ++s) st[stats[s]] = stat_values[s][i];
      rows.push_back({{"index", i},
                      {"label", b_.dataset.row_labels[i]},
                      {"observed", observed(i)},
                      {"predicted", predicted(i)},
                      {"statistics", std::move(st)},
                      {"features", row_vector(b_.dataset.x, i)}});
    }
    return {{"feature_names", b_.dataset.feature_names},
            {"statistics", stats},
            {"rows", std::move(rows)}};
  }

  HttpResponse route(std::string_view method, std::string_view path,
                     const QueryParams& query, std::string_view body) const {
    constexpr std::string_view kObs = "/api/obs/";
    if (path == "/api/health") return get_only(method, [&] { return health(); });
    if (path == "/api/meta") return get_only(method, [&] { return meta(); });
    if (path == "/api/global") return get_only(method, [&] { return global(query); });
    if (path.starts_with(kObs)) {
      return get_only(method, [&] {
        return observation(parse_path_index(path.substr(kObs.size()), b_.rows()));
      });
    }
    if (path == "/api/tour") return post_only(method, [&] { return tour(parse_body(body)); });
    if (path == "/api/selection") {
      return post_only(method, [&] { return selection(parse_body(body)); });
    }
    return error_response(404, "not_found", "no route for " + std::string(path));
  }

 private:
  template <typename Fn>
  static HttpResponse get_only(std::string_view method, Fn&& fn) {
    if (method != "GET") return error_response(405, "method_not_allowed", "use GET");
    return ok(fn());
  }

  template <typename Fn>
  static HttpResponse post_only(std::string_view method, Fn&& fn) {
    if (method != "POST") return error_response(405, "method_not_allowed", "use POST");
    return ok(fn());
  }

  std::string default_color() const {
    return classification_ ? "predicted_class" : "residual";
  }

  json observed(std::size_t i) const {
    if (classification_) return b_.dataset.categorical().observed[i];
    return b_.dataset.quantitative().observed[i];
  }

  json predicted(std::size_t i) const {
    if (classification_) return b_.model.predicted_class[i];
    return b_.model.predicted_value[i];
  }

  std::string explained_target(std::size_t i) const {
    if (!classification_) return "predicted value";
    const int c = b_.attribution.raw.explained_class[i];
    return "probability of class '" + b_.dataset.categorical().levels[c] + "'";
  }

  const CheemBundle& b_;
  bool classification_;
};

}  // namespace

Explorer::Explorer(CheemBundle bundle) : bundle_(std::move(bundle)) {
  check_bundle(bundle_);
}

HttpResponse Explorer::handle(std::string_view method, std::string_view path,
                              const QueryParams& query,
                              std::string_view body) const {
  try {
    return Router(bundle_).route(method, path, query, body);
  } catch (const ApiError& e) {
    return error_response(e.status, e.code, e.message);
  } catch (const GeometryError& e) {
    return error_response(422, "degenerate_basis", e.what());
  } catch (const ValidationError& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

struct HttpServer::Impl {
  Impl(const Explorer& e, ServeOptions o) : explorer(e), options(std::move(o)) {}

  const Explorer& explorer;
  ServeOptions options;
  httplib::Server server;
  int port = 0;
};

HttpServer::HttpServer(const Explorer& explorer, ServeOptions options)
    : impl_(std::make_unique<Impl>(explorer, std::move(options))) {
  httplib::Server& s = impl_->server;
  const Explorer& ex = impl_->explorer;
  const auto dispatch = [&ex](const httplib::Request& req, httplib::Response& res) {
    QueryParams query(req.params.begin(), req.params.end());
    const HttpResponse r = ex.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
  };
  // SO_REUSEADDR without SO_REUSEPORT, so binding a busy port fails.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes),
               sizeof(yes));
  });
  s.Get("/api/.*", dispatch);
  s.Post("/api/.*", dispatch);
  s.Put("/api/.*", dispatch);
  s.Delete("/api/.*", dispatch);
  if (impl_->options.static_dir) {
    if (!s.set_mount_point("/", impl_->options.static_dir->string())) {
      throw std::runtime_error("static directory '" +
                               impl_->options.static_dir->string() +
                               "' does not exist");
    }
  }
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      const HttpResponse r =
          error_response(404, "not_found", "no route for " + req.path);
      res.set_content(r.body, "application/json; charset=utf-8");
    }
  });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind() {
  Impl& impl = *impl_;
  if (impl.options.port == 0) {
    impl.port = impl.server.bind_to_any_port(impl.options.host);
  } else if (impl.server.bind_to_port(impl.options.host, impl.options.port)) {
    impl.port = impl.options.port;
  } else {
    impl.port = -1;
  }
  if (impl.port <= 0) {
    throw std::runtime_error("cannot bind " + impl.options.host + ":" +
                             std::to_string(impl.options.port));
  }
  return impl.port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace cheem
