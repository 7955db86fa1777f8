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

// HTTP/JSON explorer over one immutable bundle.
//
// Endpoints:
//   GET  /api/health
//   GET  /api/meta
//   GET  /api/global?color=<statistic>
//   POST /api/tour       {"pi_index", "manip_var", "include"?, "angle_step"?,
//                         "basis_override"?}
//   GET  /api/obs/<i>
//   POST /api/selection  {"indices": [...]}
//
// Every response body is JSON. Errors use {"error": {"code", "message"}}.

#ifndef CHEEM_SERVICE_HPP_
#define CHEEM_SERVICE_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "cheem/bundle.hpp"

namespace cheem {

struct HttpResponse {
  int status = 200;
  std::string body;
};

using QueryParams = std::multimap<std::string, std::string>;

// Bounds accepted for a tour request's angle_step, in radians.
inline constexpr double kMinAngleStep = 1e-3;
inline constexpr double kMaxAngleStep = 1.5707963267948966;

class Explorer {
 public:
  explicit Explorer(CheemBundle bundle);

  const CheemBundle& bundle() const { return bundle_; }

  // Routes one request. Never throws; failures become error responses.
  HttpResponse handle(std::string_view method, std::string_view path,
                      const QueryParams& query, std::string_view body) const;

 private:
  CheemBundle bundle_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;  // served under /
};

// Binds an Explorer to a socket. The Explorer must outlive the server.
class HttpServer {
 public:
  HttpServer(const Explorer& explorer, ServeOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Returns the bound port; throws std::runtime_error if binding fails.
  int bind();
  // Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cheem

#endif  // CHEEM_SERVICE_HPP_
