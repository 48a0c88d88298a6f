#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <httplib.h>

#include "mapalign/service.hpp"

namespace mapalign {

/// Binds an Api to cpp-httplib. JSON routes live under /sessions and
/// /health; everything else is served from `static_dir` when given.
class HttpServer {
 public:
  explicit HttpServer(Api& api, std::filesystem::path static_dir = {}) : api_(api) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      const auto out = api_.handle(req.method, req.path, query, req.body);
      res.status = out.status;
      res.set_content(out.body.dump(), "application/json");
    };
    for (const char* pattern : {R"(/health)", R"(/sessions(/.*)?)"}) {
      server_.Get(pattern, dispatch);
      server_.Post(pattern, dispatch);
      server_.Put(pattern, dispatch);
      server_.Delete(pattern, dispatch);
    }
    if (!static_dir.empty() && std::filesystem::is_directory(static_dir)) server_.set_mount_point("/", static_dir.string());
    server_.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      const Json body{{"code", res.status == 404 ? "not_found" : "http_error"}, {"message", "request failed"}, {"detail", req.path}};
      res.set_content(body.dump(), "application/json");
    });
  }

  /// Binds to host:port (0 picks an ephemeral port) and returns the bound port.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("port_unavailable", "could not bind", host + ":" + std::to_string(port));
    return bound;
  }

  /// Blocks serving requests until stop().
  bool listen() { return server_.listen_after_bind(); }

  /// Stops accepting connections; in-flight requests complete first.
  void stop() { server_.stop(); }

  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  Api& api_;
  httplib::Server server_;
};

}  // namespace mapalign
