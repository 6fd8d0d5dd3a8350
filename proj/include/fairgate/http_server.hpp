#pragma once

#include <atomic>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "fairgate/error.hpp"
#include "fairgate/service.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fairgate {

// JSON-over-HTTP front end for a ValidatorService.
//
//   POST /v1/validate            {"market","text"}                -> ValidationResponse
//   POST /v1/attempts            {"session_id","market","text","submitted"} -> AttemptRecord
//   GET  /v1/stats/corrections   ?market=                         -> CorrectionStats
//   GET  /v1/moderation/flags    ?market=                         -> [ModerationFlag]
//   GET  /v1/markets                                              -> [{market, threshold, ...}]
//
// Domain errors map to 400 (validation), 404 (unknown market), 409 (second
// final submission); anything else is a 500 carrying an opaque incident id.
class HttpService {
 public:
  explicit HttpService(ValidatorService& service) : service_(service) { install_routes(); }

  // Binds to `port` (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      bound_port_ = server_.bind_to_any_port(host);
    } else {
      bound_port_ = server_.bind_to_port(host, port) ? port : -1;
    }
    if (bound_port_ < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return bound_port_;
  }

  // Blocks until stop() is called.
  bool serve() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }
  int port() const { return bound_port_; }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    nlohmann::ordered_json body;
    body["error"] = message;
    send_json(res, status, body);
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      auto body = nlohmann::json::parse(req.body);
      if (!body.is_object()) throw ValidationError("request body must be a JSON object");
      return body;
    } catch (const nlohmann::json::parse_error&) {
      throw ValidationError("request body is not valid JSON");
    }
  }

  static std::string string_field(const nlohmann::json& body, const char* name) {
    const auto it = body.find(name);
    if (it == body.end() || !it->is_string()) {
      throw ValidationError(std::string("field \"") + name + "\" must be a string");
    }
    return it->get<std::string>();
  }

  static std::optional<std::string> market_param(const httplib::Request& req) {
    if (!req.has_param("market")) return std::nullopt;
    return req.get_param_value("market");
  }

  template <typename Handler>
  httplib::Server::Handler guarded(Handler handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      try {
        handler(req, res);
      } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
      } catch (const ValidationError& e) {
        send_error(res, 400, e.what());
      } catch (const ConflictError& e) {
        send_error(res, 409, e.what());
      } catch (const std::exception& e) {
        char id[24];
        std::snprintf(id, sizeof id, "E%06llu",
                      static_cast<unsigned long long>(++incidents_));
        std::cerr << "internal error " << id << " on " << req.method << ' ' << req.path << ": "
                  << e.what() << '\n';
        nlohmann::ordered_json body;
        body["error"] = "internal error";
        body["id"] = id;
        send_json(res, 500, body);
      }
    };
  }

  void install_routes() {
    server_.Post("/v1/validate", guarded([this](const auto& req, auto& res) {
      const auto body = parse_body(req);
      const auto r = service_.validate_review(string_field(body, "market"),
                                              string_field(body, "text"));
      send_json(res, 200, to_json(r));
    }));

    server_.Post("/v1/attempts", guarded([this](const auto& req, auto& res) {
      const auto body = parse_body(req);
      bool submitted = false;
      if (const auto it = body.find("submitted"); it != body.end()) {
        if (!it->is_boolean()) throw ValidationError("field \"submitted\" must be a boolean");
        submitted = it->template get<bool>();
      }
      const auto record = service_.record_attempt(string_field(body, "session_id"),
                                                  string_field(body, "market"),
                                                  string_field(body, "text"), submitted);
      send_json(res, 200, to_json(record));
    }));

    server_.Get("/v1/stats/corrections", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, to_json(service_.corrections(market_param(req))));
    }));

    server_.Get("/v1/moderation/flags", guarded([this](const auto& req, auto& res) {
      const auto flags = service_.flags(market_param(req));
      send_json(res, 200, to_json(std::span<const ModerationFlag>(flags)));
    }));

    server_.Get("/v1/markets", guarded([this](const auto&, auto& res) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& m : service_.markets()) {
        nlohmann::ordered_json j;
        j["market"] = m.market;
        j["display_name"] = m.display_name;
        j["threshold"] = m.threshold;
        j["model_version"] = m.model_version;
        arr.push_back(std::move(j));
      }
      send_json(res, 200, arr);
    }));

    server_.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
  }

  ValidatorService& service_;
  httplib::Server server_;
  int bound_port_ = -1;
  std::atomic<unsigned long long> incidents_{0};
};

}  // namespace fairgate
