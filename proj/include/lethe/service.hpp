#pragma once

#include <string>

#include "lethe/engine.hpp"

namespace lethe {

struct ApiRequest {
  std::string method;
  std::string path;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // canonical JSON
};

/// Transport-independent router for the v1 endpoint table:
///
///   POST /v1/erasure                    GET /v1/erasure/{id}
///   POST /v1/ingest                     POST /v1/sweep        {"now": t}
///   GET  /v1/audit                      GET  /v1/audit/verify
///   GET  /v1/concepts/{name}/influence
///   PUT  /v1/policies/{subject}         GET  /v1/policies/{subject}
///
/// Errors are {"code", "message"} documents with an HTTP-equivalent status.
class Service {
 public:
  explicit Service(Engine& engine) : engine_(engine) {}

  ApiResponse handle(const ApiRequest& request);

 private:
  Engine& engine_;
};

struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 7341;
};

// "host:port"; throws MalformedRequest.
ListenAddress parse_listen_address(const std::string& text);

// Serves `engine` over HTTP/1.1 until the process receives SIGINT/SIGTERM.
// Returns false when the address cannot be bound.
bool serve(Engine& engine, const ListenAddress& address);

}  // namespace lethe
