#include "lethe/service.hpp"

#include <atomic>
#include <csignal>
#include <regex>

#include "httplib.h"

namespace lethe {
namespace {

ApiResponse json_response(int status, const Json& doc) {
  return {status, canonical_encode(doc)};
}

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, Json{{"code", std::string(code)}, {"message", message}});
}

ApiResponse error_response(const Error& e) {
  return error_response(http_status(e.code()), to_string(e.code()), e.what());
}

Json parse_body(const std::string& body) {
  Json doc = Json::parse(body, nullptr, false);
  if (doc.is_discarded()) fail(Errc::MalformedRequest, "request body is not valid JSON");
  return doc;
}

ApiResponse erasure_response(const ErasureStatus& status, bool created) {
  if (status.error) {
    Json doc = status.to_json();
    doc["code"] = std::string(to_string(*status.error));
    doc["message"] = status.message;
    return json_response(http_status(*status.error), doc);
  }
  return json_response(created ? 202 : 200, status.to_json());
}

std::string url_decode(const std::string& text) {
  return httplib::detail::decode_url(text, false);
}

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void stop_server(int) {
  if (auto* server = g_server.load()) server->stop();
}

}  // namespace

ApiResponse Service::handle(const ApiRequest& request) {
  static const std::regex kErasureId(R"(^/v1/erasure/([^/]+)$)");
  static const std::regex kInfluence(R"(^/v1/concepts/([^/]+)/influence$)");
  static const std::regex kPolicy(R"(^/v1/policies/([^/]+)$)");

  const std::string& m = request.method;
  const std::string& path = request.path;
  std::smatch match;
  try {
    if (path == "/v1/erasure") {
      if (m != "POST") return error_response(405, "MethodNotAllowed", m + " " + path);
      return erasure_response(engine_.submit_erasure(parse_body(request.body)), true);
    }
    if (std::regex_match(path, match, kErasureId)) {
      if (m != "GET") return error_response(405, "MethodNotAllowed", m + " " + path);
      auto status = engine_.erasure(url_decode(match[1]));
      if (!status) return error_response(404, "NotFound", "no such request");
      return json_response(200, status->to_json());
    }
    if (path == "/v1/ingest") {
      if (m != "POST") return error_response(405, "MethodNotAllowed", m + " " + path);
      return json_response(200, engine_.ingest(parse_body(request.body)).to_json());
    }
    if (path == "/v1/audit") {
      if (m != "GET") return error_response(405, "MethodNotAllowed", m + " " + path);
      Json entries = Json::array();
      for (const LedgerEntry& e : engine_.audit_entries()) entries.push_back(e.to_json());
      const std::size_t count = entries.size();
      return json_response(200, Json{{"entry_count", count}, {"entries", std::move(entries)}});
    }
    if (path == "/v1/audit/verify") {
      if (m != "GET") return error_response(405, "MethodNotAllowed", m + " " + path);
      const VerifyResult result = engine_.verify_audit();
      Json doc{{"valid", result.valid}, {"entry_count", result.entry_count}};
      if (result.first_invalid_index) doc["first_invalid_index"] = *result.first_invalid_index;
      return json_response(200, doc);
    }
    if (std::regex_match(path, match, kInfluence)) {
      if (m != "GET") return error_response(405, "MethodNotAllowed", m + " " + path);
      return json_response(200, engine_.influence_of(url_decode(match[1])).to_json());
    }
    if (std::regex_match(path, match, kPolicy)) {
      const std::string subject = url_decode(match[1]);
      if (m == "GET") {
        auto policy = engine_.get_policy(subject);
        if (!policy) {
          return error_response(404, "PolicyNotFound", "no policy for subject " + subject);
        }
        return json_response(200, policy->to_json());
      }
      if (m == "PUT") {
        Json body = parse_body(request.body);
        if (!body.is_object()) fail(Errc::InvalidPolicy, "policy must be an object");
        if (body.contains("subject_id") && body["subject_id"] != subject) {
          fail(Errc::InvalidPolicy, "subject_id does not match the request path");
        }
        body["subject_id"] = subject;
        const PrivacyPolicy policy = PrivacyPolicy::from_json(body);
        engine_.put_policy(policy);
        return json_response(200, policy.to_json());
      }
      return error_response(405, "MethodNotAllowed", m + " " + path);
    }
    if (path == "/v1/sweep") {
      if (m != "POST") return error_response(405, "MethodNotAllowed", m + " " + path);
      const Json body = request.body.empty() ? Json::object() : parse_body(request.body);
      std::int64_t now = engine_.now();
      if (body.is_object() && body.contains("now")) {
        if (!body["now"].is_number_integer()) {
          fail(Errc::MalformedRequest, "now must be an integer timestamp");
        }
        now = body["now"].get<std::int64_t>();
      }
      return json_response(200, engine_.sweep(now).to_json());
    }
    return error_response(404, "NotFound", "no route for " + m + " " + path);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return error_response(500, "InternalError", e.what());
  }
}

ListenAddress parse_listen_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    fail(Errc::MalformedRequest, "listen address must be host:port, got " + text);
  }
  ListenAddress address;
  address.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    address.port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    fail(Errc::MalformedRequest, "invalid port in " + text);
  }
  if (address.port < 0 || address.port > 65535) {
    fail(Errc::MalformedRequest, "port out of range in " + text);
  }
  return address;
}

bool serve(Engine& engine, const ListenAddress& address) {
  Service service(engine);
  httplib::Server server;
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    // Route on the raw target; Service decodes path parameters itself.
    const std::string raw_path = req.target.substr(0, req.target.find('?'));
    const ApiResponse out = service.handle({req.method, raw_path, req.body});
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(R"(/.*)", route);
  server.Post(R"(/.*)", route);
  server.Put(R"(/.*)", route);
  server.Delete(R"(/.*)", route);

  g_server.store(&server);
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  const bool ok = server.listen(address.host, address.port);
  g_server.store(nullptr);
  return ok;
}

}  // namespace lethe
