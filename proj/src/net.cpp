#include <httplib.h>

#include "docintel/net.hpp"

#include "docintel/error.hpp"

namespace docintel::net {

Endpoint parse_endpoint(std::string_view url) {
  std::string_view rest;
  std::string scheme;
  if (url.substr(0, 7) == "http://") {
    scheme = "http://";
    rest = url.substr(7);
  } else if (url.substr(0, 8) == "https://") {
    scheme = "https://";
    rest = url.substr(8);
  } else {
    throw Error(ErrorCode::kInvalidValue,
                "endpoint must start with http:// or https://: " + std::string(url));
  }
  std::size_t slash = rest.find('/');
  std::string_view host = rest.substr(0, slash);
  if (host.empty()) {
    throw Error(ErrorCode::kInvalidValue, "endpoint has no host: " + std::string(url));
  }
  Endpoint ep;
  ep.origin = scheme + std::string(host);
  if (slash != std::string_view::npos) {
    ep.base_path = std::string(rest.substr(slash));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  return ep;
}

HttpResponse post_json(const Endpoint& endpoint, std::string_view path,
                       const nlohmann::json& body,
                       const std::optional<std::string>& bearer_token,
                       std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (bearer_token && !bearer_token->empty()) {
    headers.emplace("Authorization", "Bearer " + *bearer_token);
  }
  const std::string target = endpoint.base_path + std::string(path);
  auto result = client.Post(target, headers, body.dump(), "application/json");
  if (!result) {
    throw Error(ErrorCode::kNetworkError,
                "request to " + endpoint.origin + target + " failed: " +
                    httplib::to_string(result.error()),
                nlohmann::json{{"endpoint", endpoint.origin + target}});
  }
  return {result->status, result->body};
}

std::string excerpt(std::string_view body, std::size_t limit) {
  if (body.size() <= limit) return std::string(body);
  return std::string(body.substr(0, limit)) + "...";
}

}  // namespace docintel::net
