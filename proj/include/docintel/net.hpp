#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace docintel::net {

struct Endpoint {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // without trailing slash, may be empty
};

// Accepts http:// and https:// URLs; throws InvalidValue otherwise.
Endpoint parse_endpoint(std::string_view url);

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POSTs a JSON body to origin + base_path + path. Transport failures raise
// NetworkError; any HTTP status is returned to the caller.
HttpResponse post_json(const Endpoint& endpoint, std::string_view path,
                       const nlohmann::json& body,
                       const std::optional<std::string>& bearer_token,
                       std::chrono::milliseconds timeout);

// First `limit` bytes of a response body, for error details.
std::string excerpt(std::string_view body, std::size_t limit = 200);

}  // namespace docintel::net
