#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "docintel/dense/embedding.hpp"
#include "docintel/error.hpp"
#include "docintel/llm/backend.hpp"
#include "docintel/service/config.hpp"
#include "docintel/service/runtime.hpp"
#include "docintel/store/store.hpp"

namespace httplib {
class Server;
}

namespace docintel::service {

struct ApiRequest {
  std::string method;  // GET, POST
  std::string path;
  std::map<std::string, std::string> params;  // query string
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// HTTP status for an error code: 400 user errors, 404 not_found, 409
// ingest_in_progress / store_empty, 502 upstream failures, 503
// backend_unavailable, 500 otherwise.
int http_status(ErrorCode code);

// {"code", "message", "detail"?}
nlohmann::json api_error(const std::string& code, const std::string& message,
                         const nlohmann::json& detail = nullptr);

// Request routing and handlers. handle() is transport-free; serve() puts it
// behind an HTTP listener. Reads run concurrently against an immutable store
// snapshot; an ingest builds the next snapshot under the store lock and
// swaps it in when committed.
class Service {
 public:
  Service(Config config, std::shared_ptr<const dense::Embedder> embedder,
          std::shared_ptr<llm::Backend> backend, Logger* logger = nullptr);
  ~Service();

  ApiResponse handle(const ApiRequest& request);

  std::shared_ptr<const store::Store> snapshot() const;
  const Config& config() const { return config_; }

  // Binds server.bind_addr:server.port (0 picks a free port) and returns the
  // bound port. listen() blocks until stop().
  int bind();
  void listen();
  void stop();

 private:
  nlohmann::json health() const;
  nlohmann::json ingest(const nlohmann::json& body);
  nlohmann::json search(const ApiRequest& request) const;
  nlohmann::json ask(const nlohmann::json& body) const;
  nlohmann::json extract(const nlohmann::json& body) const;
  nlohmann::json summarize(const nlohmann::json& body) const;
  nlohmann::json classify_train(const nlohmann::json& body) const;
  nlohmann::json classify_predict(const nlohmann::json& body) const;
  std::string document_or_404(const std::string& source_path) const;

  Config config_;
  std::shared_ptr<const dense::Embedder> embedder_;
  std::shared_ptr<llm::Backend> backend_;
  Logger* logger_;

  mutable std::mutex store_mutex_;
  std::shared_ptr<const store::Store> store_;
  std::mutex ingest_mutex_;

  std::unique_ptr<httplib::Server> server_;
};

}  // namespace docintel::service
