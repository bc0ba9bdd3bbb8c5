#pragma once

#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "docintel/dense/embedding.hpp"
#include "docintel/llm/backend.hpp"
#include "docintel/service/config.hpp"
#include "docintel/store/store.hpp"

namespace docintel::service {

inline constexpr const char* kVersion = "0.1.0";

std::shared_ptr<const dense::Embedder> make_embedder(const Config& config);

// Stub is always registered; http only when configured with an endpoint.
// The result is capped at server.max_in_flight concurrent calls.
std::shared_ptr<llm::Backend> make_backend(const Config& config);
std::shared_ptr<llm::BackendRegistry> make_registry(const Config& config);

store::StoreOptions store_options(const Config& config);

// JSON-lines log records: {"ts", "level", "event", ...fields}.
class Logger {
 public:
  enum class Level { kDebug, kInfo, kWarn, kError };

  explicit Logger(std::ostream& out, Level min_level = Level::kInfo);

  void log(Level level, std::string_view event, nlohmann::json fields = nlohmann::json::object());
  void info(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
    log(Level::kInfo, event, std::move(fields));
  }
  void warn(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
    log(Level::kWarn, event, std::move(fields));
  }
  void error(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
    log(Level::kError, event, std::move(fields));
  }

 private:
  std::mutex mutex_;
  std::ostream& out_;
  Level min_level_;
};

// Content hash used as a model id.
std::string content_id(const nlohmann::json& canonical);

}  // namespace docintel::service
