#include "docintel/service/runtime.hpp"

#include <chrono>
#include <cstdlib>

#include "docintel/error.hpp"
#include "docintel/text/hash.hpp"

namespace docintel::service {
namespace {

std::optional<std::string> key_from_env(const std::string& var) {
  if (var.empty()) return std::nullopt;
  const char* value = std::getenv(var.c_str());
  if (!value) return std::nullopt;
  return std::string(value);
}

}  // namespace

std::shared_ptr<const dense::Embedder> make_embedder(const Config& config) {
  if (config.embedder.kind == EmbedderKind::kHash) {
    return std::make_shared<dense::HashEmbedder>(config.embedder.dim);
  }
  dense::RemoteEmbedderOptions opts;
  opts.endpoint = config.embedder.endpoint;
  opts.model = config.embedder.model;
  opts.api_key = key_from_env(config.embedder.api_key_env);
  opts.dimension = config.embedder.dim;
  opts.batch_limit = config.embedder.batch_limit;
  opts.max_in_flight = config.server.max_in_flight;
  return std::make_shared<dense::RemoteEmbedder>(std::move(opts));
}

std::shared_ptr<llm::BackendRegistry> make_registry(const Config& config) {
  std::shared_ptr<llm::Backend> http;
  if (!config.llm.endpoint.empty()) {
    llm::HttpBackendOptions opts;
    opts.endpoint = config.llm.endpoint;
    opts.model = config.llm.model;
    opts.api_key = key_from_env(config.llm.api_key_env);
    opts.timeout = std::chrono::milliseconds(config.llm.timeout_ms);
    http = std::make_shared<llm::HttpBackend>(std::move(opts));
  }
  return std::make_shared<llm::BackendRegistry>(std::make_shared<llm::StubBackend>(), http,
                                                config.llm.backend);
}

std::shared_ptr<llm::Backend> make_backend(const Config& config) {
  return std::make_shared<llm::LimitedBackend>(
      make_registry(config), static_cast<std::ptrdiff_t>(config.server.max_in_flight));
}

store::StoreOptions store_options(const Config& config) {
  store::StoreOptions opts;
  opts.kind = config.store_kind;
  opts.hnsw = config.hnsw;
  opts.bm25 = config.bm25;
  opts.fusion = config.fusion;
  return opts;
}

Logger::Logger(std::ostream& out, Level min_level) : out_(out), min_level_(min_level) {}

void Logger::log(Level level, std::string_view event, nlohmann::json fields) {
  if (level < min_level_) return;
  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  nlohmann::json record = {{"ts", now},
                           {"level", kNames[static_cast<int>(level)]},
                           {"event", std::string(event)}};
  if (fields.is_object()) {
    for (auto& [k, v] : fields.items()) record[k] = v;
  }
  std::lock_guard lock(mutex_);
  out_ << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  out_.flush();
}

std::string content_id(const nlohmann::json& canonical) {
  return text::sha256_hex(canonical.dump()).substr(0, 32);
}

}  // namespace docintel::service
