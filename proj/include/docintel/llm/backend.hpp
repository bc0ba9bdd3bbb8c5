#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace docintel::llm {

enum class BackendKind { kStub, kHttp };

std::string_view backend_kind_name(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view name);

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 512;
  double temperature = 0.0;
  std::vector<std::string> stop;  // at most 4
  std::optional<BackendKind> backend_hint;

  void validate() const;
  nlohmann::json to_json() const;
};

enum class FinishReason { kStop, kLength, kError };

std::string_view finish_reason_name(FinishReason reason);

struct Usage {
  std::size_t prompt_units = 0;
  std::size_t output_units = 0;
};

struct Completion {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  Usage usage;
  std::string backend_id;
  nlohmann::json error;  // set when finish_reason is kError

  nlohmann::json to_json() const;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual Completion complete(const CompletionRequest& request) = 0;
};

// Deterministic offline backend. Echo mode answers "STUB:" + prompt; canned
// mode cycles through scripted responses. Every request is logged.
class StubBackend : public Backend {
 public:
  StubBackend();  // echo
  explicit StubBackend(std::vector<std::string> canned);

  std::string id() const override { return "stub"; }
  Completion complete(const CompletionRequest& request) override;

  std::vector<CompletionRequest> call_log() const;
  std::size_t call_count() const;
  void clear_log();

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> canned_;
  std::size_t next_ = 0;
  std::vector<CompletionRequest> log_;
};

struct HttpBackendOptions {
  std::string endpoint;  // base URL; requests go to <endpoint>/chat/completions
  std::string model;
  std::optional<std::string> api_key;
  std::chrono::milliseconds timeout{120000};
  std::chrono::milliseconds retry_base{500};
  double retry_factor = 2.0;
  int max_attempts = 3;
};

// Chat-completions client:
//   {"model", "messages": [{"role": "user", "content"}], "max_tokens",
//    "temperature", "stop"?} -> {"choices": [{"message": {"content"},
//    "finish_reason"}], "usage": {"prompt_tokens", "completion_tokens"}}
// 429 and 5xx are retried with exponential backoff; other statuses raise
// HttpStatusError at once.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  std::string id() const override { return "http:" + options_.model; }
  Completion complete(const CompletionRequest& request) override;

 private:
  HttpBackendOptions options_;
};

// Caps concurrent complete() calls on the wrapped backend.
class LimitedBackend : public Backend {
 public:
  LimitedBackend(std::shared_ptr<Backend> inner, std::ptrdiff_t max_in_flight);

  std::string id() const override { return inner_->id(); }
  Completion complete(const CompletionRequest& request) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::counting_semaphore<> slots_;
};

// Routes requests by backend_hint, falling back to the default kind. An
// http request with no http backend registered raises BackendUnavailable.
class BackendRegistry : public Backend {
 public:
  BackendRegistry(std::shared_ptr<Backend> stub, std::shared_ptr<Backend> http,
                  BackendKind default_kind);

  // Stub-only registry (the offline default).
  static std::shared_ptr<BackendRegistry> offline();

  std::string id() const override;
  Completion complete(const CompletionRequest& request) override;

  bool has(BackendKind kind) const;
  std::vector<BackendKind> members() const;
  BackendKind default_kind() const { return default_kind_; }
  Backend& get(std::optional<BackendKind> hint);

 private:
  std::shared_ptr<Backend> stub_;
  std::shared_ptr<Backend> http_;
  BackendKind default_kind_;
};

}  // namespace docintel::llm
