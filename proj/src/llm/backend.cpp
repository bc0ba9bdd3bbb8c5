#include "docintel/llm/backend.hpp"

#include <thread>

#include "docintel/error.hpp"
#include "docintel/net.hpp"
#include "docintel/sparse/tokenizer.hpp"

namespace docintel::llm {

std::string_view backend_kind_name(BackendKind kind) {
  return kind == BackendKind::kStub ? "stub" : "http";
}

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
  if (name == "stub") return BackendKind::kStub;
  if (name == "http") return BackendKind::kHttp;
  return std::nullopt;
}

void CompletionRequest::validate() const {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt must be non-empty");
  if (!(temperature >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  }
  if (max_tokens < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
  if (stop.size() > 4) throw Error(ErrorCode::kInvalidArgument, "at most 4 stop strings");
}

nlohmann::json CompletionRequest::to_json() const {
  nlohmann::json j = {{"prompt", prompt},
                      {"max_tokens", max_tokens},
                      {"temperature", temperature},
                      {"stop", stop}};
  j["backend_hint"] = backend_hint ? nlohmann::json(backend_kind_name(*backend_hint))
                                   : nlohmann::json(nullptr);
  return j;
}

std::string_view finish_reason_name(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

nlohmann::json Completion::to_json() const {
  nlohmann::json j = {{"text", text},
                      {"finish_reason", finish_reason_name(finish_reason)},
                      {"usage",
                       {{"prompt_units", usage.prompt_units},
                        {"output_units", usage.output_units}}},
                      {"backend_id", backend_id}};
  if (finish_reason == FinishReason::kError) j["error"] = error;
  return j;
}

StubBackend::StubBackend() = default;

StubBackend::StubBackend(std::vector<std::string> canned) : canned_(std::move(canned)) {
  if (canned_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "canned stub needs at least one response");
  }
}

Completion StubBackend::complete(const CompletionRequest& request) {
  request.validate();
  Completion c;
  {
    std::lock_guard lock(mutex_);
    log_.push_back(request);
    if (canned_.empty()) {
      c.text = "STUB:" + request.prompt;
    } else {
      c.text = canned_[next_ % canned_.size()];
      ++next_;
    }
  }
  c.backend_id = id();
  c.usage = {sparse::tokenize_terms(request.prompt).size(),
             sparse::tokenize_terms(c.text).size()};
  return c;
}

std::vector<CompletionRequest> StubBackend::call_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t StubBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

void StubBackend::clear_log() {
  std::lock_guard lock(mutex_);
  log_.clear();
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) {
    throw Error(ErrorCode::kBackendUnavailable, "http backend needs an explicit endpoint");
  }
  net::parse_endpoint(options_.endpoint);
  if (options_.max_attempts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_attempts must be >= 1");
  }
}

Completion HttpBackend::complete(const CompletionRequest& request) {
  request.validate();
  const auto endpoint = net::parse_endpoint(options_.endpoint);
  nlohmann::json body = {{"model", options_.model},
                         {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
                         {"max_tokens", request.max_tokens},
                         {"temperature", request.temperature}};
  if (!request.stop.empty()) body["stop"] = request.stop;

  net::HttpResponse response;
  auto delay = std::chrono::duration<double, std::milli>(options_.retry_base);
  for (int attempt = 1;; ++attempt) {
    response = net::post_json(endpoint, "/chat/completions", body, options_.api_key,
                              options_.timeout);
    const bool retryable = response.status == 429 || response.status >= 500;
    if (!retryable || attempt >= options_.max_attempts) break;
    std::this_thread::sleep_for(delay);
    delay *= options_.retry_factor;
  }
  if (response.status < 200 || response.status >= 300) {
    throw Error(ErrorCode::kHttpStatusError,
                "completion endpoint returned HTTP " + std::to_string(response.status),
                {{"status", response.status}, {"body", net::excerpt(response.body)}});
  }

  Completion c;
  c.backend_id = id();
  try {
    const auto parsed = nlohmann::json::parse(response.body);
    const auto& choice = parsed.at("choices").at(0);
    c.text = choice.at("message").at("content").get<std::string>();
    const std::string reason = choice.value("finish_reason", std::string("stop"));
    c.finish_reason = reason == "length" ? FinishReason::kLength : FinishReason::kStop;
    if (parsed.contains("usage") && parsed["usage"].is_object()) {
      c.usage.prompt_units = parsed["usage"].value("prompt_tokens", std::size_t{0});
      c.usage.output_units = parsed["usage"].value("completion_tokens", std::size_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    c.text.clear();
    c.finish_reason = FinishReason::kError;
    c.error = {{"reason", std::string("malformed completion response: ") + e.what()},
               {"body", net::excerpt(response.body)}};
  }
  return c;
}

LimitedBackend::LimitedBackend(std::shared_ptr<Backend> inner, std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(max_in_flight < 1 ? 1 : max_in_flight) {}

Completion LimitedBackend::complete(const CompletionRequest& request) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_->complete(request);
}

BackendRegistry::BackendRegistry(std::shared_ptr<Backend> stub, std::shared_ptr<Backend> http,
                                 BackendKind default_kind)
    : stub_(std::move(stub)), http_(std::move(http)), default_kind_(default_kind) {
  if (!stub_) stub_ = std::make_shared<StubBackend>();
  if (default_kind_ == BackendKind::kHttp && !http_) {
    throw Error(ErrorCode::kBackendUnavailable, "http backend requested but not configured");
  }
}

std::shared_ptr<BackendRegistry> BackendRegistry::offline() {
  return std::make_shared<BackendRegistry>(std::make_shared<StubBackend>(), nullptr,
                                           BackendKind::kStub);
}

std::string BackendRegistry::id() const {
  return default_kind_ == BackendKind::kStub ? stub_->id() : http_->id();
}

bool BackendRegistry::has(BackendKind kind) const {
  return kind == BackendKind::kStub || http_ != nullptr;
}

std::vector<BackendKind> BackendRegistry::members() const {
  std::vector<BackendKind> out{BackendKind::kStub};
  if (http_) out.push_back(BackendKind::kHttp);
  return out;
}

Backend& BackendRegistry::get(std::optional<BackendKind> hint) {
  const BackendKind kind = hint.value_or(default_kind_);
  if (kind == BackendKind::kStub) return *stub_;
  if (!http_) {
    throw Error(ErrorCode::kBackendUnavailable, "no http backend configured",
                {{"requested", "http"}});
  }
  return *http_;
}

Completion BackendRegistry::complete(const CompletionRequest& request) {
  return get(request.backend_hint).complete(request);
}

}  // namespace docintel::llm
