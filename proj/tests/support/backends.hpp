#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "docintel/llm/backend.hpp"

namespace docintel::testing {

// Answers through a callback and logs every prompt.
class FnBackend : public llm::Backend {
 public:
  explicit FnBackend(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}

  std::string id() const override { return "fn"; }
  llm::Completion complete(const llm::CompletionRequest& request) override {
    {
      std::lock_guard lock(mutex_);
      prompts_.push_back(request.prompt);
    }
    llm::Completion c;
    c.text = fn_(request.prompt);
    c.backend_id = id();
    return c;
  }

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
  }
  std::size_t calls() const { return prompts().size(); }

 private:
  std::function<std::string(const std::string&)> fn_;
  mutable std::mutex mutex_;
  std::vector<std::string> prompts_;
};

}  // namespace docintel::testing
