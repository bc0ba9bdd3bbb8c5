#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "docintel/llm/backend.hpp"
#include "docintel/llm/template.hpp"
#include "docintel/store/store.hpp"

namespace docintel::pipelines {

inline constexpr const char* kNoContextAnswer =
    "No relevant passages were found in the document store, so the question cannot be "
    "answered from it.";

struct Source {
  std::string chunk_id;
  std::string source_path;
  std::string snippet;
  double score = 0.0;
};

struct Answer {
  std::string question;
  std::string answer_text;
  std::vector<Source> sources;  // retrieval order
  std::string prompt_used;      // empty when no LLM call was made

  nlohmann::json to_json() const;
};

// "[n] source_path" headed passages, one per retrieved chunk.
std::string build_context(const std::vector<store::Retrieved>& hits);

// Retrieves the top k chunks, renders the template with {context} and
// {question}, and asks the backend. Zero hits: sentinel answer, no call.
Answer ask(const std::string& question, const store::Store& store, llm::Backend& backend,
           std::size_t k = 4, const std::optional<llm::PromptTemplate>& prompt = std::nullopt,
           const llm::CompletionRequest& base = {});

}  // namespace docintel::pipelines
