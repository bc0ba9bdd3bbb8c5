#include "docintel/pipelines/ask.hpp"

#include "docintel/error.hpp"
#include "docintel/pipelines/templates.hpp"
#include "docintel/text/utf8.hpp"

namespace docintel::pipelines {

nlohmann::json Answer::to_json() const {
  nlohmann::json src = nlohmann::json::array();
  for (const auto& s : sources) {
    src.push_back({{"chunk_id", s.chunk_id},
                   {"source_path", s.source_path},
                   {"snippet", s.snippet},
                   {"score", s.score}});
  }
  return {{"question", question},
          {"answer_text", answer_text},
          {"sources", src},
          {"prompt_used", prompt_used}};
}

std::string build_context(const std::vector<store::Retrieved>& hits) {
  std::string out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (i) out += "\n\n";
    out += "[" + std::to_string(i + 1) + "] " + hits[i].source_path + "\n" + hits[i].text;
  }
  return out;
}

Answer ask(const std::string& question, const store::Store& store, llm::Backend& backend,
           std::size_t k, const std::optional<llm::PromptTemplate>& prompt,
           const llm::CompletionRequest& base) {
  bool blank = true;
  for (char32_t c : text::decode_utf8(question)) {
    if (!text::is_space(c)) blank = false;
  }
  if (blank) throw Error(ErrorCode::kEmptyQuestion, "question must be non-empty");
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");

  Answer answer;
  answer.question = question;
  const auto hits = store.retrieve(question, k);
  if (hits.empty()) {
    answer.answer_text = kNoContextAnswer;
    return answer;
  }
  const llm::PromptTemplate tpl = prompt ? *prompt : default_template("ask");
  answer.prompt_used = tpl.render({{"context", build_context(hits)}, {"question", question}});
  llm::CompletionRequest request = base;
  request.prompt = answer.prompt_used;
  answer.answer_text = backend.complete(request).text;
  for (const auto& h : hits) answer.sources.push_back({h.chunk_id, h.source_path, h.snippet, h.score});
  return answer;
}

}  // namespace docintel::pipelines
