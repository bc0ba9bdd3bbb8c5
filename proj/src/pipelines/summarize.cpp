#include "docintel/pipelines/summarize.hpp"

#include <algorithm>

#include "docintel/error.hpp"
#include "docintel/pipelines/templates.hpp"
#include "docintel/pipelines/units.hpp"
#include "docintel/text/utf8.hpp"

namespace docintel::pipelines {
namespace {

constexpr const char* kJoiner = "\n\n";

std::string join(const std::vector<std::string>& parts, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += kJoiner;
    out += parts[i];
  }
  return out;
}

std::string call(llm::Backend& backend, const llm::PromptTemplate& tpl,
                 std::map<std::string, std::string> vars, const std::string& slot,
                 std::string value, const llm::CompletionRequest& base) {
  vars[slot] = std::move(value);
  llm::CompletionRequest request = base;
  request.prompt = tpl.render(vars);
  return backend.complete(request).text;
}

}  // namespace

nlohmann::json Summary::to_json() const {
  return {{"text", text},
          {"strategy", strategy == SummaryStrategy::kMapReduce ? "map_reduce" : "concept_focused"},
          {"units_considered", units_considered},
          {"units_used", units_used},
          {"map_outputs", map_outputs},
          {"reduce_rounds", reduce_rounds},
          {"llm_calls", llm_calls}};
}

Summary map_reduce_units(const std::vector<std::string>& units, llm::Backend& backend,
                         const llm::PromptTemplate& map_template,
                         const llm::PromptTemplate& reduce_template,
                         const MapReduceOptions& options) {
  if (units.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to summarize");
  if (options.max_reduce_chars < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_reduce_chars must be >= 1");
  }
  Summary summary;
  summary.units_considered = summary.units_used = units.size();

  auto map_one = [&](std::size_t i) {
    try {
      ++summary.llm_calls;
      return call(backend, map_template, options.extra_vars, "text", units[i], options.base);
    } catch (const Error& e) {
      throw Error(e.code(), "unit " + std::to_string(i) + ": " + e.what(),
                  {{"unit_index", i}, {"cause", e.detail()}});
    }
  };
  if (units.size() == 1) {
    summary.text = map_one(0);
    return summary;
  }
  for (std::size_t i = 0; i < units.size(); ++i) summary.map_outputs.push_back(map_one(i));

  auto reduce = [&](const std::string& joined) {
    ++summary.llm_calls;
    ++summary.reduce_rounds;
    return call(backend, reduce_template, options.extra_vars, "summaries", joined, options.base);
  };
  auto fits = [&](const std::string& s) {
    return text::utf8_length(s) <= options.max_reduce_chars;
  };

  std::vector<std::string> outputs = summary.map_outputs;
  while (outputs.size() > 1) {
    std::string all = join(outputs, 0, outputs.size());
    if (fits(all)) {
      outputs = {reduce(all)};
      break;
    }
    std::size_t m = 2;
    while (m + 1 < outputs.size() && fits(join(outputs, 0, m + 1))) ++m;
    std::string head = reduce(join(outputs, 0, m));
    outputs.erase(outputs.begin(), outputs.begin() + static_cast<std::ptrdiff_t>(m));
    outputs.insert(outputs.begin(), std::move(head));
  }
  summary.text = std::move(outputs.front());
  return summary;
}

Summary summarize_map_reduce(const std::string& doc_text, llm::Backend& backend,
                             const llm::PromptTemplate& map_template,
                             const llm::PromptTemplate& reduce_template,
                             const MapReduceOptions& options) {
  const std::string normalized = ingest::normalize_text(doc_text);
  if (normalized.empty()) throw Error(ErrorCode::kInvalidArgument, "document text is empty");
  std::vector<std::string> passages;
  for (auto& u : split_units(normalized, UnitKind::kPassage, options.unit_params)) {
    passages.push_back(std::move(u.text));
  }
  return map_reduce_units(passages, backend, map_template, reduce_template, options);
}

std::vector<ScoredUnit> select_concept_units(const std::vector<std::string>& units,
                                             const std::string& concept_text,
                                             const dense::Embedder& embedder,
                                             double sim_threshold, std::size_t max_units) {
  std::vector<ScoredUnit> kept;
  if (units.empty()) return kept;
  const auto q = embedder.embed_one(concept_text);
  const auto vectors = embedder.embed(units);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const double sim = dense::cosine(q, vectors[i]);
    if (sim >= sim_threshold) kept.push_back({i, sim});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const ScoredUnit& a, const ScoredUnit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.index < b.index;
  });
  if (kept.size() > max_units) kept.resize(max_units);
  std::sort(kept.begin(), kept.end(),
            [](const ScoredUnit& a, const ScoredUnit& b) { return a.index < b.index; });
  return kept;
}

Summary summarize_concept(const std::string& doc_text, const std::string& concept_text,
                          const dense::Embedder& embedder, llm::Backend& backend,
                          const ConceptOptions& options) {
  bool blank = true;
  for (char32_t c : text::decode_utf8(concept_text)) {
    if (!text::is_space(c)) blank = false;
  }
  if (blank) throw Error(ErrorCode::kInvalidArgument, "concept must be non-empty");

  std::vector<std::string> passages;
  for (auto& u : split_units(ingest::normalize_text(doc_text), UnitKind::kPassage,
                             options.map_reduce.unit_params)) {
    passages.push_back(std::move(u.text));
  }
  const auto kept = select_concept_units(passages, concept_text, embedder,
                                         options.sim_threshold, options.max_units);
  Summary summary;
  if (!kept.empty()) {
    std::vector<std::string> chosen;
    for (const auto& k : kept) chosen.push_back(passages[k.index]);
    MapReduceOptions mr = options.map_reduce;
    mr.extra_vars["concept"] = concept_text;
    summary = map_reduce_units(chosen, backend, default_template("concept_map"),
                               default_template("concept_reduce"), mr);
  } else {
    summary.text = kConceptNotFound;
  }
  summary.strategy = SummaryStrategy::kConceptFocused;
  summary.units_considered = passages.size();
  summary.units_used = kept.size();
  return summary;
}

}  // namespace docintel::pipelines
