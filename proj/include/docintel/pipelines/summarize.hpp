#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "docintel/dense/embedding.hpp"
#include "docintel/ingest.hpp"
#include "docintel/llm/backend.hpp"
#include "docintel/llm/template.hpp"

namespace docintel::pipelines {

inline constexpr const char* kConceptNotFound =
    "The document has no passages related to the requested concept.";

enum class SummaryStrategy { kMapReduce, kConceptFocused };

struct Summary {
  std::string text;
  SummaryStrategy strategy = SummaryStrategy::kMapReduce;
  std::size_t units_considered = 0;
  std::size_t units_used = 0;
  std::vector<std::string> map_outputs;
  std::size_t reduce_rounds = 0;  // one backend call per round
  std::size_t llm_calls = 0;

  nlohmann::json to_json() const;
};

struct MapReduceOptions {
  ingest::ChunkingParams unit_params;
  std::size_t max_reduce_chars = 8000;
  // Values for template slots other than {text} / {summaries}.
  std::map<std::string, std::string> extra_vars;
  llm::CompletionRequest base;
};

// Summarizes pre-split units. One unit: a single direct call with the map
// template. Otherwise one map call per unit, then reduce rounds: while the
// joined outputs exceed max_reduce_chars, the longest leading run that fits
// (at least two outputs) is reduced to one; once everything fits, a final
// reduce over all of it. Every round is one call, so
// calls = units + reduce_rounds.
Summary map_reduce_units(const std::vector<std::string>& units, llm::Backend& backend,
                         const llm::PromptTemplate& map_template,
                         const llm::PromptTemplate& reduce_template,
                         const MapReduceOptions& options = {});

// Normalizes, splits into passages and runs map_reduce_units.
Summary summarize_map_reduce(const std::string& doc_text, llm::Backend& backend,
                             const llm::PromptTemplate& map_template,
                             const llm::PromptTemplate& reduce_template,
                             const MapReduceOptions& options = {});

struct ConceptOptions {
  double sim_threshold = 0.3;
  std::size_t max_units = 20;
  MapReduceOptions map_reduce;
};

struct ScoredUnit {
  std::size_t index;
  double similarity;
};

// Units with similarity >= threshold, best max_units by (similarity desc,
// index asc), returned in document order.
std::vector<ScoredUnit> select_concept_units(const std::vector<std::string>& units,
                                             const std::string& concept_text,
                                             const dense::Embedder& embedder,
                                             double sim_threshold, std::size_t max_units);

// Summarizes only the passages similar to the concept; no kept passage gives
// the not-found sentinel without any backend call.
Summary summarize_concept(const std::string& doc_text, const std::string& concept_text,
                          const dense::Embedder& embedder, llm::Backend& backend,
                          const ConceptOptions& options = {});

}  // namespace docintel::pipelines
