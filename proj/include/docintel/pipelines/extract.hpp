#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "docintel/llm/backend.hpp"
#include "docintel/llm/structured.hpp"
#include "docintel/llm/template.hpp"

namespace docintel::pipelines {

struct UnitRef {
  std::string source_path;
  std::size_t unit_index = 0;
  std::string unit_text;
};

enum class RecordStatus { kOk, kFailed };

struct ExtractionRecord {
  UnitRef unit_ref;
  RecordStatus status = RecordStatus::kOk;
  std::optional<nlohmann::json> record;     // when ok
  std::vector<llm::Violation> violations;   // when failed on validation
  std::string error;                        // when failed on a backend error
  std::size_t attempts = 0;

  nlohmann::json to_json() const;
};

// One structured completion per unit, in input order. The template must have
// exactly the {unit} slot. Failures become failed records; the batch never
// aborts.
std::vector<ExtractionRecord> extract(const std::vector<UnitRef>& units,
                                      const llm::PromptTemplate& prompt,
                                      const llm::ExtractionSchema& schema, llm::Backend& backend,
                                      std::size_t max_retries = 2,
                                      const llm::CompletionRequest& base = {});

// RFC 4180 CSV (CRLF line ends, UTF-8 without BOM). Header: source_path,
// unit_index, status, then the schema fields. string_list values are joined
// with "; "; failed rows leave the schema columns empty.
std::string to_csv(const std::vector<ExtractionRecord>& records,
                   const llm::ExtractionSchema& schema);
void export_csv(const std::vector<ExtractionRecord>& records,
                const llm::ExtractionSchema& schema, const std::filesystem::path& path);

}  // namespace docintel::pipelines
