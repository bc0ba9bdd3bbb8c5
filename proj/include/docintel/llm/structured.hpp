#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "docintel/error.hpp"
#include "docintel/llm/backend.hpp"

namespace docintel::llm {

enum class FieldType { kString, kInteger, kNumber, kBoolean, kStringList };

std::string_view field_type_name(FieldType type);
std::optional<FieldType> parse_field_type(std::string_view name);

struct SchemaField {
  std::string name;
  FieldType type = FieldType::kString;
  bool required = true;
  std::string description;

  bool operator==(const SchemaField&) const = default;
};

struct ExtractionSchema {
  std::vector<SchemaField> fields;

  // Names must be unique, non-empty snake_case.
  void validate() const;
  nlohmann::json to_json() const;
  // Accepts [{"name", "type", "required"?, "description"?}, ...] or
  // {"fields": [...]}.
  static ExtractionSchema from_json(const nlohmann::json& j);
  bool operator==(const ExtractionSchema&) const = default;
};

enum class ViolationKind { kNoJsonFound, kInvalidJson, kMissing, kWrongType };

std::string_view violation_kind_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string field;  // empty for document-level violations
  std::string message;

  bool operator==(const Violation&) const = default;
  nlohmann::json to_json() const;
};

struct ValidationResult {
  std::optional<nlohmann::json> record;  // set iff violations is empty
  std::vector<Violation> violations;
  std::vector<std::string> warnings;  // unknown fields

  bool ok() const { return record.has_value(); }
};

// First top-level balanced {...} block in raw, respecting JSON strings.
std::optional<std::string> first_json_object(std::string_view raw);

// Every field is checked; violations are collected, not short-circuited.
// Integers accept floats only when they have no fractional part.
ValidationResult validate_structured(std::string_view raw, const ExtractionSchema& schema);

// Schema description appended to extraction prompts.
std::string schema_prompt_block(const ExtractionSchema& schema);

struct StructuredResult {
  nlohmann::json record;
  std::size_t attempts = 0;
  std::string raw;
};

class StructuredFailure : public Error {
 public:
  StructuredFailure(std::string last_raw, std::vector<Violation> violations,
                    std::size_t attempts);

  const std::string& last_raw() const { return last_raw_; }
  const std::vector<Violation>& violations() const { return violations_; }
  std::size_t attempts() const { return attempts_; }

 private:
  std::string last_raw_;
  std::vector<Violation> violations_;
  std::size_t attempts_;
};

// Up to 1 + max_retries backend calls; each retry re-prompts with the
// previous violations. Backend errors propagate on the spot.
StructuredResult complete_structured(const std::string& prompt, const ExtractionSchema& schema,
                                     Backend& backend, std::size_t max_retries = 2,
                                     const CompletionRequest& base = {});

}  // namespace docintel::llm
