#include "docintel/llm/structured.hpp"

#include <cmath>
#include <set>

namespace docintel::llm {

std::string_view field_type_name(FieldType type) {
  switch (type) {
    case FieldType::kString: return "string";
    case FieldType::kInteger: return "integer";
    case FieldType::kNumber: return "number";
    case FieldType::kBoolean: return "boolean";
    case FieldType::kStringList: return "string_list";
  }
  return "string";
}

std::optional<FieldType> parse_field_type(std::string_view name) {
  for (auto t : {FieldType::kString, FieldType::kInteger, FieldType::kNumber,
                 FieldType::kBoolean, FieldType::kStringList}) {
    if (field_type_name(t) == name) return t;
  }
  return std::nullopt;
}

void ExtractionSchema::validate() const {
  if (fields.empty()) throw Error(ErrorCode::kInvalidArgument, "schema has no fields");
  std::set<std::string> seen;
  for (const auto& f : fields) {
    bool snake = !f.name.empty() && f.name[0] >= 'a' && f.name[0] <= 'z';
    for (char c : f.name) {
      if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) snake = false;
    }
    if (!snake) {
      throw Error(ErrorCode::kInvalidArgument,
                  "schema field name must be snake_case: '" + f.name + "'");
    }
    if (!seen.insert(f.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate schema field: " + f.name);
    }
  }
}

nlohmann::json ExtractionSchema::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : fields) {
    out.push_back({{"name", f.name},
                   {"type", field_type_name(f.type)},
                   {"required", f.required},
                   {"description", f.description}});
  }
  return out;
}

ExtractionSchema ExtractionSchema::from_json(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() && j.contains("fields") ? j.at("fields") : j;
  if (!list.is_array()) {
    throw Error(ErrorCode::kInvalidArgument, "schema must be an array of fields");
  }
  ExtractionSchema schema;
  try {
    for (const auto& item : list) {
      SchemaField f;
      f.name = item.at("name").get<std::string>();
      const auto type_name = item.value("type", std::string("string"));
      auto type = parse_field_type(type_name);
      if (!type) throw Error(ErrorCode::kInvalidArgument, "unknown field type: " + type_name);
      f.type = *type;
      f.required = item.value("required", true);
      f.description = item.value("description", std::string());
      schema.fields.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad schema: ") + e.what());
  }
  schema.validate();
  return schema;
}

std::string_view violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kNoJsonFound: return "no_json_found";
    case ViolationKind::kInvalidJson: return "invalid_json";
    case ViolationKind::kMissing: return "missing";
    case ViolationKind::kWrongType: return "wrong_type";
  }
  return "invalid_json";
}

nlohmann::json Violation::to_json() const {
  nlohmann::json j = {{"kind", violation_kind_name(kind)}, {"message", message}};
  j["field"] = field.empty() ? nlohmann::json(nullptr) : nlohmann::json(field);
  return j;
}

std::optional<std::string> first_json_object(std::string_view raw) {
  const std::size_t open = raw.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return std::string(raw.substr(open, i - open + 1));
    }
  }
  return std::nullopt;
}

namespace {

bool type_matches(const nlohmann::json& v, FieldType type) {
  switch (type) {
    case FieldType::kString: return v.is_string();
    case FieldType::kInteger:
      if (v.is_number_integer()) return true;
      if (v.is_number_float()) {
        const double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d;
      }
      return false;
    case FieldType::kNumber: return v.is_number();
    case FieldType::kBoolean: return v.is_boolean();
    case FieldType::kStringList:
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!e.is_string()) return false;
      }
      return true;
  }
  return false;
}

nlohmann::json coerce(const nlohmann::json& v, FieldType type) {
  if (type == FieldType::kInteger && v.is_number_float()) {
    return static_cast<std::int64_t>(v.get<double>());
  }
  return v;
}

}  // namespace

ValidationResult validate_structured(std::string_view raw, const ExtractionSchema& schema) {
  ValidationResult result;
  const auto block = first_json_object(raw);
  if (!block) {
    result.violations.push_back(
        {ViolationKind::kNoJsonFound, "", "no balanced JSON object in output"});
    return result;
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(*block);
  } catch (const nlohmann::json::exception& e) {
    result.violations.push_back({ViolationKind::kInvalidJson, "", e.what()});
    return result;
  }

  nlohmann::json record = nlohmann::json::object();
  std::set<std::string> known;
  for (const auto& f : schema.fields) {
    known.insert(f.name);
    auto it = parsed.find(f.name);
    if (it == parsed.end() || it->is_null()) {
      if (f.required) {
        result.violations.push_back(
            {ViolationKind::kMissing, f.name, "required field '" + f.name + "' is missing"});
      }
      continue;
    }
    if (!type_matches(*it, f.type)) {
      result.violations.push_back({ViolationKind::kWrongType, f.name,
                                   "field '" + f.name + "' must be " +
                                       std::string(field_type_name(f.type)) + ", got " +
                                       it->type_name()});
      continue;
    }
    record[f.name] = coerce(*it, f.type);
  }
  for (const auto& [key, value] : parsed.items()) {
    if (!known.count(key)) result.warnings.push_back("ignored unknown field '" + key + "'");
  }
  if (result.violations.empty()) result.record = std::move(record);
  return result;
}

std::string schema_prompt_block(const ExtractionSchema& schema) {
  std::string out = "Fields:\n";
  for (const auto& f : schema.fields) {
    out += "- " + f.name + " (" + std::string(field_type_name(f.type)) + ", " +
           (f.required ? "required" : "optional") + ")";
    if (!f.description.empty()) out += ": " + f.description;
    out += "\n";
  }
  out += "Respond with a single JSON object containing these fields and nothing else.";
  return out;
}

StructuredFailure::StructuredFailure(std::string last_raw, std::vector<Violation> violations,
                                     std::size_t attempts)
    : Error(ErrorCode::kStructuredFailure,
            "structured output failed validation after " + std::to_string(attempts) +
                " attempt(s)",
            [&] {
              nlohmann::json v = nlohmann::json::array();
              for (const auto& x : violations) v.push_back(x.to_json());
              return nlohmann::json{
                  {"attempts", attempts}, {"violations", v}, {"last_raw", last_raw}};
            }()),
      last_raw_(std::move(last_raw)),
      violations_(std::move(violations)),
      attempts_(attempts) {}

StructuredResult complete_structured(const std::string& prompt, const ExtractionSchema& schema,
                                     Backend& backend, std::size_t max_retries,
                                     const CompletionRequest& base) {
  schema.validate();
  const std::string framed = prompt + "\n\n" + schema_prompt_block(schema);
  CompletionRequest request = base;
  request.prompt = framed;
  std::vector<Violation> last;
  std::string raw;
  for (std::size_t attempt = 1; attempt <= 1 + max_retries; ++attempt) {
    raw = backend.complete(request).text;
    auto checked = validate_structured(raw, schema);
    if (checked.ok()) return {std::move(*checked.record), attempt, raw};
    last = std::move(checked.violations);
    std::string feedback = framed + "\n\nYour previous answer was rejected:\n";
    for (const auto& v : last) {
      feedback += "- " + std::string(violation_kind_name(v.kind));
      if (!v.field.empty()) feedback += " (" + v.field + ")";
      feedback += ": " + v.message + "\n";
    }
    feedback += "Reply again with only the corrected JSON object.";
    request.prompt = std::move(feedback);
  }
  throw StructuredFailure(raw, std::move(last), 1 + max_retries);
}

}  // namespace docintel::llm
