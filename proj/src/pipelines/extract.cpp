#include "docintel/pipelines/extract.hpp"

#include "docintel/error.hpp"
#include "docintel/io.hpp"

namespace docintel::pipelines {
namespace {

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_value(const nlohmann::json& v, llm::FieldType type) {
  switch (type) {
    case llm::FieldType::kString: return v.get<std::string>();
    case llm::FieldType::kStringList: {
      std::string out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += "; ";
        out += v[i].get<std::string>();
      }
      return out;
    }
    case llm::FieldType::kBoolean: return v.get<bool>() ? "true" : "false";
    case llm::FieldType::kInteger:
    case llm::FieldType::kNumber: return v.dump();
  }
  return v.dump();
}

}  // namespace

nlohmann::json ExtractionRecord::to_json() const {
  nlohmann::json j = {{"unit_ref",
                       {{"source_path", unit_ref.source_path},
                        {"unit_index", unit_ref.unit_index},
                        {"unit_text", unit_ref.unit_text}}},
                      {"status", status == RecordStatus::kOk ? "ok" : "failed"},
                      {"attempts", attempts}};
  if (status == RecordStatus::kOk) {
    j["record"] = *record;
  } else {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : violations) v.push_back(x.to_json());
    j["violations"] = v;
    if (!error.empty()) j["error"] = error;
  }
  return j;
}

std::vector<ExtractionRecord> extract(const std::vector<UnitRef>& units,
                                      const llm::PromptTemplate& prompt,
                                      const llm::ExtractionSchema& schema, llm::Backend& backend,
                                      std::size_t max_retries, const llm::CompletionRequest& base) {
  if (prompt.required_vars() != std::set<std::string>{"unit"}) {
    throw Error(ErrorCode::kInvalidArgument,
                "extraction template must have exactly one {unit} slot");
  }
  schema.validate();
  std::vector<ExtractionRecord> out;
  out.reserve(units.size());
  for (const auto& unit : units) {
    ExtractionRecord rec;
    rec.unit_ref = unit;
    try {
      auto result = llm::complete_structured(prompt.render({{"unit", unit.unit_text}}), schema,
                                             backend, max_retries, base);
      rec.record = std::move(result.record);
      rec.attempts = result.attempts;
    } catch (const llm::StructuredFailure& e) {
      rec.status = RecordStatus::kFailed;
      rec.violations = e.violations();
      rec.attempts = e.attempts();
    } catch (const Error& e) {
      rec.status = RecordStatus::kFailed;
      rec.error = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string to_csv(const std::vector<ExtractionRecord>& records,
                   const llm::ExtractionSchema& schema) {
  std::string out = "source_path,unit_index,status";
  for (const auto& f : schema.fields) out += "," + csv_field(f.name);
  out += "\r\n";
  for (const auto& rec : records) {
    out += csv_field(rec.unit_ref.source_path) + "," + std::to_string(rec.unit_ref.unit_index) +
           "," + (rec.status == RecordStatus::kOk ? "ok" : "failed");
    for (const auto& f : schema.fields) {
      out += ",";
      if (rec.status != RecordStatus::kOk || !rec.record) continue;
      auto it = rec.record->find(f.name);
      if (it != rec.record->end() && !it->is_null()) out += csv_field(cell_value(*it, f.type));
    }
    out += "\r\n";
  }
  return out;
}

void export_csv(const std::vector<ExtractionRecord>& records,
                const llm::ExtractionSchema& schema, const std::filesystem::path& path) {
  io::write_file_atomic(path, to_csv(records, schema));
}

}  // namespace docintel::pipelines
