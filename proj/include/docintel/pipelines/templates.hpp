#pragma once

#include <string>
#include <vector>

#include "docintel/llm/template.hpp"

namespace docintel::pipelines {

// Version of the shipped template set; bump when any template text changes.
inline constexpr const char* kTemplateVersion = "1";

// Names: ask, extract, summarize_map, summarize_reduce, concept_map,
// concept_reduce. Throws NotFound for anything else.
const std::string& default_template_text(const std::string& name);
llm::PromptTemplate default_template(const std::string& name);
std::vector<std::string> default_template_names();

}  // namespace docintel::pipelines
