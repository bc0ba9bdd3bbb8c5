#include "docintel/pipelines/templates.hpp"

#include <map>

#include "docintel/error.hpp"

namespace docintel::pipelines {
namespace detail {
const std::map<std::string, std::string>& template_table();
}  // namespace detail

const std::string& default_template_text(const std::string& name) {
  const auto& table = detail::template_table();
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::kNotFound, "no default template named " + name);
  return it->second;
}

llm::PromptTemplate default_template(const std::string& name) {
  return llm::PromptTemplate(default_template_text(name));
}

std::vector<std::string> default_template_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::template_table()) names.push_back(name);
  return names;
}

}  // namespace docintel::pipelines
