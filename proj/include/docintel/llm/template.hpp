#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace docintel::llm {

// Text with {name} slots; {{ and }} stand for literal braces. Names are
// [A-Za-z_][A-Za-z0-9_]*. A stray brace is a TemplateSyntax error.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text);

  const std::string& text() const { return text_; }
  const std::set<std::string>& required_vars() const { return required_; }

  // vars must cover required_vars exactly: MissingVar / UnknownVar otherwise.
  std::string render(const std::map<std::string, std::string>& vars) const;

 private:
  struct Piece {
    bool is_var;
    std::string value;  // literal text or variable name
  };

  std::string text_;
  std::vector<Piece> pieces_;
  std::set<std::string> required_;
};

}  // namespace docintel::llm
