#include "docintel/llm/template.hpp"

#include "docintel/error.hpp"

namespace docintel::llm {
namespace {

bool name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool name_char(char c) { return name_start(c) || (c >= '0' && c <= '9'); }

[[noreturn]] void syntax(std::size_t pos, const std::string& what) {
  throw Error(ErrorCode::kTemplateSyntax,
              "template syntax error at " + std::to_string(pos) + ": " + what,
              {{"position", pos}});
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  std::string literal;
  auto flush = [&] {
    if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
    literal.clear();
  };
  for (std::size_t i = 0; i < text_.size(); ++i) {
    const char c = text_[i];
    if (c == '{') {
      if (i + 1 < text_.size() && text_[i + 1] == '{') {
        literal += '{';
        ++i;
        continue;
      }
      const std::size_t close = text_.find('}', i + 1);
      if (close == std::string::npos) syntax(i, "unclosed '{'");
      const std::string name = text_.substr(i + 1, close - i - 1);
      if (name.empty() || !name_start(name[0])) syntax(i, "bad placeholder name");
      for (char n : name) {
        if (!name_char(n)) syntax(i, "bad placeholder name");
      }
      flush();
      pieces_.push_back({true, name});
      required_.insert(name);
      i = close;
    } else if (c == '}') {
      if (i + 1 < text_.size() && text_[i + 1] == '}') {
        literal += '}';
        ++i;
        continue;
      }
      syntax(i, "unmatched '}'");
    } else {
      literal += c;
    }
  }
  flush();
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
  for (const auto& name : required_) {
    if (!vars.count(name)) {
      throw Error(ErrorCode::kMissingVar, "missing template variable: " + name, {{"name", name}});
    }
  }
  for (const auto& [name, value] : vars) {
    if (!required_.count(name)) {
      throw Error(ErrorCode::kUnknownVar, "unknown template variable: " + name, {{"name", name}});
    }
  }
  std::string out;
  for (const auto& piece : pieces_) out += piece.is_var ? vars.at(piece.value) : piece.value;
  return out;
}

}  // namespace docintel::llm
