#include "docintel/sparse/tokenizer.hpp"

#include <unicode/uchar.h>

#include "docintel/text/utf8.hpp"

namespace docintel::sparse {

std::vector<Token> tokenize(std::string_view text) {
  const std::u32string cps = text::decode_utf8(text);
  std::vector<Token> tokens;
  std::u32string current;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    if (current.empty()) return;
    tokens.push_back({text::encode_utf8(current),
                      static_cast<std::uint32_t>(tokens.size()), start, end});
    current.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto c = static_cast<UChar32>(cps[i]);
    if (u_isalnum(c)) {
      if (current.empty()) start = i;
      current.push_back(static_cast<char32_t>(u_foldCase(c, U_FOLD_CASE_DEFAULT)));
    } else {
      emit(i);
    }
  }
  emit(cps.size());
  return tokens;
}

std::vector<std::string> tokenize_terms(std::string_view text) {
  std::vector<std::string> terms;
  for (auto& token : tokenize(text)) terms.push_back(std::move(token.term));
  return terms;
}

}  // namespace docintel::sparse
