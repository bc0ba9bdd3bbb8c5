#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace docintel::sparse {

struct Token {
  std::string term;  // simple-case-folded
  std::uint32_t position = 0;
  std::size_t start = 0;  // code point offsets, half-open
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

// Splits on every non-alphanumeric code point and case-folds each term.
// No stemming, no stopwords.
std::vector<Token> tokenize(std::string_view text);

std::vector<std::string> tokenize_terms(std::string_view text);

}  // namespace docintel::sparse
