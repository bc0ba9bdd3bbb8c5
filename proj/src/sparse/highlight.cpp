#include "docintel/sparse/highlight.hpp"

#include <algorithm>
#include <vector>

#include "docintel/error.hpp"
#include "docintel/sparse/tokenizer.hpp"
#include "docintel/text/utf8.hpp"

namespace docintel::sparse {
namespace {

std::vector<Token> matching_tokens(std::string_view text,
                                   const std::set<std::string>& terms) {
  std::vector<Token> out;
  for (auto& token : tokenize(text)) {
    if (terms.count(token.term)) out.push_back(std::move(token));
  }
  return out;
}

std::size_t distinct_inside(const std::vector<Token>& matches, std::size_t start,
                            std::size_t window) {
  std::set<std::string_view> seen;
  for (const auto& t : matches) {
    if (t.start >= start && t.end <= start + window) seen.insert(t.term);
  }
  return seen.size();
}

std::size_t best_start(const std::vector<Token>& matches, std::size_t window) {
  // The earliest optimal start is 0 or sits where some token's end touches
  // the window's right edge.
  std::vector<std::size_t> candidates{0};
  for (const auto& t : matches) {
    if (t.end > window) candidates.push_back(t.end - window);
  }
  std::sort(candidates.begin(), candidates.end());
  std::size_t best = 0;
  std::size_t best_count = 0;
  for (std::size_t s : candidates) {
    std::size_t count = distinct_inside(matches, s, window);
    if (count > best_count) {
      best_count = count;
      best = s;
    }
  }
  return best;
}

}  // namespace

std::size_t best_window_start(std::string_view text,
                              const std::set<std::string>& terms,
                              std::size_t window) {
  if (window < 1) throw Error(ErrorCode::kInvalidArgument, "window must be >= 1");
  return best_start(matching_tokens(text, terms), window);
}

std::string highlight(std::string_view text, const std::set<std::string>& terms,
                      const HighlightOptions& options) {
  if (options.window < 1) {
    throw Error(ErrorCode::kInvalidArgument, "window must be >= 1");
  }
  const std::u32string cps = text::decode_utf8(text);
  const auto matches = matching_tokens(text, terms);
  const std::size_t start = best_start(matches, options.window);
  const std::size_t end = std::min(cps.size(), start + options.window);

  std::string out;
  if (start > 0) out += options.ellipsis;
  std::size_t cursor = start;
  auto slice = [&](std::size_t a, std::size_t b) {
    return text::encode_utf8(std::u32string_view(cps).substr(a, b - a));
  };
  for (const auto& t : matches) {
    if (t.start < start || t.end > end) continue;
    out += slice(cursor, t.start);
    out += options.pre;
    out += slice(t.start, t.end);
    out += options.post;
    cursor = t.end;
  }
  out += slice(cursor, end);
  if (end < cps.size()) out += options.ellipsis;
  return out;
}

}  // namespace docintel::sparse
