#include "docintel/pipelines/units.hpp"

#include <unicode/uchar.h>

#include "docintel/text/utf8.hpp"

namespace docintel::pipelines {
namespace {

std::u32string trim(std::u32string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && text::is_space(s[b])) ++b;
  while (e > b && text::is_space(s[e - 1])) --e;
  return std::u32string(s.substr(b, e - b));
}

void push_trimmed(std::vector<Unit>& out, std::u32string_view piece) {
  std::u32string t = trim(piece);
  if (!t.empty()) out.push_back({out.size(), text::encode_utf8(t)});
}

std::vector<Unit> split_paragraphs(const std::u32string& s) {
  std::vector<Unit> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != U'\n') {
      ++i;
      continue;
    }
    // A blank line: newline, optional horizontal space, newline.
    std::size_t j = i + 1;
    while (j < s.size() && s[j] != U'\n' && text::is_space(s[j])) ++j;
    if (j < s.size() && s[j] == U'\n') {
      push_trimmed(out, std::u32string_view(s).substr(start, i - start));
      while (j < s.size() && text::is_space(s[j])) ++j;
      start = i = j;
    } else {
      i = j;
    }
  }
  push_trimmed(out, std::u32string_view(s).substr(start));
  return out;
}

std::vector<Unit> split_sentences(const std::u32string& s) {
  std::vector<Unit> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char32_t c = s[i];
    if (c != U'.' && c != U'?' && c != U'!') continue;
    std::size_t j = i + 1;
    while (j < s.size() && text::is_space(s[j])) ++j;
    const bool at_end = j == s.size();
    const bool next_upper = j > i + 1 && j < s.size() && u_isupper(static_cast<UChar32>(s[j]));
    if (at_end || next_upper) {
      push_trimmed(out, std::u32string_view(s).substr(start, i + 1 - start));
      start = i + 1;
    }
  }
  push_trimmed(out, std::u32string_view(s).substr(start));
  return out;
}

}  // namespace

std::string_view unit_kind_name(UnitKind kind) {
  switch (kind) {
    case UnitKind::kSentence: return "sentence";
    case UnitKind::kParagraph: return "paragraph";
    case UnitKind::kPassage: return "passage";
  }
  return "passage";
}

std::optional<UnitKind> parse_unit_kind(std::string_view name) {
  if (name == "sentence") return UnitKind::kSentence;
  if (name == "paragraph") return UnitKind::kParagraph;
  if (name == "passage") return UnitKind::kPassage;
  return std::nullopt;
}

std::vector<Unit> split_units(std::string_view doc_text, UnitKind kind,
                              const ingest::ChunkingParams& params) {
  switch (kind) {
    case UnitKind::kParagraph: return split_paragraphs(text::decode_utf8(doc_text));
    case UnitKind::kSentence: return split_sentences(text::decode_utf8(doc_text));
    case UnitKind::kPassage: {
      std::vector<Unit> out;
      for (auto& span : ingest::chunk_text(doc_text, params)) {
        out.push_back({out.size(), std::move(span.text)});
      }
      return out;
    }
  }
  return {};
}

}  // namespace docintel::pipelines
