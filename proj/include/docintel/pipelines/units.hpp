#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docintel/ingest.hpp"

namespace docintel::pipelines {

enum class UnitKind { kSentence, kParagraph, kPassage };

std::string_view unit_kind_name(UnitKind kind);
std::optional<UnitKind> parse_unit_kind(std::string_view name);

struct Unit {
  std::size_t index = 0;
  std::string text;

  bool operator==(const Unit&) const = default;
};

// paragraph: split on blank lines. sentence: cut after . ? or ! when followed
// by whitespace and an uppercase letter, or by the end of the text (a naive
// rule, by design). passage: chunk_text spans. Pieces are trimmed (except
// passages) and empty pieces dropped.
std::vector<Unit> split_units(std::string_view doc_text, UnitKind kind,
                              const ingest::ChunkingParams& params = {});

}  // namespace docintel::pipelines
