#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docintel::sparse {

enum class FieldName { kSource, kExt };

std::string_view field_name_str(FieldName name);
std::optional<FieldName> parse_field_name(std::string_view name);

// Parsed keyword query. Value type; And/Or hold >= 2 children, Not exactly 1,
// Phrase >= 1 term.
class Query {
 public:
  enum class Kind { kTerm, kPhrase, kField, kAnd, kOr, kNot };

  static Query term(std::string term);
  static Query phrase(std::vector<std::string> terms);
  static Query field(FieldName name, std::string value);
  static Query all_of(std::vector<Query> children);
  static Query any_of(std::vector<Query> children);
  static Query negate(Query child);

  Kind kind() const { return kind_; }
  // Term text or field value.
  const std::string& value() const { return value_; }
  const std::vector<std::string>& terms() const { return terms_; }
  FieldName field_name() const { return field_; }
  const std::vector<Query>& children() const { return children_; }

  friend bool operator==(const Query& a, const Query& b);

 private:
  Query() = default;

  Kind kind_ = Kind::kTerm;
  std::string value_;
  std::vector<std::string> terms_;
  FieldName field_ = FieldName::kSource;
  std::vector<Query> children_;
};

// Grammar (lowest to highest precedence):
//   query    := or_expr
//   or_expr  := and_expr ("OR" and_expr)*
//   and_expr := not_expr (["AND"] not_expr)*      adjacency = implicit AND
//   not_expr := "NOT" not_expr | atom
//   atom     := word | "phrase" | field:value | field:"value" | "(" or_expr ")"
// Operators are case-sensitive. Words are run through the tokenizer; a word
// that splits into several terms becomes a Phrase.
// Throws EmptyQuery for blank input, ParseError (with position) otherwise.
Query parse_query(std::string_view query);

// Canonical text form; parse_query(to_string(q)) == q.
std::string to_string(const Query& query);

// Term and phrase terms that are not under a negation, sorted and unique.
std::vector<std::string> positive_terms(const Query& query);

// Disjunction of the distinct terms of free text (for natural-language
// questions); nullopt when the text has no terms.
std::optional<Query> any_terms_query(std::string_view text);

}  // namespace docintel::sparse
