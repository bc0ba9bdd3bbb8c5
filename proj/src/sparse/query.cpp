#include "docintel/sparse/query.hpp"

#include <algorithm>
#include <set>

#include "docintel/error.hpp"
#include "docintel/sparse/tokenizer.hpp"
#include "docintel/text/utf8.hpp"

namespace docintel::sparse {

std::string_view field_name_str(FieldName name) {
  return name == FieldName::kSource ? "source" : "ext";
}

std::optional<FieldName> parse_field_name(std::string_view name) {
  if (name == "source") return FieldName::kSource;
  if (name == "ext") return FieldName::kExt;
  return std::nullopt;
}

Query Query::term(std::string term) {
  Query q;
  q.kind_ = Kind::kTerm;
  q.value_ = std::move(term);
  return q;
}

Query Query::phrase(std::vector<std::string> terms) {
  if (terms.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "phrase needs at least one term");
  }
  Query q;
  q.kind_ = Kind::kPhrase;
  q.terms_ = std::move(terms);
  return q;
}

Query Query::field(FieldName name, std::string value) {
  Query q;
  q.kind_ = Kind::kField;
  q.field_ = name;
  q.value_ = std::move(value);
  return q;
}

Query Query::all_of(std::vector<Query> children) {
  if (children.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "AND needs at least two operands");
  }
  Query q;
  q.kind_ = Kind::kAnd;
  q.children_ = std::move(children);
  return q;
}

Query Query::any_of(std::vector<Query> children) {
  if (children.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "OR needs at least two operands");
  }
  Query q;
  q.kind_ = Kind::kOr;
  q.children_ = std::move(children);
  return q;
}

Query Query::negate(Query child) {
  Query q;
  q.kind_ = Kind::kNot;
  q.children_.push_back(std::move(child));
  return q;
}

bool operator==(const Query& a, const Query& b) {
  return a.kind_ == b.kind_ && a.value_ == b.value_ && a.terms_ == b.terms_ &&
         (a.kind_ != Query::Kind::kField || a.field_ == b.field_) &&
         a.children_ == b.children_;
}

namespace {

enum class Tok { kWord, kPhrase, kField, kLParen, kRParen, kAnd, kOr, kNot, kEnd };

struct Lexeme {
  Tok type;
  std::size_t pos;
  std::string text;  // word / phrase body / field value
  FieldName field = FieldName::kSource;
};

bool is_delim(char32_t c) {
  return text::is_space(c) || c == U'(' || c == U')' || c == U'"';
}

std::vector<Lexeme> lex(const std::u32string& q) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  auto read_quoted = [&](std::size_t quote_pos) {
    std::size_t close = q.find(U'"', quote_pos + 1);
    if (close == std::u32string::npos) {
      throw ParseError(quote_pos, "unbalanced quote");
    }
    std::string body =
        text::encode_utf8(std::u32string_view(q).substr(quote_pos + 1, close - quote_pos - 1));
    i = close + 1;
    return body;
  };

  while (i < q.size()) {
    char32_t c = q[i];
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    if (c == U'(') {
      out.push_back({Tok::kLParen, i, {}});
      ++i;
      continue;
    }
    if (c == U')') {
      out.push_back({Tok::kRParen, i, {}});
      ++i;
      continue;
    }
    if (c == U'"') {
      std::size_t pos = i;
      out.push_back({Tok::kPhrase, pos, read_quoted(pos)});
      continue;
    }
    std::size_t start = i;
    while (i < q.size() && !is_delim(q[i])) ++i;
    std::u32string word = q.substr(start, i - start);
    if (word == U"AND" || word == U"OR" || word == U"NOT") {
      Tok t = word == U"AND" ? Tok::kAnd : word == U"OR" ? Tok::kOr : Tok::kNot;
      out.push_back({t, start, {}});
      continue;
    }
    std::size_t colon = word.find(U':');
    if (colon == std::u32string::npos) {
      out.push_back({Tok::kWord, start, text::encode_utf8(word)});
      continue;
    }
    std::string name = text::encode_utf8(word.substr(0, colon));
    auto field = parse_field_name(name);
    if (!field) {
      throw ParseError(start, "unknown field name '" + name + "'");
    }
    std::string value = text::encode_utf8(word.substr(colon + 1));
    if (value.empty()) {
      if (i < q.size() && q[i] == U'"') {
        value = read_quoted(i);
        if (value.empty()) throw ParseError(start + colon + 1, "empty field value");
      } else {
        throw ParseError(start + colon + 1, "empty field value");
      }
    }
    Lexeme lexeme{Tok::kField, start, std::move(value)};
    lexeme.field = *field;
    out.push_back(std::move(lexeme));
  }
  out.push_back({Tok::kEnd, q.size(), {}});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Lexeme> lexemes) : lex_(std::move(lexemes)) {}

  Query parse() {
    Query q = parse_or();
    if (peek().type != Tok::kEnd) {
      throw ParseError(peek().pos, "unbalanced parenthesis: unexpected ')'");
    }
    return q;
  }

 private:
  const Lexeme& peek() const { return lex_[at_]; }
  const Lexeme& take() { return lex_[at_++]; }

  static bool starts_operand(Tok t) {
    return t == Tok::kWord || t == Tok::kPhrase || t == Tok::kField ||
           t == Tok::kLParen || t == Tok::kNot;
  }

  Query parse_or() {
    std::vector<Query> parts;
    parts.push_back(parse_and());
    while (peek().type == Tok::kOr) {
      take();
      parts.push_back(parse_and());
    }
    return parts.size() == 1 ? std::move(parts.front()) : Query::any_of(std::move(parts));
  }

  Query parse_and() {
    std::vector<Query> parts;
    parts.push_back(parse_not());
    for (;;) {
      if (peek().type == Tok::kAnd) {
        take();
        parts.push_back(parse_not());
      } else if (starts_operand(peek().type)) {
        parts.push_back(parse_not());
      } else {
        break;
      }
    }
    return parts.size() == 1 ? std::move(parts.front()) : Query::all_of(std::move(parts));
  }

  Query parse_not() {
    if (peek().type == Tok::kNot) {
      take();
      return Query::negate(parse_not());
    }
    return parse_atom();
  }

  Query parse_atom() {
    const Lexeme& t = take();
    switch (t.type) {
      case Tok::kWord: {
        auto terms = tokenize_terms(t.text);
        if (terms.empty()) throw ParseError(t.pos, "term has no searchable characters");
        if (terms.size() == 1) return Query::term(std::move(terms.front()));
        return Query::phrase(std::move(terms));
      }
      case Tok::kPhrase: {
        auto terms = tokenize_terms(t.text);
        if (terms.empty()) throw ParseError(t.pos, "empty phrase");
        return Query::phrase(std::move(terms));
      }
      case Tok::kField:
        return Query::field(t.field, t.text);
      case Tok::kLParen: {
        Query inner = parse_or();
        if (peek().type != Tok::kRParen) {
          throw ParseError(t.pos, "unbalanced parenthesis");
        }
        take();
        return inner;
      }
      case Tok::kAnd:
      case Tok::kOr:
      case Tok::kNot:
      case Tok::kRParen:
      case Tok::kEnd:
        break;
    }
    throw ParseError(t.pos, t.type == Tok::kEnd ? "expected a term at end of query"
                                                : "expected a term");
  }

  std::vector<Lexeme> lex_;
  std::size_t at_ = 0;
};

bool needs_quotes(const std::string& value) {
  if (value.empty()) return true;
  for (char32_t c : text::decode_utf8(value)) {
    if (is_delim(c)) return true;
  }
  return false;
}

void print(const Query& q, std::string& out) {
  using Kind = Query::Kind;
  auto wrapped = [&](const Query& child, bool wrap) {
    if (wrap) out += '(';
    print(child, out);
    if (wrap) out += ')';
  };
  switch (q.kind()) {
    case Kind::kTerm:
      out += q.value();
      break;
    case Kind::kPhrase: {
      out += '"';
      for (std::size_t i = 0; i < q.terms().size(); ++i) {
        if (i) out += ' ';
        out += q.terms()[i];
      }
      out += '"';
      break;
    }
    case Kind::kField:
      out += field_name_str(q.field_name());
      out += ':';
      if (needs_quotes(q.value())) {
        out += '"' + q.value() + '"';
      } else {
        out += q.value();
      }
      break;
    case Kind::kNot: {
      out += "NOT ";
      Kind ck = q.children()[0].kind();
      wrapped(q.children()[0], ck == Kind::kAnd || ck == Kind::kOr);
      break;
    }
    case Kind::kAnd:
    case Kind::kOr: {
      const bool is_and = q.kind() == Kind::kAnd;
      for (std::size_t i = 0; i < q.children().size(); ++i) {
        if (i) out += is_and ? " AND " : " OR ";
        Kind ck = q.children()[i].kind();
        wrapped(q.children()[i], ck == Kind::kOr || (is_and && ck == Kind::kAnd));
      }
      break;
    }
  }
}

void collect_terms(const Query& q, std::set<std::string>& out) {
  switch (q.kind()) {
    case Query::Kind::kTerm:
      out.insert(q.value());
      break;
    case Query::Kind::kPhrase:
      out.insert(q.terms().begin(), q.terms().end());
      break;
    case Query::Kind::kAnd:
    case Query::Kind::kOr:
      for (const auto& c : q.children()) collect_terms(c, out);
      break;
    case Query::Kind::kField:
    case Query::Kind::kNot:
      break;
  }
}

}  // namespace

Query parse_query(std::string_view query) {
  const std::u32string q = text::decode_utf8(query);
  if (std::all_of(q.begin(), q.end(), [](char32_t c) { return text::is_space(c); })) {
    throw Error(ErrorCode::kEmptyQuery, "query is empty");
  }
  return Parser(lex(q)).parse();
}

std::string to_string(const Query& query) {
  std::string out;
  print(query, out);
  return out;
}

std::vector<std::string> positive_terms(const Query& query) {
  std::set<std::string> terms;
  collect_terms(query, terms);
  return {terms.begin(), terms.end()};
}

std::optional<Query> any_terms_query(std::string_view text) {
  std::set<std::string> unique;
  for (auto& t : tokenize_terms(text)) unique.insert(std::move(t));
  if (unique.empty()) return std::nullopt;
  std::vector<Query> parts;
  for (const auto& t : unique) parts.push_back(Query::term(t));
  if (parts.size() == 1) return std::move(parts.front());
  return Query::any_of(std::move(parts));
}

}  // namespace docintel::sparse
