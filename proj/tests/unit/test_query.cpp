#include <doctest.h>

#include "docintel/error.hpp"
#include "docintel/sparse/query.hpp"
#include "docintel/sparse/tokenizer.hpp"
#include "fixtures.hpp"
#include "generators.hpp"

using namespace docintel;
using namespace docintel::sparse;

TEST_CASE("tokenizer splits on non-alphanumerics and folds case") {
  const auto& oracle = testing::frozen_oracles()["tokenize_warthog"];
  CHECK(tokenize_terms("A-10 Warthog") == oracle.get<std::vector<std::string>>());
  const auto toks = tokenize("Caf\xC3\xA9 \xC3\x89T\xC3\x89");
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].term == "caf\xC3\xA9");
  CHECK(toks[1].term == "\xC3\xA9t\xC3\xA9");
  CHECK(toks[1].start == 5);
  CHECK(toks[1].end == 8);
  CHECK(toks[1].position == 1);
}

TEST_CASE("grammar examples") {
  CHECK(parse_query("defense AND NOT budget") ==
        Query::all_of({Query::term("defense"), Query::negate(Query::term("budget"))}));
  CHECK(parse_query("\"water rights\" OR ext:pdf") ==
        Query::any_of({Query::phrase({"water", "rights"}), Query::field(FieldName::kExt, "pdf")}));
  CHECK(parse_query("a b OR c") ==
        Query::any_of({Query::all_of({Query::term("a"), Query::term("b")}), Query::term("c")}));
  CHECK(parse_query("a (b OR c)") ==
        Query::all_of({Query::term("a"), Query::any_of({Query::term("b"), Query::term("c")})}));
  CHECK(parse_query("A-10") == Query::phrase({"a", "10"}));
  CHECK(parse_query("source:\"my file.txt\"") == Query::field(FieldName::kSource, "my file.txt"));
  CHECK(parse_query("and") == Query::term("and"));
}

TEST_CASE("blank query is EmptyQuery") {
  for (const char* q : {"", "   ", "\t\n"}) {
    try {
      parse_query(q);
      FAIL("expected EmptyQuery");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyQuery);
    }
  }
}

TEST_CASE("error fixtures report positions") {
  for (const auto& f : testing::parse_error_fixtures()) {
    CAPTURE(f.query);
    try {
      parse_query(f.query);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.position() == f.position);
      CHECK(e.detail()["position"] == f.position);
    }
  }
}

TEST_CASE("print then parse is a fixpoint on generated ASTs") {
  testing::QueryGenerator gen(1234);
  for (int i = 0; i < 300; ++i) {
    const auto ast = gen.make();
    const auto text = to_string(ast);
    CAPTURE(text);
    const auto parsed = parse_query(text);
    CHECK(parsed == ast);
    CHECK(to_string(parsed) == text);
  }
}

TEST_CASE("positive terms skip negations") {
  CHECK(positive_terms(parse_query("b a NOT c \"d e\" OR NOT (f g)")) ==
        std::vector<std::string>{"a", "b", "d", "e"});
}

TEST_CASE("any_terms_query") {
  CHECK(!any_terms_query("?? !!").has_value());
  CHECK(*any_terms_query("Why, why?") == Query::term("why"));
  CHECK(*any_terms_query("b a b") == Query::any_of({Query::term("a"), Query::term("b")}));
}
