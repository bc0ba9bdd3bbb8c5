#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "docintel/dense/embedding.hpp"
#include "docintel/error.hpp"
#include "docintel/sparse/highlight.hpp"
#include "docintel/sparse/index.hpp"
#include "docintel/sparse/query.hpp"
#include "docintel/sparse/tokenizer.hpp"
#include "fixtures.hpp"

using namespace docintel;
using namespace docintel::sparse;

namespace {

ingest::Chunk named_chunk(const std::string& id, const std::string& source, const std::string& text) {
  auto c = testing::make_chunk(source, 0, text);
  c.chunk_id = id;
  return c;
}

SparseIndex frozen_corpus_index() {
  SparseIndex index;
  for (const auto& [id, text] : testing::frozen_oracles()["bm25"]["corpus"].items()) {
    index.add_chunk(named_chunk(id, "/docs/" + id + ".txt", text.get<std::string>()));
  }
  return index;
}

std::vector<std::string> ids(const SparseIndex& index, const std::vector<RankedRef>& ranked) {
  std::vector<std::string> out;
  for (const auto& r : ranked) out.push_back(index.find_ref(r.ref)->chunk.chunk_id);
  return out;
}

}  // namespace

TEST_CASE("bm25 two-document example") {
  SparseIndex index;
  index.add_chunk(named_chunk("d1", "/a.txt", "apple apple banana"));
  index.add_chunk(named_chunk("d2", "/b.txt", "banana cherry"));
  const auto ranked = index.rank(parse_query("apple"));
  REQUIRE(ranked.size() == 1);
  CHECK(ranked[0].score ==
        doctest::Approx(testing::frozen_oracles()["bm25"]["smoke_d1_apple"].get<double>()).epsilon(1e-12));
  CHECK(ranked[0].score == doctest::Approx(0.9023).epsilon(1e-4));
  CHECK(index.avgdl() == 2.5);
}

TEST_CASE("bm25 rankings match the frozen brute-force table") {
  const auto index = frozen_corpus_index();
  for (const auto& c : testing::frozen_oracles()["bm25"]["cases"]) {
    const auto terms = c["terms"].get<std::vector<std::string>>();
    std::vector<Query> parts;
    for (const auto& t : terms) parts.push_back(Query::term(t));
    const Query q = parts.size() == 1 ? parts[0] : Query::any_of(parts);
    for (auto exec : {kernels::Exec::kSerial, kernels::Exec::kParallel}) {
      const auto ranked = index.rank(q, {}, exec);
      CHECK(ids(index, ranked) == c["ranking"].get<std::vector<std::string>>());
      const auto scores = c["scores"].get<std::vector<double>>();
      for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(std::abs(ranked[i].score - scores[i]) < 1e-9);
    }
  }
}

TEST_CASE("avgdl equals the brute-force mean length") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  SparseIndex index;
  double total = 0;
  for (int i = 0; i < 100; ++i) {
    const auto text = testing::random_text(rng, 1 + rng() % 30, vocab);
    total += static_cast<double>(tokenize_terms(text).size());
    index.add_chunk(testing::make_chunk("/r.txt", i, text));
  }
  CHECK(index.avgdl() == doctest::Approx(total / 100).epsilon(1e-12));
}

TEST_CASE("boolean evaluation matches brute-force set logic") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab = {"red", "green", "blue", "cyan", "pink"};
  SparseIndex index;
  std::vector<std::set<std::string>> term_sets;
  for (int i = 0; i < 50; ++i) {
    const auto text = testing::random_text(rng, 1 + rng() % 4, vocab);
    index.add_chunk(testing::make_chunk("/s.txt", i, text));
    const auto terms = tokenize_terms(text);
    term_sets.emplace_back(terms.begin(), terms.end());
  }
  auto has = [&](int i, const std::string& t) { return term_sets[i].count(t) > 0; };
  struct Case {
    std::string query;
    std::function<bool(int)> pred;
  };
  const std::vector<Case> cases = {
      {"red AND blue", [&](int i) { return has(i, "red") && has(i, "blue"); }},
      {"red OR cyan", [&](int i) { return has(i, "red") || has(i, "cyan"); }},
      {"green NOT pink", [&](int i) { return has(i, "green") && !has(i, "pink"); }},
      {"(red OR blue) AND NOT (green OR cyan)",
       [&](int i) { return (has(i, "red") || has(i, "blue")) && !(has(i, "green") || has(i, "cyan")); }},
  };
  for (const auto& c : cases) {
    CAPTURE(c.query);
    std::set<std::uint32_t> got;
    for (auto r : index.match(parse_query(c.query))) got.insert(r);
    std::size_t expected_count = 0;
    for (int i = 0; i < 50; ++i) expected_count += c.pred(i);
    CHECK(got.size() == expected_count);
    for (auto r : got) {
      const auto terms = tokenize_terms(index.find_ref(r)->chunk.text);
      std::set<std::string> ts(terms.begin(), terms.end());
      const int i = static_cast<int>(index.find_ref(r)->chunk.seq);
      CHECK(ts == term_sets[i]);
      CHECK(c.pred(i));
    }
  }
}

TEST_CASE("phrases need adjacent positions") {
  SparseIndex index;
  index.add_chunk(named_chunk("p1", "/p1.txt", "the water rights committee"));
  index.add_chunk(named_chunk("p2", "/p2.txt", "water naval rights"));
  const auto ranked = index.rank(parse_query("\"water rights\""));
  REQUIRE(ranked.size() == 1);
  CHECK(index.find_ref(ranked[0].ref)->chunk.chunk_id == "p1");
}

TEST_CASE("field filters") {
  SparseIndex index;
  index.add_chunk(named_chunk("a", "/d/report.PDF.txt", "river"));
  index.add_chunk(named_chunk("b", "/d/notes.md", "river"));
  CHECK(ids(index, index.rank(parse_query("river ext:md"))) == std::vector<std::string>{"b"});
  CHECK(ids(index, index.rank(parse_query("river ext:txt"))) == std::vector<std::string>{"a"});
  CHECK(ids(index, index.rank(parse_query("river source:\"/d/notes.md\""))) ==
        std::vector<std::string>{"b"});
}

TEST_CASE("pure negation is rejected") {
  SparseIndex index;
  index.add_chunk(named_chunk("a", "/a.txt", "x"));
  try {
    index.match(parse_query("NOT x"));
    FAIL("expected PureNegationQuery");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPureNegationQuery);
  }
}

TEST_CASE("delete and re-add leaves identical statistics") {
  SparseIndex once, churned;
  std::mt19937_64 rng(3);
  std::vector<ingest::Chunk> chunks;
  for (int i = 0; i < 10; ++i) {
    chunks.push_back(testing::make_chunk("/c" + std::to_string(i % 3) + ".txt", i,
                                         testing::random_text(rng, 6, {"a", "b", "c", "d"})));
  }
  for (const auto& c : chunks) once.add_chunk(c);
  for (const auto& c : chunks) churned.add_chunk(c);
  CHECK(churned.delete_by_source("/c1.txt") == 3);
  for (const auto& c : chunks) {
    if (c.source_path == "/c1.txt") churned.add_chunk(c);
  }
  CHECK(churned.stats() == once.stats());
  CHECK_THROWS_AS(churned.add_chunk(chunks[0]), Error);
}

TEST_CASE("highlight picks the window with most distinct terms") {
  std::string text = "alpha " + std::string(120, 'x') + " beta gamma " + std::string(60, 'y');
  const std::set<std::string> terms = {"alpha", "beta", "gamma"};
  const auto start = best_window_start(text, terms, 40);
  // Exhaustive scan over window starts.
  const auto toks = tokenize(text);
  std::size_t best = 0, best_start = 0;
  for (std::size_t s = 0; s + 40 <= text.size() || s == 0; ++s) {
    std::set<std::string> seen;
    for (const auto& t : toks) {
      if (t.start >= s && t.end <= s + 40 && terms.count(t.term)) seen.insert(t.term);
    }
    if (seen.size() > best) {
      best = seen.size();
      best_start = s;
    }
    if (s + 40 >= text.size()) break;
  }
  CHECK(best == 2);
  CHECK(start == best_start);
  const auto snippet = highlight(text, terms, {40, "[", "]", "..."});
  CHECK(snippet.find("[beta] [gamma]") != std::string::npos);
  CHECK(snippet.rfind("...", 0) == 0);
}

TEST_CASE("search pages and highlights") {
  SparseIndex index;
  for (int i = 0; i < 25; ++i) index.add_chunk(testing::make_chunk("/p.txt", i, "river number " + std::to_string(i)));
  const auto page = index.search(parse_query("river"), 3, 10);
  CHECK(page.total_hits == 25);
  CHECK(page.hits.size() == 5);
  CHECK(page.hits[0].snippet.find("**river**") != std::string::npos);
  CHECK(index.search(parse_query("river"), 4, 10).hits.empty());
  CHECK_THROWS_AS(index.search(parse_query("river"), 0, 10), Error);
  CHECK_THROWS_AS(index.search(parse_query("river"), 1, 1001), Error);
}

TEST_CASE("semantic rerank orders by cosine") {
  SparseIndex index;
  const dense::HashEmbedder embedder(64);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 30; ++i) {
    index.add_chunk(testing::make_chunk("/s.txt", i, "river " + testing::random_text(rng, 5, {"stone", "water", "fish", "tree", "sky"})));
  }
  const auto page = index.semantic_rerank(parse_query("river"), "river water fish", 30, embedder);
  REQUIRE(page.hits.size() == 30);
  const auto q = embedder.embed_one("river water fish");
  std::vector<std::pair<double, std::string>> brute;
  for (auto ref : index.refs()) {
    const auto& c = index.find_ref(ref)->chunk;
    brute.emplace_back(dense::cosine(q, embedder.embed_one(c.text)), c.chunk_id);
  }
  std::sort(brute.begin(), brute.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 0; i < brute.size(); ++i) {
    CHECK(page.hits[i].chunk_id == brute[i].second);
    CHECK(page.hits[i].score == doctest::Approx(brute[i].first).epsilon(1e-9));
  }
}

TEST_CASE("persist and load round trip") {
  testing::TempDir dir;
  const auto index = frozen_corpus_index();
  index.persist(dir.path());
  const auto loaded = SparseIndex::load(dir.path());
  CHECK(loaded.stats() == index.stats());
  const auto q = parse_query("banana OR cherry");
  CHECK(ids(loaded, loaded.rank(q)) == ids(index, index.rank(q)));
  // Truncated postings are detected.
  const auto postings = io::read_file(dir / "postings.dat");
  io::write_file_atomic(dir / "postings.dat", postings.substr(0, postings.size() / 2));
  CHECK_THROWS_AS(SparseIndex::load(dir.path()), CorruptStore);
}
