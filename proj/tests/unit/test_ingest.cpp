#include <doctest.h>

#include <random>

#include "docintel/error.hpp"
#include "docintel/ingest.hpp"
#include "docintel/text/utf8.hpp"
#include "fixtures.hpp"

using namespace docintel;
using namespace docintel::ingest;

namespace {

// Records what ingest_folder hands to the sink.
struct RecordingSink : ChunkSink {
  std::map<std::string, FileRecord> files;
  std::vector<Chunk> chunks;
  std::size_t commits = 0;

  std::optional<std::string> known_sha256(const std::string& p) const override {
    auto it = files.find(p);
    if (it == files.end()) return std::nullopt;
    return it->second.sha256;
  }
  std::size_t delete_by_source(const std::string& p) override {
    const auto before = chunks.size();
    std::erase_if(chunks, [&](const Chunk& c) { return c.source_path == p; });
    return before - chunks.size();
  }
  void add_chunk(const Chunk& c) override { chunks.push_back(c); }
  void record_file(const FileRecord& r) override { files[r.source_path] = r; }
  void commit() override { ++commits; }
};

}  // namespace

TEST_CASE("html paragraphs become lines") {
  const auto& oracle = testing::frozen_oracles();
  CHECK(html_to_text("<p>hi</p><p>yo</p>") == oracle["html_two_paragraphs"].get<std::string>());
}

TEST_CASE("html drops scripts, styles and comments and decodes entities") {
  const auto t = html_to_text(
      "<html><head><style>p{color:red}</style><script>var x = 1;</script></head>"
      "<body><!-- note --><p>Fish &amp; chips &lt;3 &#233;&#x41;</p></body></html>");
  CHECK(t == "Fish & chips <3 \xC3\xA9" "A");
}

TEST_CASE("load_document by extension") {
  testing::TempDir dir;
  testing::write_text(dir / "a.html", "<p>hi</p><p>yo</p>");
  testing::write_text(dir / "b.MD", "# title");
  testing::write_text(dir / "c.pdf", "%PDF");
  const auto a = load_document(dir / "a.html");
  CHECK(a.format == DocumentFormat::kHtml);
  CHECK(a.raw_text == "hi\nyo");
  CHECK(a.sha256.size() == 64);
  CHECK(load_document(dir / "b.MD").format == DocumentFormat::kMarkdown);
  try {
    load_document(dir / "c.pdf");
    FAIL("expected UnsupportedFormat");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnsupportedFormat);
  }
  CHECK_THROWS_AS(load_document(dir / "nope.txt"), Error);
}

TEST_CASE("normalize_text rules and idempotence") {
  CHECK(normalize_text("a  \r\nb\t\r\n\r\n\r\n\r\nc  ") == "a\nb\n\nc");
  CHECK(normalize_text("\n\n  x\n") == "x");
  std::mt19937_64 rng(7);
  const std::string alphabet = "ab \t\r\n.";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::string x;
    for (int i = 0; i < 40; ++i) x += alphabet[pick(rng)];
    const auto once = normalize_text(x);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("sliding window chunking without snapping") {
  const auto& oracle = testing::frozen_oracles()["chunk_abcdef_4_2"];
  const auto spans = chunk_text("abcdef", {4, 2, false});
  REQUIRE(spans.size() == oracle.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    CHECK(spans[i].start == oracle[i][0].get<std::size_t>());
    CHECK(spans[i].end == oracle[i][1].get<std::size_t>());
  }
  CHECK(spans[0].text == "abcd");
  CHECK(spans[1].text == "cdef");
}

TEST_CASE("chunk offsets are code points and spans cover the text") {
  const std::string text = "\xC3\xA9t\xC3\xA9 caf\xC3\xA9 na\xC3\xAFve r\xC3\xA9sum\xC3\xA9 end";
  const auto spans = chunk_text(text, {8, 3, true});
  REQUIRE(!spans.empty());
  CHECK(spans.front().start == 0);
  CHECK(spans.back().end == text::utf8_length(text));
  const auto cps = text::decode_utf8(text);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    CHECK(spans[i].text == text::encode_utf8(cps.substr(spans[i].start, spans[i].end - spans[i].start)));
    if (i > 0) {
      CHECK(spans[i].start <= spans[i - 1].end);
      CHECK(spans[i].start > spans[i - 1].start);
    }
  }
}

TEST_CASE("chunking params validation") {
  CHECK_THROWS_AS(chunk_text("abc", {0, 0, false}), Error);
  CHECK_THROWS_AS(chunk_text("abc", {4, 4, false}), Error);
  CHECK(chunk_text("", {4, 1, false}).empty());
}

TEST_CASE("chunk ids are sha256 of source and span") {
  CHECK(make_chunk_id("/x/okapi.txt", 0, 54) ==
        "e36d68a25d1e7fd38356e09511608fad2ce75948ea18f0c4977cba803edef880");
}

TEST_CASE("ingest_folder is incremental and reports per-file errors") {
  testing::TempDir dir;
  testing::write_five_file_fixture(dir.path());
  testing::write_text(dir / "skip.pdf", "%PDF");
  RecordingSink sink;
  const auto first = ingest_folder(dir.path(), sink, {});
  CHECK(first.files_seen == 5);
  CHECK(first.files_ingested == 5);
  CHECK(first.chunks_added == sink.chunks.size());
  CHECK(first.errors.empty());
  CHECK(sink.commits == 1);

  const auto second = ingest_folder(dir.path(), sink, {});
  CHECK(second.files_skipped_unchanged == first.files_ingested);
  CHECK(second.chunks_added == 0);
  CHECK(second.files_ingested == 0);

  testing::write_text(dir / "animals.txt", "Changed text about the okapi.");
  testing::write_text(dir / "broken.txt", std::string("\xFF\xFE", 2));
  const auto third = ingest_folder(dir.path(), sink, {});
  CHECK(third.files_ingested == 2);
  CHECK(third.files_skipped_unchanged == 4);
  std::size_t animal_chunks = 0;
  for (const auto& c : sink.chunks) animal_chunks += c.source_path.ends_with("animals.txt");
  CHECK(animal_chunks == 1);
}

TEST_CASE("ingest_folder on a missing root") {
  RecordingSink sink;
  CHECK_THROWS_AS(ingest_folder("/nonexistent/docintel", sink, {}), Error);
}
