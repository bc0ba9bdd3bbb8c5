#include <doctest.h>

#include <algorithm>

#include "docintel/error.hpp"
#include "docintel/io.hpp"
#include "docintel/store/store.hpp"
#include "fixtures.hpp"

using namespace docintel;
using namespace docintel::store;

namespace {

std::shared_ptr<const dense::Embedder> hash32() { return std::make_shared<dense::HashEmbedder>(32); }

StoreOptions kind_opts(StoreKind kind) {
  StoreOptions o;
  o.kind = kind;
  return o;
}

std::size_t snapshot_dirs(const std::filesystem::path& store) {
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(store / "snapshots")) ++n;
  return n;
}

}  // namespace

TEST_CASE("create, ingest, reopen") {
  testing::TempDir dir;
  testing::TempDir docs;
  testing::write_five_file_fixture(docs.path());
  const auto root = dir / "store";
  auto s = Store::create(root, kind_opts(StoreKind::kDual), hash32());
  CHECK(Store::exists(root));
  CHECK(s.manifest().generation == 1);
  CHECK(s.empty());
  CHECK_THROWS_AS(Store::create(root, {}, hash32()), Error);

  const auto report = ingest::ingest_folder(docs.path(), s, {});
  CHECK(report.files_ingested == 5);
  CHECK(s.manifest().generation == 2);
  CHECK(snapshot_dirs(root) == 1);

  const auto reopened = Store::open(root, kind_opts(StoreKind::kSparse), hash32());
  CHECK(reopened.kind() == StoreKind::kDual);
  CHECK(reopened.chunk_count() == s.chunk_count());
  CHECK(reopened.manifest().files.size() == 5);

  const auto manifest = nlohmann::json::parse(io::read_file(root / "manifest.json"));
  CHECK(manifest["format_version"] == 1);
  CHECK(manifest["store_kind"] == "dual");
  CHECK(manifest["files"].size() == 5);
  CHECK(manifest["embedder"]["dim"] == 32);
}

TEST_CASE("opening with a different embedder is refused") {
  testing::TempDir dir;
  Store::create(dir / "s", {}, hash32());
  try {
    Store::open(dir / "s", {}, std::make_shared<dense::HashEmbedder>(64));
    FAIL("expected InvalidValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidValue);
  }
  CHECK_THROWS_AS(Store::open(dir / "missing", {}, hash32()), Error);
}

TEST_CASE("document text reassembles from chunks") {
  testing::TempDir dir;
  testing::TempDir docs;
  std::string long_text;
  for (int i = 0; i < 60; ++i) long_text += "Sentence number " + std::to_string(i) + " about rivers. ";
  testing::write_text(docs / "long.txt", long_text);
  auto s = Store::create(dir / "s", {}, hash32());
  ingest::ingest_folder(docs.path(), s, {120, 20, true});
  const auto path = std::filesystem::absolute(docs / "long.txt").lexically_normal().string();
  CHECK(s.chunks_of(path).size() > 5);
  CHECK(s.document_text(path) == ingest::normalize_text(long_text));
  CHECK(!s.document_text("/nope").has_value());
}

TEST_CASE("search modes per store kind") {
  testing::TempDir docs;
  testing::write_five_file_fixture(docs.path());
  for (auto kind : {StoreKind::kSparse, StoreKind::kDense, StoreKind::kDual}) {
    CAPTURE(store_kind_name(kind));
    testing::TempDir dir;
    auto s = Store::create(dir / "s", kind_opts(kind), std::make_shared<dense::HashEmbedder>(256));
    ingest::ingest_folder(docs.path(), s, {});
    if (kind != StoreKind::kDense) {
      const auto page = s.search(SearchMode::kKeyword, "okapi", 1, 10);
      REQUIRE(page.total_hits == 1);
      CHECK(page.hits[0].source_path.ends_with("animals.txt"));
      CHECK(page.hits[0].snippet.find("**okapi**") != std::string::npos);
    } else {
      CHECK_THROWS_AS(s.search(SearchMode::kKeyword, "okapi", 1, 10), Error);
    }
    const auto sem = s.search(SearchMode::kSemantic, "okapi giraffe", 1, 3);
    CHECK(!sem.hits.empty());
    if (kind == StoreKind::kDual) {
      const auto hy = s.search(SearchMode::kHybrid, "okapi", 1, 10);
      CHECK(hy.hits[0].source_path.ends_with("animals.txt"));
    } else {
      CHECK_THROWS_AS(s.search(SearchMode::kHybrid, "okapi", 1, 10), Error);
    }
    // Stopwords dominate raw-tf hash vectors, so the dense side gets content words.
    const auto question = kind == StoreKind::kSparse ? "Where does the okapi live?" : "okapi rainforest giraffe";
    const auto got = s.retrieve(question, 2);
    REQUIRE(!got.empty());
    CHECK(got[0].source_path.ends_with("animals.txt"));
  }
}

TEST_CASE("re-ingest after edit replaces chunks and cleans old snapshots") {
  testing::TempDir dir;
  testing::TempDir docs;
  testing::write_five_file_fixture(docs.path());
  auto s = Store::create(dir / "s", {}, hash32());
  ingest::ingest_folder(docs.path(), s, {});
  const auto before = s.chunk_count();
  testing::write_text(docs / "animals.txt", "Zebras have stripes.");
  ingest::ingest_folder(docs.path(), s, {});
  CHECK(s.chunk_count() == before);
  CHECK(s.search(SearchMode::kKeyword, "okapi", 1, 10).total_hits == 0);
  CHECK(s.search(SearchMode::kKeyword, "zebras", 1, 10).total_hits == 1);
  CHECK(snapshot_dirs(dir / "s") == 1);
  const auto reopened = Store::open(dir / "s", {}, hash32());
  CHECK(reopened.search(SearchMode::kKeyword, "zebras", 1, 10).total_hits == 1);
}

TEST_CASE("copies are independent") {
  testing::TempDir dir;
  auto s = Store::create(dir / "s", {}, hash32());
  Store copy = s;
  copy.add_chunk(testing::make_chunk("/x.txt", 0, "river"));
  CHECK(copy.chunk_count() == 1);
  CHECK(s.chunk_count() == 0);
}

TEST_CASE("store lock excludes a second writer") {
  testing::TempDir dir;
  Store::create(dir / "s", {}, hash32());
  {
    StoreLock first(dir / "s");
    try {
      StoreLock second(dir / "s");
      FAIL("expected IngestInProgress");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kIngestInProgress);
    }
  }
  StoreLock again(dir / "s");
}

TEST_CASE("a stray temp snapshot is ignored and removed at the next commit") {
  testing::TempDir dir;
  auto s = Store::create(dir / "s", {}, hash32());
  std::filesystem::create_directories(dir / "s" / "snapshots" / "7.tmp");
  const auto reopened = Store::open(dir / "s", {}, hash32());
  CHECK(reopened.manifest().generation == 1);
  s.add_chunk(testing::make_chunk("/x.txt", 0, "river"));
  s.commit();
  CHECK(!std::filesystem::exists(dir / "s" / "snapshots" / "7.tmp"));
}
