#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <httplib.h>

#include "docintel/dense/embedding.hpp"
#include "docintel/dense/store.hpp"
#include "docintel/dual/store.hpp"
#include "docintel/error.hpp"
#include "docintel/sparse/query.hpp"
#include "embedders.hpp"
#include "fixtures.hpp"

using namespace docintel;

namespace {

const std::vector<std::string> kVocab = {"river", "stone", "water", "fish",  "tree", "sky",
                                         "cloud", "rain",  "wind",  "field", "road", "hill"};

std::vector<ingest::Chunk> random_chunks(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ingest::Chunk> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(testing::make_chunk("/r" + std::to_string(i % 7) + ".txt", i,
                                      testing::random_text(rng, 8, kVocab)));
  }
  return out;
}

}  // namespace

TEST_CASE("dense store search agrees with brute-force cosine") {
  auto embedder = std::make_shared<dense::HashEmbedder>(64);
  dense::DenseStore store(embedder);
  const auto chunks = random_chunks(200, 1);
  for (const auto& c : chunks) store.add_chunk(c);
  std::mt19937_64 rng(2);
  std::size_t hit = 0, total = 0;
  for (int qi = 0; qi < 20; ++qi) {
    const auto q = testing::random_text(rng, 3, kVocab);
    const auto qv = embedder->embed_one(q);
    std::vector<std::pair<double, std::string>> brute;
    for (const auto& c : chunks) brute.emplace_back(dense::cosine(qv, embedder->embed_one(c.text)), c.chunk_id);
    std::sort(brute.begin(), brute.end(), [](auto& a, auto& b) { return a.first > b.first; });
    // Short texts from a small vocabulary tie often; any hit at or above the
    // 5th best similarity counts.
    std::map<std::string, double> sim;
    for (const auto& [s, id] : brute) sim[id] = s;
    for (const auto& h : store.search(q, 5)) hit += sim[h.chunk_id] >= brute[4].first - 1e-9;
    total += 5;
  }
  CHECK(static_cast<double>(hit) / total >= 0.95);
}

TEST_CASE("unembeddable chunks are tracked, not indexed") {
  auto embedder = std::make_shared<dense::HashEmbedder>(32);
  dense::DenseStore store(embedder);
  const auto chunks = random_chunks(100, 3);
  for (const auto& c : chunks) store.add_chunk(c);
  store.add_chunk(testing::make_chunk("/z.txt", 0, "?? --- !!"));
  CHECK(store.is_unembeddable(testing::make_chunk("/z.txt", 0, "?? --- !!").chunk_id));
  CHECK(store.chunk_count() == store.live_count() + store.unembeddable_count());
  CHECK(store.search("?!", 5).empty());
  CHECK_THROWS_AS(store.add_chunk(chunks[0]), Error);
  CHECK(store.delete_by_source("/r1.txt") > 0);
  CHECK(store.chunk_count() == store.live_count() + store.unembeddable_count());
}

TEST_CASE("dense store persist round trip") {
  testing::TempDir dir;
  auto embedder = std::make_shared<dense::HashEmbedder>(32);
  dense::DenseStore store(embedder);
  for (const auto& c : random_chunks(100, 4)) store.add_chunk(c);
  store.remove_chunk(random_chunks(100, 4)[5].chunk_id);
  store.persist(dir.path());
  const auto loaded = dense::DenseStore::load(dir.path(), embedder);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto q = testing::random_text(rng, 2, kVocab);
    const auto a = store.search(q, 10);
    const auto b = loaded.search(q, 10);
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(a[j].chunk_id == b[j].chunk_id);
      CHECK(a[j].similarity == b[j].similarity);
    }
  }
  try {
    dense::DenseStore::load(dir.path(), std::make_shared<dense::HashEmbedder>(16));
    FAIL("expected a mismatch");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::kDimensionMismatch || e.code() == ErrorCode::kCorruptStore));
  }
}

TEST_CASE("rrf formula examples") {
  const auto& o = testing::frozen_oracles()["rrf"];
  auto both = dual::fuse_rrf({"a", "b"}, {"a", "c"}, 60, 10);
  CHECK(both[0].chunk_id == "a");
  CHECK(both[0].fused_score == doctest::Approx(o["rank1_both"].get<double>()).epsilon(1e-15));
  CHECK(both[0].fused_score == doctest::Approx(0.032787).epsilon(1e-5));
  auto sparse_only = dual::fuse_rrf({"x", "y"}, {}, 60, 10);
  CHECK(sparse_only[1].chunk_id == "y");
  CHECK(sparse_only[1].fused_score == doctest::Approx(o["sparse_only_rank2"].get<double>()));
  CHECK(sparse_only[1].sparse_rank == 2u);
  CHECK(!sparse_only[1].dense_rank.has_value());

  const auto& mixed = o["mixed"];
  const auto fused = dual::fuse_rrf(mixed["sparse"].get<std::vector<std::string>>(),
                                    mixed["dense"].get<std::vector<std::string>>(), 60, 10);
  REQUIRE(fused.size() == mixed["fused"].size());
  for (std::size_t i = 0; i < fused.size(); ++i) {
    CHECK(fused[i].chunk_id == mixed["fused"][i][0].get<std::string>());
    CHECK(std::abs(fused[i].fused_score - mixed["fused"][i][1].get<double>()) < 1e-15);
  }
  CHECK(dual::fuse_rrf({"a", "b", "c"}, {"c"}, 60, 2).size() == 2);
}

TEST_CASE("dual store adds in lockstep and rolls back a failed dense write") {
  auto embedder = std::make_shared<testing::FaultyEmbedder>(32);
  dual::DualStore store(embedder);
  store.add_chunk(testing::make_chunk("/a.txt", 0, "river stone"));
  const auto bad = testing::make_chunk("/a.txt", 1, "poison river");
  CHECK_THROWS_AS(store.add_chunk(bad), Error);
  CHECK_FALSE(store.sparse().contains(bad.chunk_id));
  CHECK_FALSE(store.dense().contains(bad.chunk_id));
  CHECK_FALSE(store.inconsistent());
  CHECK(store.sparse().doc_count() == store.dense().chunk_count());
}

TEST_CASE("dual store parity over 100 chunks and hybrid search") {
  auto embedder = std::make_shared<dense::HashEmbedder>(32);
  dual::DualStore store(embedder);
  for (const auto& c : random_chunks(100, 6)) store.add_chunk(c);
  store.add_chunk(testing::make_chunk("/u.txt", 0, "..."));
  CHECK(store.sparse().doc_count() ==
        store.dense().live_count() + store.dense().unembeddable_count());

  const auto q = sparse::parse_query("river OR fish");
  const auto hits = store.hybrid_search(q, "river fish", 10);
  REQUIRE(hits.size() == 10);
  for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].fused_score >= hits[i].fused_score);
  // Scores recomputed from the reported ranks.
  for (const auto& h : hits) {
    double s = 0;
    if (h.sparse_rank) s += 1.0 / (60.0 + *h.sparse_rank);
    if (h.dense_rank) s += 1.0 / (60.0 + *h.dense_rank);
    CHECK(h.fused_score == doctest::Approx(s).epsilon(1e-15));
  }
  // No query: dense ranks only.
  for (const auto& h : store.hybrid_search(std::nullopt, "river fish", 5)) CHECK(!h.sparse_rank);
}

TEST_CASE("dual store persist round trip") {
  testing::TempDir dir;
  auto embedder = std::make_shared<dense::HashEmbedder>(32);
  dual::DualStore store(embedder);
  for (const auto& c : random_chunks(40, 7)) store.add_chunk(c);
  store.persist(dir.path());
  const auto loaded = dual::DualStore::load(dir.path(), embedder);
  const auto q = sparse::parse_query("stone");
  CHECK(loaded.hybrid_search(q, "stone", 10) == store.hybrid_search(q, "stone", 10));
}

TEST_CASE("remote embedder reorders scrambled responses") {
  httplib::Server mock;
  nlohmann::json seen;
  mock.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    const auto n = seen["input"].size();
    nlohmann::json data = nlohmann::json::array();
    for (std::size_t i = n; i-- > 0;) {
      std::vector<float> v(4, 0.0f);
      v[i % 4] = 2.0f;
      data.push_back({{"index", i}, {"embedding", v}});
    }
    res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
  });
  const int port = mock.bind_to_any_port("127.0.0.1");
  std::thread t([&] { mock.listen_after_bind(); });
  mock.wait_until_ready();

  dense::RemoteEmbedderOptions opts;
  opts.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  opts.model = "m";
  opts.dimension = 4;
  opts.batch_limit = 3;
  dense::RemoteEmbedder embedder(opts);
  const std::vector<std::string> texts = {"a", "b", "c"};
  const auto out = embedder.embed(texts);
  mock.stop();
  t.join();
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out[i][i] == doctest::Approx(1.0f));
  }
  CHECK(seen["model"] == "m");
  CHECK(seen["input"] == nlohmann::json(texts));
}
