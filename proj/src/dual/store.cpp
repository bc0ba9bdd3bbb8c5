#include "docintel/dual/store.hpp"

#include <algorithm>
#include <future>
#include <map>

#include "docintel/error.hpp"
#include "docintel/io.hpp"

namespace docintel::dual {
namespace fs = std::filesystem;

void FusionParams::validate() const {
  if (rrf_k < 1) throw Error(ErrorCode::kInvalidValue, "fusion rrf_k must be >= 1");
  if (k_dense < 1 || k_sparse < 1) {
    throw Error(ErrorCode::kInvalidValue, "fusion k_dense and k_sparse must be >= 1");
  }
}

std::vector<FusedHit> fuse_rrf(const std::vector<std::string>& sparse_ranking,
                               const std::vector<std::string>& dense_ranking,
                               std::size_t rrf_k, std::size_t k) {
  std::map<std::string, FusedHit> acc;
  auto visit = [&](const std::vector<std::string>& ranking, bool is_sparse) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      auto& hit = acc[ranking[i]];
      auto& slot = is_sparse ? hit.sparse_rank : hit.dense_rank;
      if (slot) continue;  // first occurrence wins
      hit.chunk_id = ranking[i];
      slot = i + 1;
    }
  };
  visit(sparse_ranking, true);
  visit(dense_ranking, false);

  std::vector<FusedHit> out;
  out.reserve(acc.size());
  for (auto& [id, hit] : acc) {
    // Summed in a fixed order so equal rank pairs give bit-identical scores.
    double score = 0.0;
    if (hit.sparse_rank) score += 1.0 / static_cast<double>(rrf_k + *hit.sparse_rank);
    if (hit.dense_rank) score += 1.0 / static_cast<double>(rrf_k + *hit.dense_rank);
    hit.fused_score = score;
    out.push_back(std::move(hit));
  }
  std::stable_sort(out.begin(), out.end(), [](const FusedHit& a, const FusedHit& b) {
    if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
    return a.chunk_id < b.chunk_id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

DualStore::DualStore(std::shared_ptr<const dense::Embedder> embedder, dense::HnswParams hnsw)
    : dense_(std::move(embedder), hnsw) {}

DualStore::DualStore(sparse::SparseIndex sparse, dense::DenseStore dense)
    : sparse_(std::move(sparse)), dense_(std::move(dense)) {}

void DualStore::add_chunk(const ingest::Chunk& chunk) {
  if (sparse_.contains(chunk.chunk_id) || dense_.contains(chunk.chunk_id)) {
    throw Error(ErrorCode::kDuplicateChunk, "duplicate chunk " + chunk.chunk_id,
                {{"chunk_id", chunk.chunk_id}});
  }
  const dense::EmbeddingVector vector = dense_.embed_chunk(chunk);
  sparse_.add_chunk(chunk);
  try {
    dense_.add_embedded(chunk, vector);
  } catch (...) {
    bool rolled_back = false;
    try {
      rolled_back = sparse_.remove_chunk(chunk.chunk_id);
    } catch (...) {
    }
    if (!rolled_back) {
      inconsistent_ = true;
      throw Error(ErrorCode::kPartialWriteRollback,
                  "rollback of sparse write failed for " + chunk.chunk_id,
                  {{"chunk_id", chunk.chunk_id}});
    }
    throw;
  }
}

std::size_t DualStore::delete_by_source(const std::string& source_path) {
  const std::size_t removed = sparse_.delete_by_source(source_path);
  dense_.delete_by_source(source_path);
  return removed;
}

std::vector<FusedHit> DualStore::hybrid_search(const std::optional<sparse::Query>& query,
                                               std::string_view raw_text, std::size_t k,
                                               const FusionParams& params,
                                               const sparse::Bm25Params& bm25) const {
  params.validate();
  const std::string raw(raw_text);
  auto sparse_side = std::async(std::launch::async, [&] {
    std::vector<std::string> ids;
    if (!query) return ids;
    for (const auto& r : sparse_.rank(*query, bm25)) {
      if (ids.size() == params.k_sparse) break;
      ids.push_back(sparse_.find_ref(r.ref)->chunk.chunk_id);
    }
    return ids;
  });
  std::vector<std::string> dense_ids;
  std::exception_ptr dense_error;
  try {
    for (auto& h : dense_.search(raw, params.k_dense)) dense_ids.push_back(std::move(h.chunk_id));
  } catch (...) {
    dense_error = std::current_exception();
  }
  std::vector<std::string> sparse_ids = sparse_side.get();
  if (dense_error) std::rethrow_exception(dense_error);
  return fuse_rrf(sparse_ids, dense_ids, params.rrf_k, k);
}

void DualStore::persist(const fs::path& dir, const FusionParams& defaults) const {
  fs::create_directories(dir);
  sparse_.persist(dir / "sparse");
  dense_.persist(dir / "dense");
  nlohmann::json meta = {{"format_version", 1},
                         {"fusion",
                          {{"method", "rrf"},
                           {"rrf_k", defaults.rrf_k},
                           {"k_dense", defaults.k_dense},
                           {"k_sparse", defaults.k_sparse}}}};
  io::write_file_synced(dir / "dual.json", meta.dump(2));
  io::sync_directory(dir);
}

DualStore DualStore::load(const fs::path& dir, std::shared_ptr<const dense::Embedder> embedder) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_file(dir / "dual.json"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStore("dual.json", 0, e.what());
  }
  if (meta.value("format_version", 0) != 1) {
    throw CorruptStore("dual.json", 0, "unsupported format_version");
  }
  DualStore store(sparse::SparseIndex::load(dir / "sparse"),
                  dense::DenseStore::load(dir / "dense", std::move(embedder)));
  if (store.sparse_.doc_count() != store.dense_.chunk_count()) {
    throw CorruptStore("dual.json", 0, "sparse and dense chunk counts differ");
  }
  return store;
}

}  // namespace docintel::dual
