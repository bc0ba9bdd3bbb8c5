#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "docintel/dense/store.hpp"
#include "docintel/sparse/index.hpp"

namespace docintel::dual {

struct FusionParams {
  std::size_t rrf_k = 60;
  std::size_t k_dense = 50;
  std::size_t k_sparse = 50;

  void validate() const;
  bool operator==(const FusionParams&) const = default;
};

struct FusedHit {
  std::string chunk_id;
  double fused_score = 0.0;
  std::optional<std::size_t> sparse_rank;  // 1-based
  std::optional<std::size_t> dense_rank;

  bool operator==(const FusedHit&) const = default;
};

// Reciprocal rank fusion of two ranked chunk_id lists (best first):
// score(c) = sum over lists containing c of 1 / (rrf_k + rank). Sorted by
// score descending, ties by chunk_id; truncated to k.
std::vector<FusedHit> fuse_rrf(const std::vector<std::string>& sparse_ranking,
                               const std::vector<std::string>& dense_ranking,
                               std::size_t rrf_k, std::size_t k);

// Sparse and dense stores written in lockstep.
class DualStore {
 public:
  explicit DualStore(std::shared_ptr<const dense::Embedder> embedder,
                     dense::HnswParams hnsw = {});
  DualStore(sparse::SparseIndex sparse, dense::DenseStore dense);

  sparse::SparseIndex& sparse() { return sparse_; }
  const sparse::SparseIndex& sparse() const { return sparse_; }
  dense::DenseStore& dense() { return dense_; }
  const dense::DenseStore& dense() const { return dense_; }

  // The chunk is embedded first, then staged in the sparse index and the
  // dense store; a failure on the dense side removes the sparse entry again.
  // If that removal fails the store is flagged inconsistent and
  // PartialWriteRollback is raised.
  void add_chunk(const ingest::Chunk& chunk);
  std::size_t delete_by_source(const std::string& source_path);
  bool inconsistent() const { return inconsistent_; }

  // Sparse side evaluates `query` (no query: the sparse side contributes no
  // ranks); dense side embeds `raw_text`. The two sides run concurrently.
  std::vector<FusedHit> hybrid_search(const std::optional<sparse::Query>& query, std::string_view raw_text,
                                      std::size_t k, const FusionParams& params = {},
                                      const sparse::Bm25Params& bm25 = {}) const;

  void persist(const std::filesystem::path& dir, const FusionParams& defaults = {}) const;
  static DualStore load(const std::filesystem::path& dir,
                        std::shared_ptr<const dense::Embedder> embedder);

 private:
  sparse::SparseIndex sparse_;
  dense::DenseStore dense_;
  bool inconsistent_ = false;
};

}  // namespace docintel::dual
