#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "docintel/dense/embedding.hpp"
#include "docintel/dense/hnsw.hpp"
#include "docintel/ingest.hpp"

namespace docintel::dense {

struct DenseHit {
  std::string chunk_id;
  double similarity;
};

// Chunk-level vector store: embeds chunk text, indexes non-zero embeddings in
// HNSW and records zero-embedding chunks as unembeddable.
class DenseStore {
 public:
  DenseStore(std::shared_ptr<const Embedder> embedder, HnswParams params = {});

  const Embedder& embedder() const { return *embedder_; }
  std::shared_ptr<const Embedder> embedder_ptr() const { return embedder_; }
  const HnswIndex& index() const { return index_; }

  // Embedding happens before any mutation, so embedder errors leave the
  // store unchanged.
  EmbeddingVector embed_chunk(const ingest::Chunk& chunk) const;
  void add_chunk(const ingest::Chunk& chunk);
  void add_embedded(const ingest::Chunk& chunk, const EmbeddingVector& vector);
  bool remove_chunk(const std::string& chunk_id);
  std::size_t delete_by_source(const std::string& source_path);

  bool contains(const std::string& chunk_id) const;
  bool is_unembeddable(const std::string& chunk_id) const;
  const ingest::Chunk* find(const std::string& chunk_id) const;

  std::size_t live_count() const { return index_.live_count(); }
  std::size_t unembeddable_count() const { return unembeddable_.size(); }
  std::size_t chunk_count() const { return chunks_.size(); }
  std::vector<std::string> chunk_ids() const;

  // Empty when nothing is indexed or the query embeds to zero.
  std::vector<DenseHit> search(std::string_view query_text, std::size_t k,
                               std::size_t ef_search = 0) const;
  std::vector<DenseHit> search_vector(std::span<const float> query, std::size_t k,
                                      std::size_t ef_search = 0) const;

  void persist(const std::filesystem::path& dir) const;
  static DenseStore load(const std::filesystem::path& dir,
                         std::shared_ptr<const Embedder> embedder);

 private:
  std::shared_ptr<const Embedder> embedder_;
  HnswIndex index_;
  std::uint64_t next_id_ = 0;
  std::map<std::string, ingest::Chunk> chunks_;  // every chunk, by chunk_id
  std::unordered_map<std::string, std::uint64_t> id_by_chunk_;
  std::unordered_map<std::uint64_t, std::string> chunk_by_id_;
  std::map<std::string, std::string> unembeddable_;  // chunk_id -> source_path
};

}  // namespace docintel::dense
