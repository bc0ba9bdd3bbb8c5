#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "docintel/dense/store.hpp"
#include "docintel/dual/store.hpp"
#include "docintel/ingest.hpp"
#include "docintel/sparse/index.hpp"

namespace docintel::store {

enum class StoreKind { kSparse, kDense, kDual };

std::string_view store_kind_name(StoreKind kind);
std::optional<StoreKind> parse_store_kind(std::string_view name);

enum class SearchMode { kKeyword, kSemantic, kHybrid };

std::string_view search_mode_name(SearchMode mode);
std::optional<SearchMode> parse_search_mode(std::string_view name);

struct Manifest {
  int format_version = 1;
  StoreKind store_kind = StoreKind::kDual;
  std::string created_at;  // ISO-8601 UTC
  std::uint64_t generation = 0;
  std::map<std::string, ingest::FileRecord> files;  // by source_path
  nlohmann::json embedder = nlohmann::json::object();

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

struct StoreOptions {
  StoreKind kind = StoreKind::kDual;
  dense::HnswParams hnsw;
  sparse::Bm25Params bm25;
  dual::FusionParams fusion;
  sparse::HighlightOptions highlight;
};

// One retrieved chunk with its score under the store's native ranking.
struct Retrieved {
  std::string chunk_id;
  std::string source_path;
  std::string text;
  std::string snippet;
  double score = 0.0;
};

// On-disk store: manifest.json names the committed generation, whose data
// lives in snapshots/<generation>/. A commit writes a new snapshot
// directory, then swaps the manifest atomically, so a crash at any point
// leaves the previous generation loadable.
//
// Store is a value type: copying it yields an independent writable copy.
class Store : public ingest::ChunkSink {
 public:
  // Creates and commits an empty store. Throws InvalidArgument if the
  // directory already holds a manifest.
  static Store create(const std::filesystem::path& dir, const StoreOptions& options,
                      std::shared_ptr<const dense::Embedder> embedder);
  // The store kind comes from the manifest; options.kind is ignored.
  static Store open(const std::filesystem::path& dir, const StoreOptions& options,
                    std::shared_ptr<const dense::Embedder> embedder);
  static Store open_or_create(const std::filesystem::path& dir, const StoreOptions& options,
                              std::shared_ptr<const dense::Embedder> embedder);
  static bool exists(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }
  StoreKind kind() const { return options_.kind; }
  const StoreOptions& options() const { return options_; }
  const Manifest& manifest() const { return manifest_; }
  const dense::Embedder& embedder() const { return *embedder_; }
  std::shared_ptr<const dense::Embedder> embedder_ptr() const { return embedder_; }

  // Null when the kind has no such side.
  const sparse::SparseIndex* sparse() const;
  const dense::DenseStore* dense() const;
  const dual::DualStore* dual() const { return dual_ ? &*dual_ : nullptr; }

  std::size_t chunk_count() const;
  bool empty() const { return chunk_count() == 0; }
  const ingest::Chunk* find_chunk(const std::string& chunk_id) const;
  std::vector<ingest::Chunk> chunks_of(const std::string& source_path) const;
  // Normalized document text reassembled from its chunks; nullopt for an
  // unknown source.
  std::optional<std::string> document_text(const std::string& source_path) const;

  // ChunkSink
  std::optional<std::string> known_sha256(const std::string& source_path) const override;
  std::size_t delete_by_source(const std::string& source_path) override;
  void add_chunk(const ingest::Chunk& chunk) override;
  void record_file(const ingest::FileRecord& record) override;
  void commit() override;

  // Top-k chunks for a natural-language question: hybrid for a dual store,
  // BM25 over the question's terms for sparse, cosine for dense.
  std::vector<Retrieved> retrieve(std::string_view question, std::size_t k) const;

  // Paged search. keyword needs a sparse side, hybrid a dual store; semantic
  // uses the dense side, or on-the-fly re-ranking of a sparse store.
  sparse::ResultPage search(SearchMode mode, std::string_view query, std::size_t page,
                            std::size_t page_size) const;

 private:
  Store(std::filesystem::path dir, StoreOptions options,
        std::shared_ptr<const dense::Embedder> embedder);
  void init_empty();
  void load_generation();
  std::filesystem::path snapshot_dir(std::uint64_t generation) const;
  void remove_stale_snapshots() const;
  std::string snippet_for(const std::string& text, const std::vector<std::string>& terms) const;

  std::filesystem::path dir_;
  StoreOptions options_;
  std::shared_ptr<const dense::Embedder> embedder_;
  Manifest manifest_;
  std::optional<sparse::SparseIndex> sparse_;
  std::optional<dense::DenseStore> dense_;
  std::optional<dual::DualStore> dual_;
};

// Exclusive advisory lock on <store>/.lock, held for the object's lifetime.
// Throws IngestInProgress when another process holds it.
class StoreLock {
 public:
  explicit StoreLock(const std::filesystem::path& store_dir);
  ~StoreLock();
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace docintel::store
