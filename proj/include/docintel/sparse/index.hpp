#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "docintel/dense/embedding.hpp"
#include "docintel/ingest.hpp"
#include "docintel/kernels.hpp"
#include "docintel/sparse/highlight.hpp"
#include "docintel/sparse/query.hpp"

namespace docintel::sparse {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;
  bool operator==(const Bm25Params&) const = default;
};

// Okapi BM25 contribution of one term:
//   idf = ln(1 + (N - df + 0.5) / (df + 0.5))
//   idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
// Zero when tf or df is zero.
double bm25_term(double tf, double df, double doc_count, double doc_length,
                 double avg_doc_length, const Bm25Params& params);

struct StoredChunk {
  std::uint32_t ref = 0;
  ingest::Chunk chunk;
  std::string ext;  // lowercase, without the dot
  std::uint32_t length = 0;  // token count
};

struct SearchHit {
  std::string chunk_id;
  double score = 0.0;
  std::string snippet;
  std::string source_path;
};

struct ResultPage {
  std::vector<SearchHit> hits;
  std::size_t total_hits = 0;
  std::size_t page = 1;
  std::size_t page_size = 10;

  nlohmann::json to_json() const;
};

struct RankedRef {
  std::uint32_t ref;
  double score;
};

// Collection statistics; equal across equivalent add/delete histories.
struct IndexStats {
  std::size_t doc_count = 0;
  std::uint64_t total_length = 0;
  std::map<std::string, std::uint32_t> document_frequency;

  bool operator==(const IndexStats&) const = default;
};

// In-memory inverted index with positional postings, persisted as a whole
// to a directory (terms.dat / postings.dat / stored.dat / meta.json).
class SparseIndex {
 public:
  void add_chunk(const ingest::Chunk& chunk);
  std::size_t delete_by_source(const std::string& source_path);
  bool remove_chunk(const std::string& chunk_id);
  bool contains(const std::string& chunk_id) const;
  const StoredChunk* find(const std::string& chunk_id) const;
  const StoredChunk* find_ref(std::uint32_t ref) const;
  std::optional<std::uint32_t> ref_of(const std::string& chunk_id) const;

  std::size_t doc_count() const { return docs_.size(); }
  std::uint64_t total_length() const { return total_length_; }
  double avgdl() const;
  std::uint32_t document_frequency(const std::string& term) const;
  std::uint32_t term_frequency(const std::string& term, std::uint32_t ref) const;
  IndexStats stats() const;
  std::vector<std::uint32_t> refs() const;

  // Throws UnknownChunk for a ref that is not in the index.
  double bm25_score(std::span<const std::string> terms, std::uint32_t ref,
                    const Bm25Params& params = {}) const;

  // Boolean candidate selection; throws PureNegationQuery when a negation
  // has no positive sibling context.
  std::vector<std::uint32_t> match(const Query& query) const;

  // All candidates ranked by BM25 over positive_terms(query), ties by
  // chunk_id ascending.
  std::vector<RankedRef> rank(const Query& query, const Bm25Params& params = {},
                              kernels::Exec exec = kernels::Exec::kParallel) const;

  ResultPage search(const Query& query, std::size_t page, std::size_t page_size,
                    const Bm25Params& params = {},
                    const HighlightOptions& highlight_options = {}) const;

  // Re-scores the top max(4k, 100) BM25 candidates by cosine similarity to
  // the raw query, embedding candidates on the fly.
  ResultPage semantic_rerank(const Query& query, std::string_view raw_query,
                             std::size_t k, const dense::Embedder& embedder,
                             const Bm25Params& params = {},
                             const HighlightOptions& highlight_options = {},
                             kernels::Exec exec = kernels::Exec::kParallel) const;

  void close() { closed_ = true; }
  bool closed() const { return closed_; }

  void persist(const std::filesystem::path& dir) const;
  static SparseIndex load(const std::filesystem::path& dir);

 private:
  struct Posting {
    std::uint32_t ref;
    std::vector<std::uint32_t> positions;
  };
  using PostingList = std::vector<Posting>;

  const PostingList* postings(const std::string& term) const;
  std::vector<std::uint32_t> phrase_refs(const std::vector<std::string>& terms) const;
  std::vector<std::uint32_t> eval(const Query& q,
                                  const std::vector<std::uint32_t>* context) const;
  void insert(StoredChunk stored);
  void erase_ref(std::uint32_t ref);

  std::map<std::string, PostingList> postings_;
  std::map<std::uint32_t, StoredChunk> docs_;
  std::unordered_map<std::string, std::uint32_t> ref_by_id_;
  std::uint32_t next_ref_ = 0;
  std::uint64_t total_length_ = 0;
  bool closed_ = false;
};

std::string extension_of(std::string_view source_path);

}  // namespace docintel::sparse
