#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "docintel/io.hpp"

namespace docintel::dense {

struct HnswParams {
  std::uint32_t m = 16;                 // max neighbors per node above layer 0
  std::uint32_t ef_construction = 200;
  std::uint32_t ef_search = 50;
  std::uint64_t rng_seed = 42;

  double level_mult() const;  // 1 / ln(M)
  void validate() const;
  bool operator==(const HnswParams&) const = default;
};

struct Neighbor {
  std::uint64_t id;
  double similarity;
};

// Hierarchical navigable small-world graph over cosine similarity. Vectors
// are normalized on insert. Deletions are tombstones; once tombstones exceed
// 20% of the nodes the graph is rebuilt from the live nodes.
class HnswIndex {
 public:
  explicit HnswIndex(std::size_t dimension, HnswParams params = {});

  std::size_t dimension() const { return dim_; }
  const HnswParams& params() const { return params_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t live_count() const { return nodes_.size() - tombstones_; }
  std::size_t tombstone_count() const { return tombstones_; }
  bool contains(std::uint64_t id) const;  // live ids only
  bool empty() const { return live_count() == 0; }

  // Throws DuplicateId (also for tombstoned ids until the next rebuild),
  // ZeroVector, DimensionMismatch.
  void insert(std::uint64_t id, std::span<const float> vector);

  // Top-k live ids by similarity (descending, ties by id ascending); beam
  // width max(ef_search, k). ef_search = 0 uses params().ef_search.
  // Throws EmptyIndex.
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k,
                               std::size_t ef_search = 0) const;

  // Exact top-k over live nodes.
  std::vector<Neighbor> exact_search(std::span<const float> query, std::size_t k) const;

  // Returns false if the id is unknown or already deleted.
  bool mark_deleted(std::uint64_t id);
  void rebuild();

  // Stored (normalized) vector of a node, live or tombstoned.
  std::span<const float> vector(std::uint64_t id) const;
  std::vector<std::uint64_t> live_ids() const;

  // Empty when the graph satisfies every structural invariant; otherwise one
  // message per violation.
  std::vector<std::string> check_invariants() const;

  // vectors.dat and graph.dat bodies.
  std::string serialize_vectors() const;
  std::string serialize_graph() const;
  static HnswIndex deserialize(std::string_view vectors, std::string_view graph);

  // Per-node layer (for tests and diagnostics).
  int level_of(std::uint64_t id) const;
  std::vector<std::uint64_t> neighbors_of(std::uint64_t id, int layer) const;
  std::uint64_t entry_point_id() const;

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  struct Node {
    std::uint64_t id;
    int level;
    bool deleted = false;
    std::vector<std::vector<std::uint32_t>> links;  // per layer, node indices
  };

  struct Candidate {
    double sim;
    std::uint32_t node;
  };

  const float* data(std::uint32_t node) const { return vectors_.data() + node * dim_; }
  double similarity(const float* a, std::uint32_t node) const;
  int draw_level();
  std::size_t cap(int layer) const { return layer == 0 ? 2 * params_.m : params_.m; }
  std::uint32_t greedy_closest(const float* q, std::uint32_t start, int layer) const;
  std::vector<Candidate> search_layer(const float* q, std::uint32_t entry,
                                      std::size_t ef, int layer) const;
  void connect(std::uint32_t node, int layer, std::vector<Candidate> candidates);
  void prune(std::uint32_t node, int layer);
  void choose_entry_point();
  std::uint32_t index_of(std::uint64_t id) const;

  std::size_t dim_;
  HnswParams params_;
  std::vector<float> vectors_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::uint32_t> by_id_;
  std::uint32_t entry_ = kNone;
  std::size_t tombstones_ = 0;
  std::uint64_t level_draws_ = 0;
};

}  // namespace docintel::dense
