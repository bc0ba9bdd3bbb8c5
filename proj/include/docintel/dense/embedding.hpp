#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace docintel::dense {

using EmbeddingVector = std::vector<float>;

bool is_zero(std::span<const float> v);
double dot(std::span<const float> a, std::span<const float> b);
// Cosine similarity; 0 when either side is the zero vector.
double cosine(std::span<const float> a, std::span<const float> b);
// In-place L2 normalization (computed in double); zero stays zero.
void normalize(EmbeddingVector& v);

class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::vector<EmbeddingVector> embed(
      std::span<const std::string> texts) const = 0;
  // Identity recorded in store metadata ({kind, model?, endpoint?, dim}).
  virtual nlohmann::json fingerprint() const = 0;

  EmbeddingVector embed_one(std::string_view text) const;
};

// Feature-hashing embedder: FNV-1a of each term picks a bucket (h mod d) and
// a sign (bit 63); term frequencies accumulate and the result is normalized.
EmbeddingVector embed_hash(std::string_view text, std::size_t dimension);

class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dimension = 256);

  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed(
      std::span<const std::string> texts) const override;
  nlohmann::json fingerprint() const override;

 private:
  std::size_t dimension_;
};

struct RemoteEmbedderOptions {
  std::string endpoint;  // base URL; requests go to <endpoint>/embeddings
  std::string model;
  std::optional<std::string> api_key;
  std::size_t dimension = 256;
  std::size_t batch_limit = 128;
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds timeout{30000};
};

// One POST per batch of at most batch_limit texts, wire shape
// {"model", "input": [...]} -> {"data": [{"index", "embedding"}...]}.
// Results are reordered by index and normalized locally.
std::vector<EmbeddingVector> embed_remote(std::span<const std::string> texts,
                                          const RemoteEmbedderOptions& options);

class RemoteEmbedder : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderOptions options);

  std::size_t dimension() const override { return options_.dimension; }
  std::vector<EmbeddingVector> embed(
      std::span<const std::string> texts) const override;
  nlohmann::json fingerprint() const override;

 private:
  RemoteEmbedderOptions options_;
};

}  // namespace docintel::dense
