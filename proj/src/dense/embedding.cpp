#include "docintel/dense/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "docintel/error.hpp"
#include "docintel/kernels.hpp"
#include "docintel/net.hpp"
#include "docintel/sparse/tokenizer.hpp"
#include "docintel/text/hash.hpp"

namespace docintel::dense {

bool is_zero(std::span<const float> v) {
  for (float x : v) {
    if (x != 0.0f) return false;
  }
  return true;
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector dimensions differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

void normalize(EmbeddingVector& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
}

EmbeddingVector Embedder::embed_one(std::string_view text) const {
  std::string s(text);
  auto out = embed(std::span<const std::string>(&s, 1));
  return std::move(out.front());
}

EmbeddingVector embed_hash(std::string_view text, std::size_t dimension) {
  if (dimension < 8) {
    throw Error(ErrorCode::kInvalidArgument, "hash embedder dimension must be >= 8");
  }
  std::vector<double> acc(dimension, 0.0);
  for (const auto& term : sparse::tokenize_terms(text)) {
    const std::uint64_t h = text::fnv1a64(term);
    acc[h % dimension] += (h >> 63) ? -1.0 : 1.0;
  }
  double sq = 0.0;
  for (double x : acc) sq += x * x;
  EmbeddingVector v(dimension, 0.0f);
  if (sq == 0.0) return v;
  const double inv = 1.0 / std::sqrt(sq);
  for (std::size_t i = 0; i < dimension; ++i) v[i] = static_cast<float>(acc[i] * inv);
  return v;
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension < 8) {
    throw Error(ErrorCode::kInvalidArgument, "hash embedder dimension must be >= 8");
  }
}

std::vector<EmbeddingVector> HashEmbedder::embed(
    std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out(texts.size());
  kernels::for_each_index(kernels::Exec::kParallel, texts.size(), [&](std::size_t i) {
    out[i] = embed_hash(texts[i], dimension_);
  });
  return out;
}

nlohmann::json HashEmbedder::fingerprint() const {
  return {{"kind", "hash"}, {"dim", dimension_}};
}

namespace {

std::vector<EmbeddingVector> post_batch(std::span<const std::string> texts,
                                        const RemoteEmbedderOptions& options,
                                        const net::Endpoint& endpoint) {
  nlohmann::json body = {{"model", options.model},
                         {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  auto response = net::post_json(endpoint, "/embeddings", body, options.api_key,
                                 options.timeout);
  if (response.status < 200 || response.status >= 300) {
    throw Error(ErrorCode::kHttpStatusError,
                "embeddings endpoint returned HTTP " + std::to_string(response.status),
                {{"status", response.status}, {"body", net::excerpt(response.body)}});
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(response.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kHttpStatusError,
                std::string("embeddings response is not JSON: ") + e.what(),
                {{"status", response.status}, {"body", net::excerpt(response.body)}});
  }
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<bool> filled(texts.size(), false);
  try {
    for (const auto& item : parsed.at("data")) {
      const auto index = item.at("index").get<std::size_t>();
      if (index >= texts.size() || filled[index]) {
        throw Error(ErrorCode::kHttpStatusError,
                    "embeddings response has bad index " + std::to_string(index));
      }
      EmbeddingVector v = item.at("embedding").get<EmbeddingVector>();
      if (v.size() != options.dimension) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "embedding dimension " + std::to_string(v.size()) +
                        " does not match store dimension " +
                        std::to_string(options.dimension),
                    {{"expected", options.dimension}, {"actual", v.size()}});
      }
      normalize(v);
      out[index] = std::move(v);
      filled[index] = true;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kHttpStatusError,
                std::string("malformed embeddings response: ") + e.what());
  }
  for (bool f : filled) {
    if (!f) throw Error(ErrorCode::kHttpStatusError, "embeddings response is missing items");
  }
  return out;
}

}  // namespace

std::vector<EmbeddingVector> embed_remote(std::span<const std::string> texts,
                                          const RemoteEmbedderOptions& options) {
  if (texts.empty()) return {};
  if (options.endpoint.empty()) {
    throw Error(ErrorCode::kBackendUnavailable, "no embeddings endpoint configured");
  }
  const net::Endpoint endpoint = net::parse_endpoint(options.endpoint);
  const std::size_t batch = std::max<std::size_t>(1, options.batch_limit);
  const std::size_t in_flight = std::max<std::size_t>(1, options.max_in_flight);

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::size_t next = 0;
  while (next < texts.size()) {
    std::vector<std::future<std::vector<EmbeddingVector>>> wave;
    for (std::size_t w = 0; w < in_flight && next < texts.size(); ++w) {
      const std::size_t n = std::min(batch, texts.size() - next);
      auto slice = texts.subspan(next, n);
      wave.push_back(std::async(std::launch::async, [slice, &options, &endpoint] {
        return post_batch(slice, options, endpoint);
      }));
      next += n;
    }
    for (auto& f : wave) {
      for (auto& v : f.get()) out.push_back(std::move(v));
    }
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderOptions options)
    : options_(std::move(options)) {
  if (options_.endpoint.empty()) {
    throw Error(ErrorCode::kInvalidValue, "remote embedder requires an endpoint");
  }
  net::parse_endpoint(options_.endpoint);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(
    std::span<const std::string> texts) const {
  return embed_remote(texts, options_);
}

nlohmann::json RemoteEmbedder::fingerprint() const {
  return {{"kind", "remote"},
          {"model", options_.model},
          {"endpoint", options_.endpoint},
          {"dim", options_.dimension}};
}

}  // namespace docintel::dense
