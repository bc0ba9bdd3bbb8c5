#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "docintel/dense/hnsw.hpp"
#include "docintel/dual/store.hpp"
#include "docintel/ingest.hpp"
#include "docintel/llm/backend.hpp"
#include "docintel/sparse/index.hpp"
#include "docintel/store/store.hpp"

namespace docintel::service {

struct LlmConfig {
  llm::BackendKind backend = llm::BackendKind::kStub;
  std::string endpoint;
  std::string model;
  std::string api_key_env;  // name of the environment variable, never the key
  std::int64_t timeout_ms = 120000;

  bool operator==(const LlmConfig&) const = default;
};

enum class EmbedderKind { kHash, kRemote };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kHash;
  std::size_t dim = 256;
  std::string endpoint;
  std::string model;
  std::string api_key_env;
  std::size_t batch_limit = 128;

  bool operator==(const EmbedderConfig&) const = default;
};

struct ServerConfig {
  std::string bind_addr = "127.0.0.1";
  int port = 8765;
  std::size_t max_in_flight = 4;
  bool allow_remote_bind = false;

  bool operator==(const ServerConfig&) const = default;
};

struct Config {
  std::filesystem::path store_dir = "docintel-store";
  store::StoreKind store_kind = store::StoreKind::kDual;
  ingest::ChunkingParams chunking;
  sparse::Bm25Params bm25;
  dense::HnswParams hnsw;
  dual::FusionParams fusion;
  LlmConfig llm;
  EmbedderConfig embedder;
  ServerConfig server;

  // Cross-field rules: http backend and remote embedder need an endpoint;
  // a non-loopback bind address needs server.allow_remote_bind = true.
  void validate() const;
  bool operator==(const Config&) const = default;

  // Every field; api_key_env names only. Never contains key material.
  nlohmann::json to_json() const;
};

// Grammar, one item per line:
//   # comment            (also ';'; full lines only)
//   [section]
//   key = value          (value trimmed; optional surrounding double quotes)
// Unknown sections and keys are errors. Missing keys keep their defaults.
// Throws ConfigParseError (with line), UnknownKey, InvalidValue.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

// Canonical text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const Config& config);

bool is_loopback(std::string_view bind_addr);

}  // namespace docintel::service
