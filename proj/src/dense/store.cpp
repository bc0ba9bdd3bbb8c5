#include "docintel/dense/store.hpp"

#include <algorithm>

#include "docintel/error.hpp"
#include "docintel/io.hpp"

namespace docintel::dense {
namespace fs = std::filesystem;

namespace {

nlohmann::json parse_json_file(const fs::path& path, const std::string& label) {
  const std::string text = io::read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStore(label, 0, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

DenseStore::DenseStore(std::shared_ptr<const Embedder> embedder, HnswParams params)
    : embedder_(std::move(embedder)),
      index_(embedder_ ? embedder_->dimension() : 0, params) {}

EmbeddingVector DenseStore::embed_chunk(const ingest::Chunk& chunk) const {
  const std::string texts[] = {chunk.text};
  auto out = embedder_->embed(texts);
  if (out.size() != 1) {
    throw Error(ErrorCode::kInternal, "embedder returned wrong number of vectors");
  }
  return std::move(out.front());
}

void DenseStore::add_chunk(const ingest::Chunk& chunk) {
  if (contains(chunk.chunk_id)) {
    throw Error(ErrorCode::kDuplicateChunk, "duplicate chunk " + chunk.chunk_id,
                {{"chunk_id", chunk.chunk_id}});
  }
  add_embedded(chunk, embed_chunk(chunk));
}

void DenseStore::add_embedded(const ingest::Chunk& chunk, const EmbeddingVector& vector) {
  if (contains(chunk.chunk_id)) {
    throw Error(ErrorCode::kDuplicateChunk, "duplicate chunk " + chunk.chunk_id,
                {{"chunk_id", chunk.chunk_id}});
  }
  if (vector.size() != index_.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding has dimension " + std::to_string(vector.size()) +
                    ", store expects " + std::to_string(index_.dimension()));
  }
  if (is_zero(vector)) {
    unembeddable_.emplace(chunk.chunk_id, chunk.source_path);
  } else {
    const std::uint64_t id = next_id_;
    index_.insert(id, vector);
    ++next_id_;
    id_by_chunk_.emplace(chunk.chunk_id, id);
    chunk_by_id_.emplace(id, chunk.chunk_id);
  }
  chunks_.emplace(chunk.chunk_id, chunk);
}

bool DenseStore::remove_chunk(const std::string& chunk_id) {
  auto it = chunks_.find(chunk_id);
  if (it == chunks_.end()) return false;
  if (auto id = id_by_chunk_.find(chunk_id); id != id_by_chunk_.end()) {
    index_.mark_deleted(id->second);
    chunk_by_id_.erase(id->second);
    id_by_chunk_.erase(id);
  }
  unembeddable_.erase(chunk_id);
  chunks_.erase(it);
  return true;
}

std::size_t DenseStore::delete_by_source(const std::string& source_path) {
  std::vector<std::string> doomed;
  for (const auto& [id, chunk] : chunks_) {
    if (chunk.source_path == source_path) doomed.push_back(id);
  }
  for (const auto& id : doomed) remove_chunk(id);
  return doomed.size();
}

bool DenseStore::contains(const std::string& chunk_id) const {
  return chunks_.count(chunk_id) > 0;
}

bool DenseStore::is_unembeddable(const std::string& chunk_id) const {
  return unembeddable_.count(chunk_id) > 0;
}

std::vector<std::string> DenseStore::chunk_ids() const {
  std::vector<std::string> out;
  out.reserve(chunks_.size());
  for (const auto& [id, chunk] : chunks_) out.push_back(id);
  return out;
}

const ingest::Chunk* DenseStore::find(const std::string& chunk_id) const {
  auto it = chunks_.find(chunk_id);
  return it == chunks_.end() ? nullptr : &it->second;
}

std::vector<DenseHit> DenseStore::search(std::string_view query_text, std::size_t k,
                                         std::size_t ef_search) const {
  if (index_.empty()) return {};
  const EmbeddingVector q = embedder_->embed_one(query_text);
  return search_vector(q, k, ef_search);
}

std::vector<DenseHit> DenseStore::search_vector(std::span<const float> query,
                                                std::size_t k,
                                                std::size_t ef_search) const {
  if (index_.empty() || is_zero(query) || k == 0) return {};
  std::vector<DenseHit> out;
  for (const auto& n : index_.search(query, k, ef_search)) {
    out.push_back({chunk_by_id_.at(n.id), n.similarity});
  }
  return out;
}

void DenseStore::persist(const fs::path& dir) const {
  fs::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [id, chunk_id] : chunk_by_id_) {
    entries.push_back({{"id", id}, {"chunk", chunks_.at(chunk_id)}});
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a["id"].template get<std::uint64_t>() < b["id"].template get<std::uint64_t>();
  });
  nlohmann::json unembeddable = nlohmann::json::array();
  for (const auto& [chunk_id, source] : unembeddable_) {
    unembeddable.push_back(chunks_.at(chunk_id));
  }
  nlohmann::json idmap = {{"next_id", next_id_},
                          {"entries", entries},
                          {"unembeddable", unembeddable}};
  nlohmann::json meta = {{"format_version", 1},
                         {"dim", index_.dimension()},
                         {"embedder", embedder_->fingerprint()},
                         {"rng_seed", index_.params().rng_seed}};
  io::write_file_synced(dir / "vectors.dat", index_.serialize_vectors());
  io::write_file_synced(dir / "graph.dat", index_.serialize_graph());
  io::write_file_synced(dir / "idmap.json", idmap.dump());
  io::write_file_synced(dir / "meta.json", meta.dump(2));
  io::sync_directory(dir);
}

DenseStore DenseStore::load(const fs::path& dir, std::shared_ptr<const Embedder> embedder) {
  const nlohmann::json meta = parse_json_file(dir / "meta.json", "meta.json");
  if (meta.value("format_version", 0) != 1) {
    throw CorruptStore("meta.json", 0, "unsupported format_version");
  }
  const std::size_t dim = meta.value("dim", std::size_t{0});
  if (dim != embedder->dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "store dimension " + std::to_string(dim) + " differs from embedder dimension " +
                    std::to_string(embedder->dimension()));
  }

  DenseStore store(embedder);
  store.index_ = HnswIndex::deserialize(io::read_file(dir / "vectors.dat"),
                                        io::read_file(dir / "graph.dat"));
  if (store.index_.dimension() != dim) {
    throw CorruptStore("vectors.dat", 8, "dimension disagrees with meta.json");
  }

  const nlohmann::json idmap = parse_json_file(dir / "idmap.json", "idmap.json");
  try {
    store.next_id_ = idmap.at("next_id").get<std::uint64_t>();
    for (const auto& e : idmap.at("entries")) {
      const auto id = e.at("id").get<std::uint64_t>();
      auto chunk = e.at("chunk").get<ingest::Chunk>();
      if (!store.index_.contains(id) || store.chunks_.count(chunk.chunk_id)) {
        throw CorruptStore("idmap.json", 0, "entry does not match graph: " + chunk.chunk_id);
      }
      store.id_by_chunk_.emplace(chunk.chunk_id, id);
      store.chunk_by_id_.emplace(id, chunk.chunk_id);
      store.chunks_.emplace(chunk.chunk_id, std::move(chunk));
    }
    for (const auto& e : idmap.at("unembeddable")) {
      auto chunk = e.get<ingest::Chunk>();
      if (store.chunks_.count(chunk.chunk_id)) {
        throw CorruptStore("idmap.json", 0, "duplicate chunk " + chunk.chunk_id);
      }
      store.unembeddable_.emplace(chunk.chunk_id, chunk.source_path);
      store.chunks_.emplace(chunk.chunk_id, std::move(chunk));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStore("idmap.json", 0, e.what());
  }
  if (store.chunk_by_id_.size() != store.index_.live_count()) {
    throw CorruptStore("idmap.json", 0, "entry count disagrees with graph");
  }
  return store;
}

}  // namespace docintel::dense
