#include "docintel/store/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <set>

#include "docintel/error.hpp"
#include "docintel/io.hpp"
#include "docintel/sparse/tokenizer.hpp"
#include "docintel/text/utf8.hpp"

namespace docintel::store {
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kSnapshots = "snapshots";

std::string now_iso8601() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void check_page(std::size_t page, std::size_t page_size) {
  if (page < 1) throw Error(ErrorCode::kInvalidArgument, "page must be >= 1");
  if (page_size < 1 || page_size > 1000) {
    throw Error(ErrorCode::kInvalidArgument, "page_size must be in [1, 1000]");
  }
}

// Compares the parts of an embedder fingerprint that change vector space.
bool same_embedder(const nlohmann::json& a, const nlohmann::json& b) {
  for (const char* key : {"kind", "model", "dim"}) {
    if (a.value(key, nlohmann::json()) != b.value(key, nlohmann::json())) return false;
  }
  return true;
}

}  // namespace

std::string_view store_kind_name(StoreKind kind) {
  switch (kind) {
    case StoreKind::kSparse: return "sparse";
    case StoreKind::kDense: return "dense";
    case StoreKind::kDual: return "dual";
  }
  return "dual";
}

std::optional<StoreKind> parse_store_kind(std::string_view name) {
  if (name == "sparse") return StoreKind::kSparse;
  if (name == "dense") return StoreKind::kDense;
  if (name == "dual") return StoreKind::kDual;
  return std::nullopt;
}

std::string_view search_mode_name(SearchMode mode) {
  switch (mode) {
    case SearchMode::kKeyword: return "keyword";
    case SearchMode::kSemantic: return "semantic";
    case SearchMode::kHybrid: return "hybrid";
  }
  return "keyword";
}

std::optional<SearchMode> parse_search_mode(std::string_view name) {
  if (name == "keyword") return SearchMode::kKeyword;
  if (name == "semantic") return SearchMode::kSemantic;
  if (name == "hybrid") return SearchMode::kHybrid;
  return std::nullopt;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [path, f] : files) {
    list.push_back({{"source_path", f.source_path},
                    {"sha256", f.sha256},
                    {"mtime", f.mtime},
                    {"chunk_count", f.chunk_count}});
  }
  return {{"format_version", format_version},
          {"store_kind", store_kind_name(store_kind)},
          {"created_at", created_at},
          {"generation", generation},
          {"files", list},
          {"embedder", embedder}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1) throw CorruptStore(kManifest, 0, "unsupported format_version");
    auto kind = parse_store_kind(j.at("store_kind").get<std::string>());
    if (!kind) throw CorruptStore(kManifest, 0, "unknown store_kind");
    m.store_kind = *kind;
    m.created_at = j.at("created_at").get<std::string>();
    m.generation = j.at("generation").get<std::uint64_t>();
    m.embedder = j.at("embedder");
    for (const auto& f : j.at("files")) {
      ingest::FileRecord r{f.at("source_path").get<std::string>(), f.at("sha256").get<std::string>(),
                           f.at("mtime").get<std::int64_t>(),
                           f.at("chunk_count").get<std::size_t>()};
      if (!m.files.emplace(r.source_path, r).second) {
        throw CorruptStore(kManifest, 0, "duplicate file entry " + r.source_path);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStore(kManifest, 0, e.what());
  }
  return m;
}

Store::Store(fs::path dir, StoreOptions options, std::shared_ptr<const dense::Embedder> embedder)
    : dir_(std::move(dir)), options_(std::move(options)), embedder_(std::move(embedder)) {
  if (!embedder_) throw Error(ErrorCode::kInvalidArgument, "store needs an embedder");
  options_.hnsw.validate();
  options_.bm25.validate();
  options_.fusion.validate();
}

bool Store::exists(const fs::path& dir) {
  std::error_code ec;
  return fs::exists(dir / kManifest, ec);
}

void Store::init_empty() {
  sparse_.reset();
  dense_.reset();
  dual_.reset();
  switch (options_.kind) {
    case StoreKind::kSparse: sparse_.emplace(); break;
    case StoreKind::kDense: dense_.emplace(embedder_, options_.hnsw); break;
    case StoreKind::kDual: dual_.emplace(embedder_, options_.hnsw); break;
  }
}

Store Store::create(const fs::path& dir, const StoreOptions& options,
                    std::shared_ptr<const dense::Embedder> embedder) {
  if (exists(dir)) {
    throw Error(ErrorCode::kInvalidArgument, "store already initialized: " + dir.string());
  }
  std::error_code ec;
  fs::create_directories(dir / kSnapshots, ec);
  if (ec) throw Error(ErrorCode::kIoError, dir.string() + ": " + ec.message());
  Store store(dir, options, std::move(embedder));
  store.init_empty();
  store.manifest_.store_kind = options.kind;
  store.manifest_.created_at = now_iso8601();
  store.manifest_.embedder = store.embedder_->fingerprint();
  // First commit publishes generation 1; an empty store is thus loadable.
  store.commit();
  return store;
}

Store Store::open(const fs::path& dir, const StoreOptions& options,
                  std::shared_ptr<const dense::Embedder> embedder) {
  if (!exists(dir)) throw Error(ErrorCode::kNotFound, "no store at " + dir.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(dir / kManifest));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStore(kManifest, 0, e.what());
  }
  Manifest manifest = Manifest::from_json(j);
  StoreOptions opts = options;
  opts.kind = manifest.store_kind;
  Store store(dir, opts, std::move(embedder));
  const auto fingerprint = store.embedder_->fingerprint();
  if (!same_embedder(manifest.embedder, fingerprint)) {
    throw Error(ErrorCode::kInvalidValue,
                "store was built with embedder " + manifest.embedder.dump() +
                    ", configured embedder is " + fingerprint.dump());
  }
  store.manifest_ = std::move(manifest);
  store.load_generation();
  return store;
}

Store Store::open_or_create(const fs::path& dir, const StoreOptions& options,
                            std::shared_ptr<const dense::Embedder> embedder) {
  if (exists(dir)) return open(dir, options, std::move(embedder));
  return create(dir, options, std::move(embedder));
}

fs::path Store::snapshot_dir(std::uint64_t generation) const {
  return dir_ / kSnapshots / std::to_string(generation);
}

void Store::load_generation() {
  const fs::path snap = snapshot_dir(manifest_.generation);
  switch (options_.kind) {
    case StoreKind::kSparse: sparse_ = sparse::SparseIndex::load(snap / "sparse"); break;
    case StoreKind::kDense: dense_ = dense::DenseStore::load(snap / "dense", embedder_); break;
    case StoreKind::kDual: dual_ = dual::DualStore::load(snap, embedder_); break;
  }
}

const sparse::SparseIndex* Store::sparse() const {
  if (dual_) return &dual_->sparse();
  return sparse_ ? &*sparse_ : nullptr;
}

const dense::DenseStore* Store::dense() const {
  if (dual_) return &dual_->dense();
  return dense_ ? &*dense_ : nullptr;
}

std::size_t Store::chunk_count() const {
  if (const auto* s = sparse()) return s->doc_count();
  return dense()->chunk_count();
}

const ingest::Chunk* Store::find_chunk(const std::string& chunk_id) const {
  if (const auto* s = sparse()) {
    const auto* stored = s->find(chunk_id);
    return stored ? &stored->chunk : nullptr;
  }
  return dense()->find(chunk_id);
}

std::vector<ingest::Chunk> Store::chunks_of(const std::string& source_path) const {
  std::vector<ingest::Chunk> out;
  if (const auto* s = sparse()) {
    for (auto ref : s->refs()) {
      const auto* stored = s->find_ref(ref);
      if (stored->chunk.source_path == source_path) out.push_back(stored->chunk);
    }
  } else {
    for (const auto& id : dense()->chunk_ids()) {
      const auto* c = dense()->find(id);
      if (c->source_path == source_path) out.push_back(*c);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ingest::Chunk& a, const ingest::Chunk& b) { return a.seq < b.seq; });
  return out;
}

std::optional<std::string> Store::document_text(const std::string& source_path) const {
  const auto chunks = chunks_of(source_path);
  if (chunks.empty()) return std::nullopt;
  std::u32string doc;
  for (const auto& c : chunks) {
    const std::u32string cps = text::decode_utf8(c.text);
    if (c.end_offset <= doc.size()) continue;
    const std::size_t skip = doc.size() > c.start_offset ? doc.size() - c.start_offset : 0;
    if (skip < cps.size()) doc.append(cps, skip, std::u32string::npos);
  }
  return text::encode_utf8(doc);
}

std::optional<std::string> Store::known_sha256(const std::string& source_path) const {
  auto it = manifest_.files.find(source_path);
  if (it == manifest_.files.end()) return std::nullopt;
  return it->second.sha256;
}

std::size_t Store::delete_by_source(const std::string& source_path) {
  manifest_.files.erase(source_path);
  if (dual_) return dual_->delete_by_source(source_path);
  if (sparse_) return sparse_->delete_by_source(source_path);
  return dense_->delete_by_source(source_path);
}

void Store::add_chunk(const ingest::Chunk& chunk) {
  if (dual_) {
    if (dual_->inconsistent()) {
      throw Error(ErrorCode::kPartialWriteRollback, "store is flagged inconsistent");
    }
    dual_->add_chunk(chunk);
  } else if (sparse_) {
    sparse_->add_chunk(chunk);
  } else {
    dense_->add_chunk(chunk);
  }
}

void Store::record_file(const ingest::FileRecord& record) {
  manifest_.files[record.source_path] = record;
}

void Store::commit() {
  if (dual_ && dual_->inconsistent()) {
    throw Error(ErrorCode::kPartialWriteRollback, "refusing to commit an inconsistent store");
  }
  const std::uint64_t next = manifest_.generation + 1;
  const fs::path final_dir = snapshot_dir(next);
  const fs::path tmp_dir = final_dir.string() + ".tmp";
  std::error_code ec;
  fs::remove_all(tmp_dir, ec);
  fs::remove_all(final_dir, ec);
  fs::create_directories(tmp_dir);

  switch (options_.kind) {
    case StoreKind::kSparse: sparse_->persist(tmp_dir / "sparse"); break;
    case StoreKind::kDense: dense_->persist(tmp_dir / "dense"); break;
    case StoreKind::kDual: dual_->persist(tmp_dir, options_.fusion); break;
  }
  io::sync_directory(tmp_dir);
  fs::rename(tmp_dir, final_dir);
  io::sync_directory(dir_ / kSnapshots);

  Manifest updated = manifest_;
  updated.generation = next;
  io::write_file_atomic(dir_ / kManifest, updated.to_json().dump(2));
  manifest_ = std::move(updated);
  remove_stale_snapshots();
}

void Store::remove_stale_snapshots() const {
  const std::string keep = std::to_string(manifest_.generation);
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_ / kSnapshots, ec)) {
    if (entry.path().filename() != keep) fs::remove_all(entry.path(), ec);
  }
}

std::string Store::snippet_for(const std::string& text,
                               const std::vector<std::string>& terms) const {
  return sparse::highlight(text, std::set<std::string>(terms.begin(), terms.end()),
                           options_.highlight);
}

std::vector<Retrieved> Store::retrieve(std::string_view question, std::size_t k) const {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const auto terms_query = sparse::any_terms_query(question);
  const auto terms = terms_query ? sparse::positive_terms(*terms_query) : std::vector<std::string>{};
  std::vector<Retrieved> out;
  auto push = [&](const ingest::Chunk& c, double score) {
    out.push_back({c.chunk_id, c.source_path, c.text, snippet_for(c.text, terms), score});
  };

  if (dual_) {
    for (const auto& h : dual_->hybrid_search(terms_query, question, k, options_.fusion,
                                              options_.bm25)) {
      push(*find_chunk(h.chunk_id), h.fused_score);
    }
  } else if (sparse_) {
    if (!terms_query) return out;
    for (const auto& r : sparse_->rank(*terms_query, options_.bm25)) {
      if (out.size() == k) break;
      push(sparse_->find_ref(r.ref)->chunk, r.score);
    }
  } else {
    for (const auto& h : dense_->search(question, k)) push(*dense_->find(h.chunk_id), h.similarity);
  }
  return out;
}

sparse::ResultPage Store::search(SearchMode mode, std::string_view query, std::size_t page,
                                 std::size_t page_size) const {
  check_page(page, page_size);
  sparse::ResultPage result;
  result.page = page;
  result.page_size = page_size;
  const std::size_t offset = (page - 1) * page_size;
  const std::size_t wanted = offset + page_size;

  auto fill = [&](const std::vector<std::pair<std::string, double>>& ranked,
                  const std::vector<std::string>& terms) {
    for (std::size_t i = offset; i < ranked.size() && i < wanted; ++i) {
      const auto* c = find_chunk(ranked[i].first);
      result.hits.push_back(
          {c->chunk_id, ranked[i].second, snippet_for(c->text, terms), c->source_path});
    }
  };

  switch (mode) {
    case SearchMode::kKeyword: {
      const auto* s = sparse();
      if (!s) throw Error(ErrorCode::kInvalidArgument, "keyword search needs a sparse store");
      return s->search(sparse::parse_query(query), page, page_size, options_.bm25,
                       options_.highlight);
    }
    case SearchMode::kSemantic: {
      std::vector<std::string> terms = sparse::tokenize_terms(query);
      std::sort(terms.begin(), terms.end());
      terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
      if (const auto* d = dense()) {
        if (d->live_count() == 0 || dense::is_zero(embedder_->embed_one(query))) return result;
        result.total_hits = d->live_count();
        std::vector<std::pair<std::string, double>> ranked;
        for (auto& h : d->search(query, std::min(wanted, d->live_count()))) {
          ranked.emplace_back(std::move(h.chunk_id), h.similarity);
        }
        fill(ranked, terms);
        return result;
      }
      const auto terms_query = sparse::any_terms_query(query);
      if (!terms_query) return result;
      auto page1 = sparse_->semantic_rerank(*terms_query, query, wanted, *embedder_,
                                            options_.bm25, options_.highlight);
      result.total_hits = page1.total_hits;
      for (std::size_t i = offset; i < page1.hits.size() && i < wanted; ++i) {
        result.hits.push_back(std::move(page1.hits[i]));
      }
      return result;
    }
    case SearchMode::kHybrid: {
      if (!dual_) throw Error(ErrorCode::kInvalidArgument, "hybrid search needs a dual store");
      const sparse::Query parsed = sparse::parse_query(query);
      const auto fused = dual_->hybrid_search(
          parsed, query, options_.fusion.k_sparse + options_.fusion.k_dense, options_.fusion,
          options_.bm25);
      result.total_hits = fused.size();
      std::vector<std::pair<std::string, double>> ranked;
      for (const auto& h : fused) ranked.emplace_back(h.chunk_id, h.fused_score);
      fill(ranked, sparse::positive_terms(parsed));
      return result;
    }
  }
  return result;
}

StoreLock::StoreLock(const fs::path& store_dir) {
  std::error_code ec;
  fs::create_directories(store_dir, ec);
  const fs::path path = store_dir / ".lock";
  fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::kIoError, path.string() + ": " + std::strerror(errno));
  }
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    if (err == EWOULDBLOCK) {
      throw Error(ErrorCode::kIngestInProgress, "another writer holds " + path.string());
    }
    throw Error(ErrorCode::kIoError, path.string() + ": " + std::strerror(err));
  }
}

StoreLock::~StoreLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace docintel::store
