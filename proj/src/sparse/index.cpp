#include "docintel/sparse/index.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "docintel/error.hpp"
#include "docintel/io.hpp"
#include "docintel/sparse/tokenizer.hpp"

namespace docintel::sparse {
namespace fs = std::filesystem;

void Bm25Params::validate() const {
  if (!(k1 >= 0.0)) throw Error(ErrorCode::kInvalidValue, "bm25 k1 must be >= 0");
  if (!(b >= 0.0 && b <= 1.0)) {
    throw Error(ErrorCode::kInvalidValue, "bm25 b must be in [0, 1]");
  }
}

double bm25_term(double tf, double df, double doc_count, double doc_length,
                 double avg_doc_length, const Bm25Params& params) {
  if (tf <= 0.0 || df <= 0.0) return 0.0;
  const double idf = std::log(1.0 + (doc_count - df + 0.5) / (df + 0.5));
  const double norm =
      params.k1 * (1.0 - params.b + params.b * doc_length / avg_doc_length);
  return idf * tf * (params.k1 + 1.0) / (tf + norm);
}

nlohmann::json ResultPage::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& h : hits) {
    items.push_back({{"chunk_id", h.chunk_id},
                     {"score", h.score},
                     {"snippet", h.snippet},
                     {"source_path", h.source_path}});
  }
  return {{"hits", items},
          {"total_hits", total_hits},
          {"page", page},
          {"page_size", page_size}};
}

std::string extension_of(std::string_view source_path) {
  std::string ext = fs::path(source_path).extension().string();
  if (!ext.empty() && ext.front() == '.') ext.erase(0, 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

namespace {

using RefList = std::vector<std::uint32_t>;

RefList intersect(const RefList& a, const RefList& b) {
  RefList out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

RefList unite(const RefList& a, const RefList& b) {
  RefList out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

RefList subtract(const RefList& a, const RefList& b) {
  RefList out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// A node needs a sibling context when it cannot produce candidates on its own.
bool needs_context(const Query& q) {
  switch (q.kind()) {
    case Query::Kind::kNot:
      return true;
    case Query::Kind::kOr:
      return std::any_of(q.children().begin(), q.children().end(), needs_context);
    case Query::Kind::kAnd:
      return std::all_of(q.children().begin(), q.children().end(), needs_context);
    default:
      return false;
  }
}

}  // namespace

void SparseIndex::insert(StoredChunk stored) {
  const auto tokens = tokenize(stored.chunk.text);
  std::map<std::string, std::vector<std::uint32_t>> positions;
  for (const auto& t : tokens) positions[t.term].push_back(t.position);
  for (auto& [term, pos] : positions) {
    auto& list = postings_[term];
    Posting posting{stored.ref, std::move(pos)};
    auto at = std::lower_bound(list.begin(), list.end(), stored.ref,
                               [](const Posting& p, std::uint32_t r) { return p.ref < r; });
    list.insert(at, std::move(posting));
  }
  stored.length = static_cast<std::uint32_t>(tokens.size());
  total_length_ += stored.length;
  ref_by_id_.emplace(stored.chunk.chunk_id, stored.ref);
  next_ref_ = std::max(next_ref_, stored.ref + 1);
  docs_.emplace(stored.ref, std::move(stored));
}

void SparseIndex::add_chunk(const ingest::Chunk& chunk) {
  if (closed_) throw Error(ErrorCode::kStoreClosed, "sparse index is closed");
  if (ref_by_id_.count(chunk.chunk_id)) {
    throw Error(ErrorCode::kDuplicateChunk, "duplicate chunk " + chunk.chunk_id,
                {{"chunk_id", chunk.chunk_id}});
  }
  StoredChunk stored;
  stored.ref = next_ref_;
  stored.chunk = chunk;
  stored.ext = extension_of(chunk.source_path);
  insert(std::move(stored));
}

void SparseIndex::erase_ref(std::uint32_t ref) {
  auto it = docs_.find(ref);
  if (it == docs_.end()) return;
  std::set<std::string> terms;
  for (auto& t : tokenize(it->second.chunk.text)) terms.insert(std::move(t.term));
  for (const auto& term : terms) {
    auto pit = postings_.find(term);
    if (pit == postings_.end()) continue;
    auto& list = pit->second;
    auto at = std::lower_bound(list.begin(), list.end(), ref,
                               [](const Posting& p, std::uint32_t r) { return p.ref < r; });
    if (at != list.end() && at->ref == ref) list.erase(at);
    if (list.empty()) postings_.erase(pit);
  }
  total_length_ -= it->second.length;
  ref_by_id_.erase(it->second.chunk.chunk_id);
  docs_.erase(it);
}

std::size_t SparseIndex::delete_by_source(const std::string& source_path) {
  if (closed_) throw Error(ErrorCode::kStoreClosed, "sparse index is closed");
  RefList doomed;
  for (const auto& [ref, doc] : docs_) {
    if (doc.chunk.source_path == source_path) doomed.push_back(ref);
  }
  for (auto ref : doomed) erase_ref(ref);
  return doomed.size();
}

bool SparseIndex::remove_chunk(const std::string& chunk_id) {
  auto ref = ref_of(chunk_id);
  if (!ref) return false;
  erase_ref(*ref);
  return true;
}

bool SparseIndex::contains(const std::string& chunk_id) const {
  return ref_by_id_.count(chunk_id) > 0;
}

const StoredChunk* SparseIndex::find(const std::string& chunk_id) const {
  auto ref = ref_of(chunk_id);
  return ref ? find_ref(*ref) : nullptr;
}

const StoredChunk* SparseIndex::find_ref(std::uint32_t ref) const {
  auto it = docs_.find(ref);
  return it == docs_.end() ? nullptr : &it->second;
}

std::optional<std::uint32_t> SparseIndex::ref_of(const std::string& chunk_id) const {
  auto it = ref_by_id_.find(chunk_id);
  if (it == ref_by_id_.end()) return std::nullopt;
  return it->second;
}

double SparseIndex::avgdl() const {
  return docs_.empty() ? 0.0
                       : static_cast<double>(total_length_) / static_cast<double>(docs_.size());
}

const SparseIndex::PostingList* SparseIndex::postings(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

std::uint32_t SparseIndex::document_frequency(const std::string& term) const {
  const auto* list = postings(term);
  return list ? static_cast<std::uint32_t>(list->size()) : 0;
}

std::uint32_t SparseIndex::term_frequency(const std::string& term,
                                          std::uint32_t ref) const {
  const auto* list = postings(term);
  if (!list) return 0;
  auto at = std::lower_bound(list->begin(), list->end(), ref,
                             [](const Posting& p, std::uint32_t r) { return p.ref < r; });
  if (at == list->end() || at->ref != ref) return 0;
  return static_cast<std::uint32_t>(at->positions.size());
}

IndexStats SparseIndex::stats() const {
  IndexStats s;
  s.doc_count = docs_.size();
  s.total_length = total_length_;
  for (const auto& [term, list] : postings_) {
    s.document_frequency.emplace(term, static_cast<std::uint32_t>(list.size()));
  }
  return s;
}

std::vector<std::uint32_t> SparseIndex::refs() const {
  RefList out;
  out.reserve(docs_.size());
  for (const auto& [ref, doc] : docs_) out.push_back(ref);
  return out;
}

double SparseIndex::bm25_score(std::span<const std::string> terms, std::uint32_t ref,
                               const Bm25Params& params) const {
  const auto* doc = find_ref(ref);
  if (!doc) {
    throw Error(ErrorCode::kUnknownChunk, "unknown chunk ref " + std::to_string(ref));
  }
  const double n = static_cast<double>(docs_.size());
  const double avg = avgdl();
  double score = 0.0;
  for (const auto& term : terms) {
    const auto tf = term_frequency(term, ref);
    if (tf == 0) continue;
    score += bm25_term(tf, document_frequency(term), n, doc->length, avg, params);
  }
  return score;
}

std::vector<std::uint32_t> SparseIndex::phrase_refs(
    const std::vector<std::string>& terms) const {
  const auto* first = postings(terms.front());
  if (!first) return {};
  std::vector<const PostingList*> lists;
  for (const auto& t : terms) {
    const auto* l = postings(t);
    if (!l) return {};
    lists.push_back(l);
  }
  RefList out;
  for (const auto& p : *first) {
    std::vector<const std::vector<std::uint32_t>*> pos_lists;
    bool all = true;
    for (const auto* l : lists) {
      auto at = std::lower_bound(l->begin(), l->end(), p.ref,
                                 [](const Posting& x, std::uint32_t r) { return x.ref < r; });
      if (at == l->end() || at->ref != p.ref) {
        all = false;
        break;
      }
      pos_lists.push_back(&at->positions);
    }
    if (!all) continue;
    for (std::uint32_t start : p.positions) {
      bool consecutive = true;
      for (std::size_t k = 1; k < pos_lists.size() && consecutive; ++k) {
        consecutive = std::binary_search(pos_lists[k]->begin(), pos_lists[k]->end(),
                                         start + static_cast<std::uint32_t>(k));
      }
      if (consecutive) {
        out.push_back(p.ref);
        break;
      }
    }
  }
  return out;
}

std::vector<std::uint32_t> SparseIndex::eval(const Query& q,
                                             const RefList* context) const {
  switch (q.kind()) {
    case Query::Kind::kTerm: {
      RefList out;
      if (const auto* list = postings(q.value())) {
        for (const auto& p : *list) out.push_back(p.ref);
      }
      return out;
    }
    case Query::Kind::kPhrase:
      return phrase_refs(q.terms());
    case Query::Kind::kField: {
      RefList out;
      for (const auto& [ref, doc] : docs_) {
        const std::string& v =
            q.field_name() == FieldName::kSource ? doc.chunk.source_path : doc.ext;
        if (v == q.value()) out.push_back(ref);
      }
      return out;
    }
    case Query::Kind::kNot: {
      if (!context) {
        throw Error(ErrorCode::kPureNegationQuery,
                    "negation needs a positive term alongside it",
                    {{"query", to_string(q)}});
      }
      return subtract(*context, eval(q.children()[0], context));
    }
    case Query::Kind::kOr: {
      RefList out;
      for (const auto& child : q.children()) out = unite(out, eval(child, context));
      return out;
    }
    case Query::Kind::kAnd: {
      std::optional<RefList> base;
      for (const auto& child : q.children()) {
        if (needs_context(child)) continue;
        RefList part = eval(child, context);
        base = base ? intersect(*base, part) : std::move(part);
      }
      if (!base) {
        if (!context) {
          throw Error(ErrorCode::kPureNegationQuery,
                      "negation needs a positive term alongside it",
                      {{"query", to_string(q)}});
        }
        base = *context;
      }
      for (const auto& child : q.children()) {
        if (!needs_context(child)) continue;
        base = intersect(*base, eval(child, &*base));
      }
      return *base;
    }
  }
  return {};
}

std::vector<std::uint32_t> SparseIndex::match(const Query& query) const {
  return eval(query, nullptr);
}

std::vector<RankedRef> SparseIndex::rank(const Query& query, const Bm25Params& params,
                                         kernels::Exec exec) const {
  params.validate();
  const RefList candidates = match(query);
  const std::vector<std::string> terms = positive_terms(query);
  std::vector<RankedRef> ranked(candidates.size());
  kernels::for_each_index(exec, candidates.size(), [&](std::size_t i) {
    ranked[i] = {candidates[i], bm25_score(terms, candidates[i], params)};
  });
  std::sort(ranked.begin(), ranked.end(), [&](const RankedRef& a, const RankedRef& b) {
    if (a.score != b.score) return a.score > b.score;
    return docs_.at(a.ref).chunk.chunk_id < docs_.at(b.ref).chunk.chunk_id;
  });
  return ranked;
}

ResultPage SparseIndex::search(const Query& query, std::size_t page,
                               std::size_t page_size, const Bm25Params& params,
                               const HighlightOptions& highlight_options) const {
  if (page < 1) throw Error(ErrorCode::kInvalidArgument, "page must be >= 1");
  if (page_size < 1 || page_size > 1000) {
    throw Error(ErrorCode::kInvalidArgument, "page_size must be in [1, 1000]");
  }
  const auto ranked = rank(query, params);
  const auto terms = positive_terms(query);
  const std::set<std::string> term_set(terms.begin(), terms.end());

  ResultPage result;
  result.total_hits = ranked.size();
  result.page = page;
  result.page_size = page_size;
  const std::size_t begin = (page - 1) * page_size;
  for (std::size_t i = begin; i < ranked.size() && i < begin + page_size; ++i) {
    const auto& doc = docs_.at(ranked[i].ref);
    result.hits.push_back({doc.chunk.chunk_id, ranked[i].score,
                           highlight(doc.chunk.text, term_set, highlight_options),
                           doc.chunk.source_path});
  }
  return result;
}

ResultPage SparseIndex::semantic_rerank(const Query& query, std::string_view raw_query,
                                        std::size_t k, const dense::Embedder& embedder,
                                        const Bm25Params& params,
                                        const HighlightOptions& highlight_options,
                                        kernels::Exec exec) const {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  auto ranked = rank(query, params, exec);
  const std::size_t pool = std::max<std::size_t>(4 * k, 100);
  if (ranked.size() > pool) ranked.resize(pool);

  std::vector<std::string> texts;
  texts.reserve(ranked.size());
  for (const auto& r : ranked) texts.push_back(docs_.at(r.ref).chunk.text);
  const dense::EmbeddingVector q = embedder.embed_one(raw_query);
  const auto vectors = embedder.embed(texts);

  std::vector<RankedRef> rescored(ranked.size());
  kernels::for_each_index(exec, ranked.size(), [&](std::size_t i) {
    rescored[i] = {ranked[i].ref, dense::cosine(q, vectors[i])};
  });
  std::sort(rescored.begin(), rescored.end(), [&](const RankedRef& a, const RankedRef& b) {
    if (a.score != b.score) return a.score > b.score;
    return docs_.at(a.ref).chunk.chunk_id < docs_.at(b.ref).chunk.chunk_id;
  });

  const auto terms = positive_terms(query);
  const std::set<std::string> term_set(terms.begin(), terms.end());
  ResultPage result;
  result.total_hits = rescored.size();
  result.page = 1;
  result.page_size = k;
  for (std::size_t i = 0; i < rescored.size() && i < k; ++i) {
    const auto& doc = docs_.at(rescored[i].ref);
    result.hits.push_back({doc.chunk.chunk_id, rescored[i].score,
                           highlight(doc.chunk.text, term_set, highlight_options),
                           doc.chunk.source_path});
  }
  return result;
}

void SparseIndex::persist(const fs::path& dir) const {
  fs::create_directories(dir);
  io::BinaryWriter terms;
  io::BinaryWriter posts;
  for (const auto& [term, list] : postings_) {
    terms.u32(static_cast<std::uint32_t>(term.size()));
    terms.bytes(term);
    terms.u64(posts.size());
    posts.u32(static_cast<std::uint32_t>(list.size()));
    for (const auto& p : list) {
      posts.u32(p.ref);
      posts.u32(static_cast<std::uint32_t>(p.positions.size()));
      for (auto pos : p.positions) posts.u32(pos);
    }
  }
  std::string stored;
  for (const auto& [ref, doc] : docs_) {
    nlohmann::json line = doc.chunk;
    line["ref"] = ref;
    line["ext"] = doc.ext;
    line["length"] = doc.length;
    stored += line.dump();
    stored += '\n';
  }
  nlohmann::json meta = {{"doc_count", docs_.size()},
                         {"total_len", total_length_},
                         {"format_version", 1},
                         {"next_ref", next_ref_}};
  io::write_file_synced(dir / "terms.dat", terms.data());
  io::write_file_synced(dir / "postings.dat", posts.data());
  io::write_file_synced(dir / "stored.dat", stored);
  io::write_file_synced(dir / "meta.json", meta.dump(2) + "\n");
}

SparseIndex SparseIndex::load(const fs::path& dir) {
  SparseIndex index;
  const std::string meta_text = io::read_file(dir / "meta.json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStore("meta.json", 0, std::string("invalid JSON: ") + e.what());
  }
  if (meta.value("format_version", 0) != 1) {
    throw CorruptStore("meta.json", 0, "unsupported format_version");
  }

  const std::string stored = io::read_file(dir / "stored.dat");
  std::size_t line_start = 0;
  while (line_start < stored.size()) {
    std::size_t nl = stored.find('\n', line_start);
    if (nl == std::string::npos) {
      throw CorruptStore("stored.dat", line_start, "truncated record");
    }
    try {
      auto line = nlohmann::json::parse(stored.substr(line_start, nl - line_start));
      StoredChunk doc;
      doc.chunk = line.get<ingest::Chunk>();
      doc.ref = line.at("ref").get<std::uint32_t>();
      doc.ext = line.at("ext").get<std::string>();
      doc.length = line.at("length").get<std::uint32_t>();
      if (index.docs_.count(doc.ref) || index.ref_by_id_.count(doc.chunk.chunk_id)) {
        throw CorruptStore("stored.dat", line_start, "duplicate record");
      }
      index.total_length_ += doc.length;
      index.ref_by_id_.emplace(doc.chunk.chunk_id, doc.ref);
      index.next_ref_ = std::max(index.next_ref_, doc.ref + 1);
      index.docs_.emplace(doc.ref, std::move(doc));
    } catch (const nlohmann::json::exception&) {
      throw CorruptStore("stored.dat", line_start, "invalid record");
    }
    line_start = nl + 1;
  }
  if (meta.value("doc_count", std::size_t{0}) != index.docs_.size() ||
      meta.value("total_len", std::uint64_t{0}) != index.total_length_) {
    throw CorruptStore("meta.json", 0, "statistics disagree with stored.dat");
  }
  index.next_ref_ = std::max(index.next_ref_, meta.value("next_ref", 0u));

  const std::string terms_data = io::read_file(dir / "terms.dat");
  const std::string posts_data = io::read_file(dir / "postings.dat");
  io::BinaryReader terms("terms.dat", terms_data);
  std::string previous;
  bool first = true;
  while (!terms.at_end()) {
    const auto len = terms.u32();
    std::string term(terms.bytes(len));
    if (!first && term <= previous) terms.fail("term dictionary is not sorted");
    const auto offset = terms.u64();
    if (offset >= posts_data.size()) terms.fail("postings offset out of range");
    io::BinaryReader posts("postings.dat",
                           std::string_view(posts_data).substr(offset));
    const auto count = posts.u32();
    PostingList list;
    list.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      Posting p;
      p.ref = posts.u32();
      const auto tf = posts.u32();
      if (tf == 0 || !index.docs_.count(p.ref) || (!list.empty() && p.ref <= list.back().ref)) {
        throw CorruptStore("postings.dat", offset + posts.offset(), "invalid posting");
      }
      p.positions.resize(tf);
      for (auto& pos : p.positions) pos = posts.u32();
      list.push_back(std::move(p));
    }
    index.postings_.emplace(term, std::move(list));
    previous = std::move(term);
    first = false;
  }
  return index;
}

}  // namespace docintel::sparse
