#include "docintel/dense/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "docintel/error.hpp"
#include "docintel/kernels.hpp"

namespace docintel::dense {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr int kMaxLevel = 32;

std::vector<float> normalized_query(std::span<const float> query) {
  std::vector<float> q(query.begin(), query.end());
  double sq = 0.0;
  for (float x : q) sq += static_cast<double>(x) * x;
  if (sq == 0.0) throw Error(ErrorCode::kZeroVector, "zero query vector");
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : q) x = static_cast<float>(x * inv);
  return q;
}

}  // namespace

double HnswParams::level_mult() const {
  return 1.0 / std::log(static_cast<double>(m));
}

void HnswParams::validate() const {
  if (m < 2) throw Error(ErrorCode::kInvalidValue, "hnsw M must be >= 2");
  if (ef_construction < m) {
    throw Error(ErrorCode::kInvalidValue, "hnsw ef_construction must be >= M");
  }
  if (ef_search < 1) throw Error(ErrorCode::kInvalidValue, "hnsw ef_search must be >= 1");
}

HnswIndex::HnswIndex(std::size_t dimension, HnswParams params)
    : dim_(dimension), params_(params) {
  if (dimension == 0) throw Error(ErrorCode::kInvalidArgument, "dimension must be > 0");
  params_.validate();
}

bool HnswIndex::contains(std::uint64_t id) const {
  auto it = by_id_.find(id);
  return it != by_id_.end() && !nodes_[it->second].deleted;
}

std::uint32_t HnswIndex::index_of(std::uint64_t id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown vector id " + std::to_string(id));
  }
  return it->second;
}

double HnswIndex::similarity(const float* a, std::uint32_t node) const {
  const float* b = data(node);
  double acc = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

int HnswIndex::draw_level() {
  const std::uint64_t bits = splitmix64(params_.rng_seed ^ splitmix64(++level_draws_));
  const double u = static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  const double level = std::floor(-std::log(u) * params_.level_mult());
  return static_cast<int>(std::min<double>(level, kMaxLevel));
}

std::uint32_t HnswIndex::greedy_closest(const float* q, std::uint32_t start,
                                        int layer) const {
  std::uint32_t current = start;
  double best = similarity(q, current);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::uint32_t n : nodes_[current].links[static_cast<std::size_t>(layer)]) {
      const double s = similarity(q, n);
      if (s > best || (s == best && n < current)) {
        best = s;
        current = n;
        changed = true;
      }
    }
  }
  return current;
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer(const float* q,
                                                          std::uint32_t entry,
                                                          std::size_t ef,
                                                          int layer) const {
  // (sim, node) ordering: higher sim is better, lower node index breaks ties.
  auto better = [](const Candidate& a, const Candidate& b) {
    return a.sim != b.sim ? a.sim > b.sim : a.node < b.node;
  };
  auto worse_on_top = [&](const Candidate& a, const Candidate& b) { return better(a, b); };
  auto best_on_top = [&](const Candidate& a, const Candidate& b) { return better(b, a); };

  std::vector<char> visited(nodes_.size(), 0);
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(best_on_top)> frontier(
      best_on_top);
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse_on_top)> results(
      worse_on_top);

  const Candidate start{similarity(q, entry), entry};
  visited[entry] = 1;
  frontier.push(start);
  results.push(start);
  while (!frontier.empty()) {
    const Candidate c = frontier.top();
    if (results.size() >= ef && better(results.top(), c)) break;
    frontier.pop();
    for (std::uint32_t n : nodes_[c.node].links[static_cast<std::size_t>(layer)]) {
      if (visited[n]) continue;
      visited[n] = 1;
      const Candidate cand{similarity(q, n), n};
      if (results.size() < ef || better(cand, results.top())) {
        frontier.push(cand);
        results.push(cand);
        if (results.size() > ef) results.pop();
      }
    }
  }
  std::vector<Candidate> out;
  out.reserve(results.size());
  while (!results.empty()) {
    out.push_back(results.top());
    results.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void HnswIndex::prune(std::uint32_t node, int layer) {
  auto& links = nodes_[node].links[static_cast<std::size_t>(layer)];
  const std::size_t limit = cap(layer);
  if (links.size() <= limit) return;
  std::vector<Candidate> scored;
  scored.reserve(links.size());
  for (std::uint32_t n : links) scored.push_back({similarity(data(node), n), n});
  std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
    return a.sim != b.sim ? a.sim > b.sim : a.node < b.node;
  });
  scored.resize(limit);
  links.clear();
  for (const auto& c : scored) links.push_back(c.node);
}

void HnswIndex::connect(std::uint32_t node, int layer, std::vector<Candidate> candidates) {
  auto& own = nodes_[node].links[static_cast<std::size_t>(layer)];
  own.clear();
  for (const auto& c : candidates) {
    if (c.node == node) continue;
    if (own.size() == params_.m) break;
    own.push_back(c.node);
  }
  const auto chosen = own;
  for (std::uint32_t n : chosen) {
    nodes_[n].links[static_cast<std::size_t>(layer)].push_back(node);
    prune(n, layer);
  }
}

void HnswIndex::insert(std::uint64_t id, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector dimension " + std::to_string(vector.size()) + " != index dimension " +
                    std::to_string(dim_));
  }
  if (by_id_.count(id)) {
    throw Error(ErrorCode::kDuplicateId, "duplicate vector id " + std::to_string(id),
                {{"id", id}});
  }
  double sq = 0.0;
  for (float x : vector) sq += static_cast<double>(x) * x;
  if (sq == 0.0) throw Error(ErrorCode::kZeroVector, "zero vectors cannot be indexed");
  const double inv = 1.0 / std::sqrt(sq);

  const auto node = static_cast<std::uint32_t>(nodes_.size());
  const std::size_t base = vectors_.size();
  vectors_.resize(base + dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    vectors_[base + i] = static_cast<float>(vector[i] * inv);
  }
  const int level = draw_level();
  nodes_.push_back({id, level, false,
                    std::vector<std::vector<std::uint32_t>>(static_cast<std::size_t>(level) + 1)});
  by_id_.emplace(id, node);

  if (entry_ == kNone) {
    entry_ = node;
    return;
  }
  const float* q = data(node);
  std::uint32_t ep = entry_;
  const int top = nodes_[entry_].level;
  for (int layer = top; layer > level; --layer) ep = greedy_closest(q, ep, layer);
  for (int layer = std::min(level, top); layer >= 0; --layer) {
    auto found = search_layer(q, ep, params_.ef_construction, layer);
    ep = found.front().node;
    connect(node, layer, std::move(found));
  }
  if (level > top) entry_ = node;
}

std::vector<Neighbor> HnswIndex::exact_search(std::span<const float> query,
                                              std::size_t k) const {
  if (live_count() == 0) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  if (query.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "query dimension mismatch");
  }
  const std::vector<float> q = normalized_query(query);

  std::vector<double> sims(nodes_.size());
  kernels::dot_rows(kernels::Exec::kParallel, vectors_, dim_, q, sims);
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].deleted) out.push_back({nodes_[i].id, sims[i]});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<Neighbor> HnswIndex::search(std::span<const float> query, std::size_t k,
                                        std::size_t ef_search) const {
  if (live_count() == 0) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (query.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "query dimension mismatch");
  }
  if (k >= live_count()) return exact_search(query, k);

  const std::vector<float> q = normalized_query(query);

  const std::size_t ef = std::max<std::size_t>(
      ef_search == 0 ? params_.ef_search : ef_search, k);
  std::uint32_t ep = entry_;
  for (int layer = nodes_[entry_].level; layer > 0; --layer) {
    ep = greedy_closest(q.data(), ep, layer);
  }
  std::vector<Neighbor> out;
  for (const auto& c : search_layer(q.data(), ep, ef, 0)) {
    if (!nodes_[c.node].deleted) out.push_back({nodes_[c.node].id, c.sim});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

void HnswIndex::choose_entry_point() {
  entry_ = kNone;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].deleted) continue;
    if (entry_ == kNone || nodes_[i].level > nodes_[entry_].level) entry_ = i;
  }
}

bool HnswIndex::mark_deleted(std::uint64_t id) {
  auto it = by_id_.find(id);
  if (it == by_id_.end() || nodes_[it->second].deleted) return false;
  nodes_[it->second].deleted = true;
  ++tombstones_;
  if (it->second == entry_) choose_entry_point();
  if (tombstones_ * 5 > nodes_.size()) rebuild();
  return true;
}

void HnswIndex::rebuild() {
  std::vector<std::pair<std::uint64_t, std::vector<float>>> live;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].deleted) {
      live.emplace_back(nodes_[i].id, std::vector<float>(data(i), data(i) + dim_));
    }
  }
  vectors_.clear();
  nodes_.clear();
  by_id_.clear();
  entry_ = kNone;
  tombstones_ = 0;
  for (auto& [id, v] : live) insert(id, v);
}

std::span<const float> HnswIndex::vector(std::uint64_t id) const {
  return {data(index_of(id)), dim_};
}

std::vector<std::uint64_t> HnswIndex::live_ids() const {
  std::vector<std::uint64_t> out;
  for (const auto& n : nodes_) {
    if (!n.deleted) out.push_back(n.id);
  }
  return out;
}

int HnswIndex::level_of(std::uint64_t id) const { return nodes_[index_of(id)].level; }

std::vector<std::uint64_t> HnswIndex::neighbors_of(std::uint64_t id, int layer) const {
  const auto& node = nodes_[index_of(id)];
  std::vector<std::uint64_t> out;
  if (layer < 0 || layer > node.level) return out;
  for (auto n : node.links[static_cast<std::size_t>(layer)]) out.push_back(nodes_[n].id);
  return out;
}

std::uint64_t HnswIndex::entry_point_id() const {
  if (entry_ == kNone) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  return nodes_[entry_].id;
}

std::vector<std::string> HnswIndex::check_invariants() const {
  std::vector<std::string> problems;
  auto report = [&](std::string msg) { problems.push_back(std::move(msg)); };
  std::size_t deleted = 0;
  int max_live_level = -1;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    const std::string tag = "node " + std::to_string(node.id);
    if (node.deleted) ++deleted;
    else max_live_level = std::max(max_live_level, node.level);
    auto it = by_id_.find(node.id);
    if (it == by_id_.end() || it->second != i) report(tag + ": id map mismatch");
    if (node.links.size() != static_cast<std::size_t>(node.level) + 1) {
      report(tag + ": wrong number of layers");
      continue;
    }
    for (int layer = 0; layer <= node.level; ++layer) {
      const auto& links = node.links[static_cast<std::size_t>(layer)];
      if (links.size() > cap(layer)) {
        report(tag + ": layer " + std::to_string(layer) + " exceeds cap");
      }
      std::vector<std::uint32_t> sorted = links;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        report(tag + ": duplicate neighbor");
      }
      for (auto n : links) {
        if (n >= nodes_.size()) report(tag + ": dangling neighbor");
        else if (n == i) report(tag + ": self loop");
        else if (nodes_[n].level < layer) report(tag + ": neighbor missing layer");
      }
    }
  }
  if (deleted != tombstones_) report("tombstone count mismatch");
  if (by_id_.size() != nodes_.size()) report("id map size mismatch");
  if (max_live_level < 0) {
    if (entry_ != kNone) report("entry point set on an index without live nodes");
  } else if (entry_ == kNone || entry_ >= nodes_.size()) {
    report("missing entry point");
  } else if (nodes_[entry_].deleted) {
    report("entry point is deleted");
  } else if (nodes_[entry_].level != max_live_level) {
    report("entry point is not on the top live layer");
  }
  return problems;
}

std::string HnswIndex::serialize_vectors() const {
  io::BinaryWriter w;
  w.bytes("DVEC");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u64(nodes_.size());
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    w.u64(nodes_[i].id);
    for (std::size_t j = 0; j < dim_; ++j) w.f32(data(i)[j]);
  }
  return w.data();
}

std::string HnswIndex::serialize_graph() const {
  io::BinaryWriter w;
  w.bytes("HNSW");
  w.u32(1);
  w.u32(params_.m);
  w.u32(params_.ef_construction);
  w.u32(params_.ef_search);
  w.u64(params_.rng_seed);
  w.f64(params_.level_mult());
  w.u64(level_draws_);
  w.u64(nodes_.size());
  w.u8(entry_ == kNone ? 0 : 1);
  w.u64(entry_ == kNone ? 0 : nodes_[entry_].id);
  for (const auto& node : nodes_) {
    w.u64(node.id);
    w.u8(node.deleted ? 1 : 0);
    w.i32(node.level);
    for (const auto& links : node.links) {
      w.u64(links.size());
      for (auto n : links) w.u64(nodes_[n].id);
    }
  }
  return w.data();
}

HnswIndex HnswIndex::deserialize(std::string_view vectors, std::string_view graph) {
  io::BinaryReader vr("vectors.dat", vectors);
  if (vr.bytes(4) != "DVEC") vr.fail("bad magic");
  if (vr.u32() != 1) vr.fail("unsupported version");
  const std::uint32_t dim = vr.u32();
  if (dim == 0) vr.fail("zero dimension");
  const std::uint64_t count = vr.u64();
  if (count > vr.remaining() / (8 + 4ULL * dim)) vr.fail("truncated: record count exceeds file size");

  io::BinaryReader gr("graph.dat", graph);
  if (gr.bytes(4) != "HNSW") gr.fail("bad magic");
  if (gr.u32() != 1) gr.fail("unsupported version");
  HnswParams params;
  params.m = gr.u32();
  params.ef_construction = gr.u32();
  params.ef_search = gr.u32();
  params.rng_seed = gr.u64();
  gr.f64();  // level_mult, derived from M
  try {
    params.validate();
  } catch (const Error& e) {
    gr.fail(e.what());
  }
  HnswIndex index(dim, params);
  index.level_draws_ = gr.u64();
  if (gr.u64() != count) gr.fail("node count differs from vectors.dat");
  const bool has_entry = gr.u8() != 0;
  const std::uint64_t entry_id = gr.u64();

  index.vectors_.resize(count * dim);
  index.nodes_.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t id = vr.u64();
    for (std::uint32_t j = 0; j < dim; ++j) index.vectors_[i * dim + j] = vr.f32();
    if (!index.by_id_.emplace(id, static_cast<std::uint32_t>(i)).second) {
      vr.fail("duplicate id");
    }
    index.nodes_[i].id = id;
  }
  if (!vr.at_end()) vr.fail("trailing bytes");

  std::vector<std::vector<std::vector<std::uint64_t>>> raw_links(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto& node = index.nodes_[i];
    if (gr.u64() != node.id) gr.fail("node order differs from vectors.dat");
    node.deleted = gr.u8() != 0;
    node.level = gr.i32();
    if (node.level < 0 || node.level > kMaxLevel) gr.fail("invalid level");
    if (node.deleted) ++index.tombstones_;
    for (int layer = 0; layer <= node.level; ++layer) {
      const std::uint64_t len = gr.u64();
      if (len > gr.remaining() / 8) gr.fail("truncated adjacency list");
      std::vector<std::uint64_t> ids(len);
      for (auto& x : ids) x = gr.u64();
      raw_links[i].push_back(std::move(ids));
    }
  }
  if (!gr.at_end()) gr.fail("trailing bytes");
  for (std::uint64_t i = 0; i < count; ++i) {
    for (const auto& ids : raw_links[i]) {
      std::vector<std::uint32_t> links;
      for (auto id : ids) {
        auto it = index.by_id_.find(id);
        if (it == index.by_id_.end()) gr.fail("adjacency references unknown id");
        links.push_back(it->second);
      }
      index.nodes_[i].links.push_back(std::move(links));
    }
  }
  if (has_entry) {
    auto it = index.by_id_.find(entry_id);
    if (it == index.by_id_.end()) gr.fail("entry point references unknown id");
    index.entry_ = it->second;
  }
  return index;
}

}  // namespace docintel::dense
