#include "docintel/service/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <vector>

#include "docintel/error.hpp"
#include "docintel/io.hpp"

namespace docintel::service {
namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kInvalidValue, key + ": " + what, {{"key", key}});
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) invalid(key, "expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) invalid(key, "expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  invalid(key, "expected true or false, got '" + v + "'");
}

std::string real_str(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"store", "dir", [](Config& c, const std::string& v) {
         if (v.empty()) invalid("store.dir", "must not be empty");
         c.store_dir = v;
       },
       [](const Config& c) { return c.store_dir.string(); }},
      {"store", "kind", [](Config& c, const std::string& v) {
         auto k = store::parse_store_kind(v);
         if (!k) invalid("store.kind", "expected sparse, dense or dual");
         c.store_kind = *k;
       },
       [](const Config& c) { return std::string(store::store_kind_name(c.store_kind)); }},

      {"chunking", "chunk_size",
       [](Config& c, const std::string& v) { c.chunking.chunk_size = parse_int<std::size_t>("chunking.chunk_size", v); },
       [](const Config& c) { return std::to_string(c.chunking.chunk_size); }},
      {"chunking", "overlap",
       [](Config& c, const std::string& v) { c.chunking.overlap = parse_int<std::size_t>("chunking.overlap", v); },
       [](const Config& c) { return std::to_string(c.chunking.overlap); }},
      {"chunking", "snap_to_word_boundary",
       [](Config& c, const std::string& v) {
         c.chunking.snap_to_word_boundary = parse_bool("chunking.snap_to_word_boundary", v);
       },
       [](const Config& c) { return std::string(c.chunking.snap_to_word_boundary ? "true" : "false"); }},

      {"bm25", "k1", [](Config& c, const std::string& v) { c.bm25.k1 = parse_real("bm25.k1", v); },
       [](const Config& c) { return real_str(c.bm25.k1); }},
      {"bm25", "b", [](Config& c, const std::string& v) { c.bm25.b = parse_real("bm25.b", v); },
       [](const Config& c) { return real_str(c.bm25.b); }},

      {"hnsw", "m", [](Config& c, const std::string& v) { c.hnsw.m = parse_int<std::uint32_t>("hnsw.m", v); },
       [](const Config& c) { return std::to_string(c.hnsw.m); }},
      {"hnsw", "ef_construction",
       [](Config& c, const std::string& v) { c.hnsw.ef_construction = parse_int<std::uint32_t>("hnsw.ef_construction", v); },
       [](const Config& c) { return std::to_string(c.hnsw.ef_construction); }},
      {"hnsw", "ef_search",
       [](Config& c, const std::string& v) { c.hnsw.ef_search = parse_int<std::uint32_t>("hnsw.ef_search", v); },
       [](const Config& c) { return std::to_string(c.hnsw.ef_search); }},
      {"hnsw", "rng_seed",
       [](Config& c, const std::string& v) { c.hnsw.rng_seed = parse_int<std::uint64_t>("hnsw.rng_seed", v); },
       [](const Config& c) { return std::to_string(c.hnsw.rng_seed); }},

      {"fusion", "method", [](Config&, const std::string& v) {
         if (v != "rrf") invalid("fusion.method", "only rrf is supported");
       },
       [](const Config&) { return std::string("rrf"); }},
      {"fusion", "rrf_k",
       [](Config& c, const std::string& v) { c.fusion.rrf_k = parse_int<std::size_t>("fusion.rrf_k", v); },
       [](const Config& c) { return std::to_string(c.fusion.rrf_k); }},
      {"fusion", "k_dense",
       [](Config& c, const std::string& v) { c.fusion.k_dense = parse_int<std::size_t>("fusion.k_dense", v); },
       [](const Config& c) { return std::to_string(c.fusion.k_dense); }},
      {"fusion", "k_sparse",
       [](Config& c, const std::string& v) { c.fusion.k_sparse = parse_int<std::size_t>("fusion.k_sparse", v); },
       [](const Config& c) { return std::to_string(c.fusion.k_sparse); }},

      {"llm", "backend", [](Config& c, const std::string& v) {
         auto k = llm::parse_backend_kind(v);
         if (!k) invalid("llm.backend", "expected stub or http");
         c.llm.backend = *k;
       },
       [](const Config& c) { return std::string(llm::backend_kind_name(c.llm.backend)); }},
      {"llm", "endpoint", [](Config& c, const std::string& v) { c.llm.endpoint = v; },
       [](const Config& c) { return c.llm.endpoint; }},
      {"llm", "model", [](Config& c, const std::string& v) { c.llm.model = v; },
       [](const Config& c) { return c.llm.model; }},
      {"llm", "api_key_env", [](Config& c, const std::string& v) { c.llm.api_key_env = v; },
       [](const Config& c) { return c.llm.api_key_env; }},
      {"llm", "timeout_ms",
       [](Config& c, const std::string& v) { c.llm.timeout_ms = parse_int<std::int64_t>("llm.timeout_ms", v); },
       [](const Config& c) { return std::to_string(c.llm.timeout_ms); }},

      {"embedder", "kind", [](Config& c, const std::string& v) {
         if (v == "hash") {
           c.embedder.kind = EmbedderKind::kHash;
         } else if (v == "remote") {
           c.embedder.kind = EmbedderKind::kRemote;
         } else {
           invalid("embedder.kind", "expected hash or remote");
         }
       },
       [](const Config& c) { return std::string(c.embedder.kind == EmbedderKind::kHash ? "hash" : "remote"); }},
      {"embedder", "dim",
       [](Config& c, const std::string& v) { c.embedder.dim = parse_int<std::size_t>("embedder.dim", v); },
       [](const Config& c) { return std::to_string(c.embedder.dim); }},
      {"embedder", "endpoint", [](Config& c, const std::string& v) { c.embedder.endpoint = v; },
       [](const Config& c) { return c.embedder.endpoint; }},
      {"embedder", "model", [](Config& c, const std::string& v) { c.embedder.model = v; },
       [](const Config& c) { return c.embedder.model; }},
      {"embedder", "api_key_env", [](Config& c, const std::string& v) { c.embedder.api_key_env = v; },
       [](const Config& c) { return c.embedder.api_key_env; }},
      {"embedder", "batch_limit",
       [](Config& c, const std::string& v) { c.embedder.batch_limit = parse_int<std::size_t>("embedder.batch_limit", v); },
       [](const Config& c) { return std::to_string(c.embedder.batch_limit); }},

      {"server", "bind_addr", [](Config& c, const std::string& v) { c.server.bind_addr = v; },
       [](const Config& c) { return c.server.bind_addr; }},
      {"server", "port", [](Config& c, const std::string& v) { c.server.port = parse_int<int>("server.port", v); },
       [](const Config& c) { return std::to_string(c.server.port); }},
      {"server", "max_in_flight",
       [](Config& c, const std::string& v) { c.server.max_in_flight = parse_int<std::size_t>("server.max_in_flight", v); },
       [](const Config& c) { return std::to_string(c.server.max_in_flight); }},
      {"server", "allow_remote_bind",
       [](Config& c, const std::string& v) { c.server.allow_remote_bind = parse_bool("server.allow_remote_bind", v); },
       [](const Config& c) { return std::string(c.server.allow_remote_bind ? "true" : "false"); }},
  };
  return table;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kConfigParseError, "config line " + std::to_string(line) + ": " + what,
              {{"line", line}});
}

template <class Fn>
void rethrow_as_invalid(const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidValue && e.detail().contains("key")) throw;
    throw Error(ErrorCode::kInvalidValue, key + ": " + e.what(), {{"key", key}});
  }
}

}  // namespace

bool is_loopback(std::string_view addr) {
  return addr == "127.0.0.1" || addr == "localhost" || addr == "::1" ||
         addr.substr(0, 4) == "127.";
}

void Config::validate() const {
  rethrow_as_invalid("chunking", [&] { chunking.validate(); });
  rethrow_as_invalid("bm25", [&] { bm25.validate(); });
  rethrow_as_invalid("hnsw", [&] { hnsw.validate(); });
  rethrow_as_invalid("fusion", [&] { fusion.validate(); });
  if (llm.backend == llm::BackendKind::kHttp && llm.endpoint.empty()) {
    invalid("llm.endpoint", "llm.backend = http requires an endpoint");
  }
  if (llm.timeout_ms < 1) invalid("llm.timeout_ms", "must be >= 1");
  if (embedder.kind == EmbedderKind::kRemote && embedder.endpoint.empty()) {
    invalid("embedder.endpoint", "embedder.kind = remote requires an endpoint");
  }
  if (embedder.kind == EmbedderKind::kRemote && embedder.model.empty()) {
    invalid("embedder.model", "embedder.kind = remote requires a model");
  }
  if (embedder.dim < 8) invalid("embedder.dim", "must be >= 8");
  if (embedder.batch_limit < 1 || embedder.batch_limit > 128) {
    invalid("embedder.batch_limit", "must be in [1, 128]");
  }
  if (server.port < 0 || server.port > 65535) invalid("server.port", "must be in [0, 65535]");
  if (server.max_in_flight < 1) invalid("server.max_in_flight", "must be >= 1");
  if (!is_loopback(server.bind_addr) && !server.allow_remote_bind) {
    invalid("server.bind_addr",
            "non-loopback address needs server.allow_remote_bind = true");
  }
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : fields()) j[f.section][f.key] = f.get(*this);
  // Typed values for numbers and booleans.
  j["chunking"] = {{"chunk_size", chunking.chunk_size},
                   {"overlap", chunking.overlap},
                   {"snap_to_word_boundary", chunking.snap_to_word_boundary}};
  j["bm25"] = {{"k1", bm25.k1}, {"b", bm25.b}};
  j["hnsw"] = {{"m", hnsw.m},
               {"ef_construction", hnsw.ef_construction},
               {"ef_search", hnsw.ef_search},
               {"rng_seed", hnsw.rng_seed}};
  j["fusion"] = {{"method", "rrf"},
                 {"rrf_k", fusion.rrf_k},
                 {"k_dense", fusion.k_dense},
                 {"k_sparse", fusion.k_sparse}};
  j["llm"]["timeout_ms"] = llm.timeout_ms;
  j["embedder"]["dim"] = embedder.dim;
  j["embedder"]["batch_limit"] = embedder.batch_limit;
  j["server"]["port"] = server.port;
  j["server"]["max_in_flight"] = server.max_in_flight;
  j["server"]["allow_remote_bind"] = server.allow_remote_bind;
  return j;
}

Config parse_config(std::string_view text) {
  Config config;
  std::string section;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line[0] == '[') {
      if (line.back() != ']') parse_fail(line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      bool known = false;
      for (const auto& f : fields()) known = known || f.section == section;
      if (!known) {
        throw Error(ErrorCode::kUnknownKey, "unknown config section [" + section + "]",
                    {{"key", section}, {"line", line_no}});
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) parse_fail(line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) parse_fail(line_no, "empty key");
    if (section.empty()) parse_fail(line_no, "key outside of a [section]");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    const std::string full = section + "." + key;
    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (f.section == section && f.key == key) field = &f;
    }
    if (!field) {
      throw Error(ErrorCode::kUnknownKey, "unknown config key " + full,
                  {{"key", full}, {"line", line_no}});
    }
    if (!seen.insert(full).second) parse_fail(line_no, "duplicate key " + full);
    field->set(config, value);
  }
  config.validate();
  return config;
}

Config load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path));
}

std::string serialize_config(const Config& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    std::string value = f.get(config);
    if (value.empty() || value.front() == ' ' || value.back() == ' ' ||
        (value.front() == '"' && value.back() == '"')) {
      value = "\"" + value + "\"";
    }
    out += f.key + " = " + value + "\n";
  }
  return out;
}

}  // namespace docintel::service
