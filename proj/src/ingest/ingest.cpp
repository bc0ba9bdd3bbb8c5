#include "docintel/ingest.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <array>
#include <cctype>

#include "docintel/error.hpp"
#include "docintel/io.hpp"
#include "docintel/text/hash.hpp"
#include "docintel/text/utf8.hpp"

namespace docintel::ingest {
namespace fs = std::filesystem;

std::string_view format_name(DocumentFormat format) {
  switch (format) {
    case DocumentFormat::kPlainText: return "plain_text";
    case DocumentFormat::kMarkdown: return "markdown";
    case DocumentFormat::kHtml: return "html";
  }
  return "plain_text";
}

std::optional<DocumentFormat> format_for_extension(std::string_view extension) {
  std::string ext(extension);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".txt") return DocumentFormat::kPlainText;
  if (ext == ".md" || ext == ".markdown") return DocumentFormat::kMarkdown;
  if (ext == ".html" || ext == ".htm") return DocumentFormat::kHtml;
  return std::nullopt;
}

Document load_document(const fs::path& path) {
  auto format = format_for_extension(path.extension().string());
  if (!format) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "unsupported document format: " + path.string(),
                nlohmann::json{{"path", path.string()}});
  }
  std::string bytes = io::read_file(path);

  Document doc;
  doc.source_path = fs::absolute(path).lexically_normal().string();
  doc.format = *format;
  doc.sha256 = text::sha256_hex(bytes);
  struct stat st {};
  if (::stat(path.c_str(), &st) == 0) doc.mtime = st.st_mtime;

  std::string decoded = text::sanitize_utf8(bytes);
  doc.raw_text = *format == DocumentFormat::kHtml ? html_to_text(decoded)
                                                  : std::move(decoded);
  return doc;
}

namespace {

bool iequals_prefix(std::string_view s, std::size_t at, std::string_view prefix) {
  if (s.size() - at < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[at + i])) != prefix[i]) {
      return false;
    }
  }
  return true;
}

bool is_block_tag(std::string_view name) {
  static constexpr std::array<std::string_view, 36> kBlock = {
      "address", "article", "aside", "blockquote", "body", "br", "dd",
      "div", "dl", "dt", "figcaption", "figure", "footer", "form", "h1",
      "h2", "h3", "h4", "h5", "h6", "head", "header", "hr", "html", "li",
      "main", "nav", "ol", "p", "pre", "section", "table", "td", "th",
      "title", "tr"};
  if (name == "ul" || name == "tbody" || name == "thead" || name == "tfoot") {
    return true;
  }
  return std::find(kBlock.begin(), kBlock.end(), name) != kBlock.end();
}

// Decodes the entity starting at html[i] == '&'. Returns the replacement and
// advances i past it; unknown entities are kept literally.
std::string decode_entity(std::string_view html, std::size_t& i) {
  std::size_t semi = html.find(';', i);
  if (semi == std::string_view::npos || semi - i > 10) {
    ++i;
    return "&";
  }
  std::string_view name = html.substr(i + 1, semi - i - 1);
  std::string out;
  if (name == "amp") out = "&";
  else if (name == "lt") out = "<";
  else if (name == "gt") out = ">";
  else if (name == "quot") out = "\"";
  else if (name == "apos") out = "'";
  else if (name == "nbsp") out = " ";
  else if (name.size() > 1 && name[0] == '#') {
    char32_t cp = 0;
    bool ok = true;
    bool hex = name[1] == 'x' || name[1] == 'X';
    for (std::size_t k = hex ? 2 : 1; k < name.size() && ok; ++k) {
      char c = name[k];
      int digit = -1;
      if (c >= '0' && c <= '9') digit = c - '0';
      else if (hex && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
      else if (hex && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
      if (digit < 0 || cp > 0x10FFFF) ok = false;
      else cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(digit);
    }
    if (ok && name.size() > (hex ? 2u : 1u)) {
      out = text::encode_utf8(std::u32string(1, cp));
    }
  }
  if (out.empty()) {
    ++i;
    return "&";
  }
  i = semi + 1;
  return out;
}

}  // namespace

std::string html_to_text(std::string_view html) {
  std::string out;
  std::string segment;
  bool pending_break = false;

  auto flush = [&] {
    if (segment.empty()) return;
    bool blank = std::all_of(segment.begin(), segment.end(), [](unsigned char c) {
      return std::isspace(c) != 0;
    });
    if (pending_break) {
      if (blank) {
        segment.clear();
        return;
      }
      if (!out.empty()) out.push_back('\n');
      pending_break = false;
    }
    out += segment;
    segment.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    char c = html[i];
    if (c == '&') {
      segment += decode_entity(html, i);
      continue;
    }
    if (c != '<') {
      segment.push_back(c);
      ++i;
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      std::size_t end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    std::size_t j = i + 1;
    bool closing = j < html.size() && html[j] == '/';
    if (closing) ++j;
    bool declaration = j < html.size() && (html[j] == '!' || html[j] == '?');
    if (!declaration &&
        (j >= html.size() || !std::isalpha(static_cast<unsigned char>(html[j])))) {
      segment.push_back(c);
      ++i;
      continue;
    }
    std::string name;
    while (j < html.size() && std::isalnum(static_cast<unsigned char>(html[j]))) {
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(html[j]))));
      ++j;
    }
    char quote = 0;
    while (j < html.size()) {
      char d = html[j];
      if (quote) {
        if (d == quote) quote = 0;
      } else if (d == '"' || d == '\'') {
        quote = d;
      } else if (d == '>') {
        break;
      }
      ++j;
    }
    i = j < html.size() ? j + 1 : html.size();

    if (!closing && (name == "script" || name == "style")) {
      std::string close = "</" + name;
      std::size_t k = i;
      while (k < html.size() && !iequals_prefix(html, k, close)) ++k;
      std::size_t gt = html.find('>', k);
      i = gt == std::string_view::npos ? html.size() : gt + 1;
      continue;
    }
    if (is_block_tag(name)) {
      flush();
      pending_break = true;
    }
  }
  flush();
  return out;
}

std::string normalize_text(std::string_view raw) {
  std::string lf;
  lf.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      lf.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      lf.push_back(raw[i]);
    }
  }

  auto is_blank = [](char c) {
    return c == ' ' || c == '\t' || c == '\v' || c == '\f';
  };

  std::string out;
  out.reserve(lf.size());
  std::size_t newline_run = 0;
  std::size_t line_start = 0;
  while (line_start <= lf.size()) {
    std::size_t nl = lf.find('\n', line_start);
    std::size_t line_end = nl == std::string::npos ? lf.size() : nl;
    std::size_t trimmed_end = line_end;
    while (trimmed_end > line_start && is_blank(lf[trimmed_end - 1])) --trimmed_end;
    if (trimmed_end > line_start) {
      out.append(lf, line_start, trimmed_end - line_start);
      newline_run = 0;
    }
    if (nl == std::string::npos) break;
    if (newline_run < 2) out.push_back('\n');
    ++newline_run;
    line_start = nl + 1;
  }

  auto is_ws = [&](char c) { return c == '\n' || is_blank(c); };
  std::size_t b = 0;
  while (b < out.size() && is_ws(out[b])) ++b;
  std::size_t e = out.size();
  while (e > b && is_ws(out[e - 1])) --e;
  return out.substr(b, e - b);
}

void ChunkingParams::validate() const {
  if (chunk_size < 1) {
    throw Error(ErrorCode::kInvalidValue, "chunk_size must be >= 1");
  }
  if (overlap >= chunk_size) {
    throw Error(ErrorCode::kInvalidValue, "overlap must be < chunk_size");
  }
}

std::vector<TextSpan> chunk_text(std::string_view text,
                                 const ChunkingParams& params) {
  params.validate();
  const std::u32string cps = text::decode_utf8(text);
  const std::size_t n = cps.size();
  std::vector<TextSpan> spans;
  std::size_t start = 0;
  while (start < n) {
    const std::size_t nominal = start + params.chunk_size;
    if (nominal >= n) {
      spans.push_back({start, n, {}});
      break;
    }
    std::size_t end = nominal;
    if (params.snap_to_word_boundary && !text::is_space(cps[nominal])) {
      std::size_t p = nominal - 1;
      while (p > start && !text::is_space(cps[p])) --p;
      if (p > start) end = p;
    }
    spans.push_back({start, end, {}});
    start = end > start + params.overlap ? end - params.overlap : end;
  }
  for (auto& span : spans) {
    span.text = text::encode_utf8(
        std::u32string_view(cps).substr(span.start, span.end - span.start));
  }
  return spans;
}

std::string make_chunk_id(std::string_view source_path, std::size_t start,
                          std::size_t end) {
  std::string key(source_path);
  key += ':';
  key += std::to_string(start);
  key += ':';
  key += std::to_string(end);
  return text::sha256_hex(key);
}

std::vector<Chunk> chunk_document(const Document& doc,
                                  const ChunkingParams& params) {
  std::vector<Chunk> chunks;
  const std::string normalized = normalize_text(doc.raw_text);
  std::size_t seq = 0;
  for (auto& span : chunk_text(normalized, params)) {
    Chunk chunk;
    chunk.chunk_id = make_chunk_id(doc.source_path, span.start, span.end);
    chunk.source_path = doc.source_path;
    chunk.start_offset = span.start;
    chunk.end_offset = span.end;
    chunk.text = std::move(span.text);
    chunk.seq = seq++;
    chunk.doc_sha256 = doc.sha256;
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

void to_json(nlohmann::json& j, const Chunk& chunk) {
  j = nlohmann::json{{"chunk_id", chunk.chunk_id},
                     {"source_path", chunk.source_path},
                     {"start_offset", chunk.start_offset},
                     {"end_offset", chunk.end_offset},
                     {"text", chunk.text},
                     {"seq", chunk.seq},
                     {"doc_sha256", chunk.doc_sha256}};
}

void from_json(const nlohmann::json& j, Chunk& chunk) {
  j.at("chunk_id").get_to(chunk.chunk_id);
  j.at("source_path").get_to(chunk.source_path);
  j.at("start_offset").get_to(chunk.start_offset);
  j.at("end_offset").get_to(chunk.end_offset);
  j.at("text").get_to(chunk.text);
  j.at("seq").get_to(chunk.seq);
  j.at("doc_sha256").get_to(chunk.doc_sha256);
}

nlohmann::json IngestReport::to_json() const {
  nlohmann::json errs = nlohmann::json::array();
  for (const auto& [path, message] : errors) {
    errs.push_back({{"path", path}, {"message", message}});
  }
  return {{"files_seen", files_seen},
          {"files_ingested", files_ingested},
          {"files_skipped_unchanged", files_skipped_unchanged},
          {"chunks_added", chunks_added},
          {"errors", errs}};
}

IngestReport ingest_folder(const fs::path& root, ChunkSink& sink,
                           const ChunkingParams& params) {
  params.validate();
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kIoError, "not a directory: " + root.string(),
                nlohmann::json{{"path", root.string()}});
  }

  IngestReport report;
  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(
      root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw Error(ErrorCode::kIoError, root.string() + ": " + ec.message());
  for (auto end = fs::recursive_directory_iterator(); it != end;) {
    std::error_code file_ec;
    if (it->is_regular_file(file_ec) &&
        format_for_extension(it->path().extension().string())) {
      files.push_back(it->path());
    }
    it.increment(ec);
    if (ec) {
      report.errors.emplace_back(root.string(), ec.message());
      break;
    }
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.generic_string() < b.generic_string();
  });

  for (const auto& path : files) {
    ++report.files_seen;
    Document doc;
    try {
      doc = load_document(path);
    } catch (const Error& e) {
      report.errors.emplace_back(path.string(), e.what());
      continue;
    }
    auto known = sink.known_sha256(doc.source_path);
    if (known && *known == doc.sha256) {
      ++report.files_skipped_unchanged;
      continue;
    }
    std::vector<Chunk> chunks = chunk_document(doc, params);
    try {
      sink.delete_by_source(doc.source_path);
      for (const auto& chunk : chunks) sink.add_chunk(chunk);
    } catch (const Error& e) {
      try {
        sink.delete_by_source(doc.source_path);
      } catch (const Error&) {
      }
      report.errors.emplace_back(doc.source_path, e.what());
      continue;
    }
    sink.record_file({doc.source_path, doc.sha256, doc.mtime, chunks.size()});
    ++report.files_ingested;
    report.chunks_added += chunks.size();
  }
  sink.commit();
  return report;
}

}  // namespace docintel::ingest
