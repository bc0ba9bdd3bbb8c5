#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace docintel::ingest {

enum class DocumentFormat { kPlainText, kMarkdown, kHtml };

std::string_view format_name(DocumentFormat format);

struct Document {
  std::string source_path;
  DocumentFormat format = DocumentFormat::kPlainText;
  std::string raw_text;  // always valid UTF-8
  std::int64_t mtime = 0;
  std::string sha256;  // of the file bytes
};

// Maps a file extension (with dot, any case) to a format; nullopt when the
// extension is not one of .txt/.md/.markdown/.html/.htm.
std::optional<DocumentFormat> format_for_extension(std::string_view extension);

// Throws UnsupportedFormat or IoError.
Document load_document(const std::filesystem::path& path);

// Tag stripper: drops tags, comments, script/style bodies; block-level
// boundaries become single newlines; common entities are decoded.
std::string html_to_text(std::string_view html);

// CRLF/CR -> LF, per-line trailing whitespace removed, 3+ newlines -> 2,
// whole text trimmed. Idempotent.
std::string normalize_text(std::string_view raw);

struct ChunkingParams {
  std::size_t chunk_size = 500;
  std::size_t overlap = 50;
  bool snap_to_word_boundary = true;

  void validate() const;
  bool operator==(const ChunkingParams&) const = default;
};

// Half-open span in code points.
struct TextSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;
};

// Sliding windows over `text` (indices are code points).
std::vector<TextSpan> chunk_text(std::string_view text,
                                 const ChunkingParams& params);

struct Chunk {
  std::string chunk_id;
  std::string source_path;
  std::size_t start_offset = 0;
  std::size_t end_offset = 0;
  std::string text;
  std::size_t seq = 0;
  std::string doc_sha256;

  bool operator==(const Chunk&) const = default;
};

// sha256 of source_path + ":" + start + ":" + end.
std::string make_chunk_id(std::string_view source_path, std::size_t start,
                          std::size_t end);

std::vector<Chunk> chunk_document(const Document& doc,
                                  const ChunkingParams& params);

void to_json(nlohmann::json& j, const Chunk& chunk);
void from_json(const nlohmann::json& j, Chunk& chunk);

struct FileRecord {
  std::string source_path;
  std::string sha256;
  std::int64_t mtime = 0;
  std::size_t chunk_count = 0;

  bool operator==(const FileRecord&) const = default;
};

struct IngestReport {
  std::size_t files_seen = 0;
  std::size_t files_ingested = 0;
  std::size_t files_skipped_unchanged = 0;
  std::size_t chunks_added = 0;
  std::vector<std::pair<std::string, std::string>> errors;

  nlohmann::json to_json() const;
};

// Destination of ingested chunks. Stores implement this; the manifest lookup
// is what makes re-ingestion incremental.
class ChunkSink {
 public:
  virtual ~ChunkSink() = default;

  // sha256 recorded for source_path at the last ingest, if any.
  virtual std::optional<std::string> known_sha256(
      const std::string& source_path) const = 0;
  virtual std::size_t delete_by_source(const std::string& source_path) = 0;
  virtual void add_chunk(const Chunk& chunk) = 0;
  virtual void record_file(const FileRecord& record) = 0;
  virtual void commit() = 0;
};

// Recursive walk in lexicographic path order. Per-file failures are recorded
// in the report and never abort the walk. Commits the sink once at the end.
IngestReport ingest_folder(const std::filesystem::path& root, ChunkSink& sink,
                           const ChunkingParams& params);

}  // namespace docintel::ingest
