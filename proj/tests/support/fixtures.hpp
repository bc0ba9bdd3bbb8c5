#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "docintel/ingest.hpp"
#include "docintel/io.hpp"

namespace docintel::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "docintel-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Five small files; "okapi" appears in animals.txt only.
inline void write_five_file_fixture(const std::filesystem::path& dir) {
  write_text(dir / "animals.txt",
             "The okapi lives in the rainforest of central Africa.\n\n"
             "It is related to the giraffe.");
  write_text(dir / "budget.md",
             "# Budget\n\nThe defense budget grew by four percent this year.\n"
             "Port authorities requested more funding.");
  write_text(dir / "geology.html",
             "<html><head><title>Rocks</title><style>p{}</style></head><body>"
             "<h1>Volcanoes</h1><p>Magma rises through the crust.</p>"
             "<p>Basalt forms when lava cools.</p></body></html>");
  write_text(dir / "notes/meeting.txt",
             "Meeting notes. The committee reviewed the harbor project and approved the "
             "schedule for the bridge repairs.");
  write_text(dir / "notes/recipes.markdown",
             "Bread needs flour, water, salt and yeast. Knead the dough for ten minutes.");
}

inline ingest::Chunk make_chunk(const std::string& source, std::size_t seq,
                                const std::string& text) {
  ingest::Chunk c;
  c.source_path = source;
  c.start_offset = seq * 1000;
  c.end_offset = c.start_offset + text.size();
  c.chunk_id = ingest::make_chunk_id(source, c.start_offset, c.end_offset);
  c.text = text;
  c.seq = seq;
  c.doc_sha256 = "0";
  return c;
}

// Random text over a small vocabulary.
inline std::string random_text(std::mt19937_64& rng, std::size_t words,
                               const std::vector<std::string>& vocab) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += vocab[pick(rng)];
  }
  return out;
}

inline const nlohmann::json& frozen_oracles() {
  static const nlohmann::json j =
      nlohmann::json::parse(io::read_file(DOCINTEL_ORACLE_DIR "/frozen.json"));
  return j;
}

}  // namespace docintel::testing
