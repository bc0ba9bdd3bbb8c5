#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace docintel::io {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, fsyncs it, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

// Plain write + fsync; for files inside a not-yet-published directory.
void write_file_synced(const std::filesystem::path& path, std::string_view data);

void sync_directory(const std::filesystem::path& dir);

// Little-endian binary encoder.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::string_view v) { buffer_.append(v); }

  std::size_t size() const { return buffer_.size(); }
  const std::string& data() const { return buffer_; }

 private:
  std::string buffer_;
};

// Little-endian decoder; every read past the end raises CorruptStore with
// the offending byte offset.
class BinaryReader {
 public:
  BinaryReader(std::string file_label, std::string_view data)
      : label_(std::move(file_label)), data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64();
  float f32();
  double f64();
  std::string_view bytes(std::size_t n);

  std::uint64_t offset() const { return offset_; }
  bool at_end() const { return offset_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - offset_; }
  [[noreturn]] void fail(const std::string& what) const;

 private:
  void need(std::size_t n) const;

  std::string label_;
  std::string_view data_;
  std::uint64_t offset_ = 0;
};

}  // namespace docintel::io
