#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace lshpr::io {

/// Little-endian byte sink used by every binary writer.
class ByteWriter {
 public:
  void put_magic(std::string_view magic);
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f32(float v);
  void put_f32s(std::span<const float> values);

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

/// Little-endian cursor over a file image. Every read is bounds-checked and
/// reports `context` on failure.
class ByteReader {
 public:
  ByteReader(std::string bytes, std::string context);

  void expect_magic(std::string_view magic);
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  void get_f32s(std::span<float> out);

  std::size_t remaining() const { return bytes_.size() - pos_; }
  /// Fails unless the whole image has been consumed.
  void expect_end() const;

 private:
  void need(std::size_t count) const;

  std::string bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so a reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace lshpr::io
