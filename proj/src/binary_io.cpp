#include "lshpr/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include "lshpr/error.hpp"

namespace lshpr::io {

void ByteWriter::put_magic(std::string_view magic) { buf_.append(magic); }

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::put_f32s(std::span<const float> values) {
  buf_.reserve(buf_.size() + 4 * values.size());
  for (float v : values) put_f32(v);
}

ByteReader::ByteReader(std::string bytes, std::string context)
    : bytes_(std::move(bytes)), context_(std::move(context)) {}

void ByteReader::need(std::size_t count) const {
  if (remaining() < count) {
    std::ostringstream msg;
    msg << context_ << ": truncated file (need " << count << " bytes at offset " << pos_
        << ", have " << remaining() << ")";
    throw Error(msg.str());
  }
}

void ByteReader::expect_magic(std::string_view magic) {
  need(magic.size());
  if (std::string_view(bytes_).substr(pos_, magic.size()) != magic) {
    throw Error(context_ + ": malformed header (expected magic \"" + std::string(magic) + "\")");
  }
  pos_ += magic.size();
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  }
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::get_u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  }
  pos_ += 8;
  return v;
}

void ByteReader::get_f32s(std::span<float> out) {
  need(4 * out.size());
  for (float& v : out) v = std::bit_cast<float>(get_u32());
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    std::ostringstream msg;
    msg << context_ << ": " << remaining() << " trailing bytes after payload";
    throw Error(msg.str());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read failure on " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error("write failure on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace lshpr::io
