#include "lshpr/embedding_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string_view>

#include "lshpr/binary_io.hpp"
#include "lshpr/error.hpp"

namespace lshpr {

namespace {

constexpr std::string_view kEmbeddingMagic = "EMB1";
constexpr std::string_view kTensorMagic = "TEN1";

void check_finite(std::span<const float> values, std::size_t d) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "non-finite value at (" << i / d << "," << i % d << ")";
      throw Error(msg.str());
    }
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

float parse_float(std::string_view field, std::size_t row, std::size_t col, const std::string& context) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  float value = 0.0f;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec == std::errc::result_out_of_range) {
    value = field.front() == '-' ? -std::numeric_limits<float>::infinity()
                                 : std::numeric_limits<float>::infinity();
  } else if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    std::ostringstream msg;
    msg << context << ": malformed number '" << field << "' at (" << row << "," << col << ")";
    throw Error(msg.str());
  }
  return value;
}

std::size_t checked_product(const std::vector<std::uint32_t>& shape) {
  std::size_t total = 1;
  for (std::uint32_t extent : shape) {
    if (extent == 0) throw Error("tensor shape has a zero extent");
    if (total > std::numeric_limits<std::size_t>::max() / extent) throw Error("tensor shape overflows");
    total *= extent;
  }
  return total;
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::size_t n, std::size_t d, std::vector<float> values, std::string label)
    : n_(n), d_(d), values_(std::move(values)), label_(std::move(label)) {
  if (n_ == 0) throw Error("embedding set must contain at least one point");
  if (d_ == 0) throw Error("embedding dimension must be at least 1");
  if (values_.size() != n_ * d_) {
    std::ostringstream msg;
    msg << "embedding payload has " << values_.size() << " values, expected " << n_ << "x" << d_;
    throw Error(msg.str());
  }
  check_finite(values_, d_);
}

EmbeddingSet EmbeddingSet::from_rows(const std::vector<std::vector<float>>& rows, std::string label) {
  if (rows.empty()) throw Error("embedding set must contain at least one point");
  const std::size_t d = rows.front().size();
  std::vector<float> values;
  values.reserve(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) {
      std::ostringstream msg;
      msg << "dimension mismatch at row " << i << ": " << rows[i].size() << " != " << d;
      throw Error(msg.str());
    }
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return EmbeddingSet(rows.size(), d, std::move(values), std::move(label));
}

WeightTensor::WeightTensor(std::vector<float> values, std::vector<std::uint32_t> shape, std::string name)
    : values_(std::move(values)), shape_(std::move(shape)), name_(std::move(name)) {
  if (shape_.empty()) throw Error("tensor shape must have rank >= 1");
  if (checked_product(shape_) != values_.size()) {
    std::ostringstream msg;
    msg << "shape/length mismatch: shape product " << checked_product(shape_) << " != " << values_.size()
        << " values";
    throw Error(msg.str());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error("non-finite tensor value at index " + std::to_string(i));
    }
  }
}

WeightTensor WeightTensor::flat(std::vector<float> values, std::string name) {
  if (values.size() > std::numeric_limits<std::uint32_t>::max()) throw Error("tensor too large for TEN1");
  const auto n = static_cast<std::uint32_t>(values.size());
  return WeightTensor(std::move(values), {n}, std::move(name));
}

EmbeddingFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv" ? EmbeddingFormat::csv : EmbeddingFormat::binary;
}

std::string encode_embeddings(const EmbeddingSet& set, EmbeddingFormat format) {
  if (format == EmbeddingFormat::binary) {
    if (set.size() > std::numeric_limits<std::uint32_t>::max() ||
        set.dim() > std::numeric_limits<std::uint32_t>::max()) {
      throw Error("embedding set too large for EMB1");
    }
    io::ByteWriter w;
    w.put_magic(kEmbeddingMagic);
    w.put_u32(static_cast<std::uint32_t>(set.size()));
    w.put_u32(static_cast<std::uint32_t>(set.dim()));
    w.put_f32s(set.values());
    return w.bytes();
  }

  // 9 significant digits round-trips every float32.
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto row = set.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out.push_back(',');
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), row[j], std::chars_format::general, 9);
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

EmbeddingSet decode_embeddings(std::string bytes, EmbeddingFormat format, const std::string& context) {
  if (format == EmbeddingFormat::binary) {
    io::ByteReader r(std::move(bytes), context);
    r.expect_magic(kEmbeddingMagic);
    const std::uint32_t n = r.get_u32();
    const std::uint32_t d = r.get_u32();
    if (n == 0 || d == 0) throw Error(context + ": malformed header (n and d must be positive)");
    const std::size_t count = static_cast<std::size_t>(n) * d;
    if (r.remaining() != 4 * count) {
      std::ostringstream msg;
      msg << context << ": payload is " << r.remaining() << " bytes, header declares " << n << "x" << d
          << " (" << 4 * count << " bytes)";
      throw Error(msg.str());
    }
    std::vector<float> values(count);
    r.get_f32s(values);
    return EmbeddingSet(n, d, std::move(values));
  }

  std::vector<float> values;
  std::size_t d = 0;
  std::size_t n = 0;
  std::string_view text(bytes);
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    if (trim(line).empty()) continue;

    std::size_t cols = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      values.push_back(parse_float(line.substr(0, comma), n, cols, context));
      ++cols;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (n == 0) {
      d = cols;
    } else if (cols != d) {
      std::ostringstream msg;
      msg << context << ": dimension mismatch at row " << n << ": " << cols << " columns, expected " << d;
      throw Error(msg.str());
    }
    ++n;
  }
  if (n == 0) throw Error(context + ": no rows");
  return EmbeddingSet(n, d, std::move(values));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  EmbeddingSet set = decode_embeddings(io::read_file(path), format, path.string());
  set.set_label(path.stem().string());
  return set;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, EmbeddingFormat format) {
  io::write_file_atomic(path, encode_embeddings(set, format));
}

std::string encode_tensor(const WeightTensor& tensor) {
  io::ByteWriter w;
  w.put_magic(kTensorMagic);
  w.put_u32(static_cast<std::uint32_t>(tensor.shape().size()));
  for (std::uint32_t extent : tensor.shape()) w.put_u32(extent);
  w.put_f32s(tensor.values());
  return w.bytes();
}

WeightTensor decode_tensor(std::string bytes, const std::string& context) {
  io::ByteReader r(std::move(bytes), context);
  r.expect_magic(kTensorMagic);
  const std::uint32_t rank = r.get_u32();
  if (rank == 0) throw Error(context + ": malformed header (rank 0)");
  if (static_cast<std::size_t>(rank) * 4 > r.remaining()) throw Error(context + ": truncated shape");
  std::vector<std::uint32_t> shape(rank);
  for (auto& extent : shape) extent = r.get_u32();
  const std::size_t count = checked_product(shape);
  if (r.remaining() != 4 * count) {
    std::ostringstream msg;
    msg << context << ": shape/length mismatch (payload " << r.remaining() << " bytes, shape needs "
        << 4 * count << ")";
    throw Error(msg.str());
  }
  std::vector<float> values(count);
  r.get_f32s(values);
  return WeightTensor(std::move(values), std::move(shape));
}

WeightTensor load_tensor(const std::filesystem::path& path) {
  WeightTensor t = decode_tensor(io::read_file(path), path.string());
  t.set_name(path.stem().string());
  return t;
}

void save_tensor(const WeightTensor& tensor, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_tensor(tensor));
}

}  // namespace lshpr
