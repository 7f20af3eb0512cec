#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lshpr {

/// An n x d row-major matrix of finite float32 feature vectors.
///
/// Construction validates the invariants (n >= 1, d >= 1, every coordinate
/// finite), so any EmbeddingSet that exists is valid. Features are consumed
/// as given; nothing here normalizes them.
class EmbeddingSet {
 public:
  EmbeddingSet(std::size_t n, std::size_t d, std::vector<float> values, std::string label = {});

  /// Builds a set from explicit rows; rows must all have the same length.
  static EmbeddingSet from_rows(const std::vector<std::vector<float>>& rows, std::string label = {});

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }

  std::span<const float> row(std::size_t i) const { return {values_.data() + i * d_, d_}; }
  std::span<const float> values() const { return values_; }

  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
    return a.n_ == b.n_ && a.d_ == b.d_ && a.values_ == b.values_;
  }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<float> values_;
  std::string label_;
};

/// Flat float32 tensor with shape metadata.
class WeightTensor {
 public:
  WeightTensor(std::vector<float> values, std::vector<std::uint32_t> shape, std::string name = {});

  /// Rank-1 tensor covering `values`.
  static WeightTensor flat(std::vector<float> values, std::string name = {});

  std::span<const float> values() const { return values_; }
  const std::vector<std::uint32_t>& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  friend bool operator==(const WeightTensor& a, const WeightTensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  std::vector<float> values_;
  std::vector<std::uint32_t> shape_;
  std::string name_;
};

enum class EmbeddingFormat { binary, csv };

/// `.csv` selects the CSV path, anything else the EMB1 binary layout.
EmbeddingFormat format_from_extension(const std::filesystem::path& path);

// EMB1: "EMB1", u32 n, u32 d, n*d float32 (all little-endian, row-major).
// CSV:  one point per line, comma-separated, no header.
EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, EmbeddingFormat format);

std::string encode_embeddings(const EmbeddingSet& set, EmbeddingFormat format);
EmbeddingSet decode_embeddings(std::string bytes, EmbeddingFormat format, const std::string& context = "embeddings");

// TEN1: "TEN1", u32 rank, rank * u32 extents, float32 payload.
WeightTensor load_tensor(const std::filesystem::path& path);
void save_tensor(const WeightTensor& tensor, const std::filesystem::path& path);

std::string encode_tensor(const WeightTensor& tensor);
WeightTensor decode_tensor(std::string bytes, const std::string& context = "tensor");

}  // namespace lshpr
