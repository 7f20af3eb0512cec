#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "lshpr/embedding_io.hpp"

namespace lshpr {

/// Maximum number of hyperplanes: keys are packed into one 64-bit word.
inline constexpr std::uint32_t kMaxHyperplanes = 64;

/// H random hyperplanes in d dimensions: normals ~ N(0, 1) per coordinate,
/// offsets ~ U[0, 1). Plane i splits space by sign(phi . normal_i + offset_i).
class HyperplaneSet {
 public:
  HyperplaneSet(std::uint32_t count, std::uint32_t dim, std::uint64_t seed, std::vector<float> normals,
                std::vector<float> offsets);

  std::uint32_t size() const { return count_; }
  std::uint32_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const float> normal(std::size_t i) const { return {normals_.data() + i * dim_, dim_}; }
  float offset(std::size_t i) const { return offsets_[i]; }
  std::span<const float> normals() const { return normals_; }
  std::span<const float> offsets() const { return offsets_; }

  friend bool operator==(const HyperplaneSet&, const HyperplaneSet&) = default;

 private:
  std::uint32_t count_;
  std::uint32_t dim_;
  std::uint64_t seed_;
  std::vector<float> normals_;
  std::vector<float> offsets_;
};

/// H hash bits packed into one word; bit i is the side of hyperplane i.
struct HashKey {
  std::uint64_t bits = 0;
  friend bool operator==(HashKey, HashKey) = default;
};

/// Deterministic in (count, dim, seed) for a given standard library build.
HyperplaneSet generate_hyperplanes(std::uint32_t count, std::uint32_t dim, std::uint64_t seed);

/// 1 iff phi . normal + offset >= 0 (a zero projection maps to 1).
bool hash_point(std::span<const float> phi, std::span<const float> normal, float offset);

HashKey compute_key(std::span<const float> phi, const HyperplaneSet& planes);

/// floor(log2(n_total)) capped at 64; n_total is |real| + |generated|.
std::uint32_t choose_H(std::uint64_t n_total);

/// Buckets of point indices keyed by HashKey. Holds shared ownership of the
/// hashed set and of the hyperplanes so estimators can verify that two tables
/// were built under the same hyperplanes.
class HashTable {
 public:
  const EmbeddingSet& source() const { return *source_; }
  const HyperplaneSet& hyperplanes() const { return *planes_; }
  const std::shared_ptr<const EmbeddingSet>& source_ptr() const { return source_; }
  const std::shared_ptr<const HyperplaneSet>& hyperplanes_ptr() const { return planes_; }

  /// Key of source point i.
  HashKey key_of(std::size_t i) const { return keys_[i]; }
  std::span<const HashKey> keys() const { return keys_; }

  bool contains(HashKey key) const { return buckets_.contains(key.bits); }
  /// Members of the bucket for `key` in insertion order; empty when absent.
  std::span<const std::uint32_t> bucket(HashKey key) const;

  std::size_t bucket_count() const { return buckets_.size(); }
  const std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>& buckets() const { return buckets_; }

  /// True when both tables were hashed by identical hyperplanes.
  bool shares_hyperplanes(const HashTable& other) const;

 private:
  friend HashTable build_table(std::shared_ptr<const EmbeddingSet>, std::shared_ptr<const HyperplaneSet>,
                               unsigned);

  std::shared_ptr<const EmbeddingSet> source_;
  std::shared_ptr<const HyperplaneSet> planes_;
  std::vector<HashKey> keys_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

/// Hashes every point of `set`. Keys may be computed in parallel; bucket
/// lists are always filled in index order.
HashTable build_table(std::shared_ptr<const EmbeddingSet> set, std::shared_ptr<const HyperplaneSet> planes,
                      unsigned threads = 1);

// HYP1: "HYP1", u32 H, u32 d, u64 seed, H*d float32 normals (row-major),
// H float32 offsets. Little-endian throughout.
void save_hyperplanes(const HyperplaneSet& planes, const std::filesystem::path& path);
HyperplaneSet load_hyperplanes(const std::filesystem::path& path);

}  // namespace lshpr
