#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lshpr/embedding_io.hpp"

namespace lshpr {

/// Squared Euclidean distance, accumulated in float in coordinate order.
///
/// Every distance in the library goes through this exact arithmetic (one
/// running sum per pair, no reassociation), so PackedRefs produces the same
/// bits as this scalar routine.
float squared_distance(std::span<const float> a, std::span<const float> b);

/// A subset of an EmbeddingSet repacked coordinate-major in lanes of
/// kLanes references, so one query is compared against kLanes references per
/// pass. Lane results equal squared_distance() bit-for-bit.
class PackedRefs {
 public:
  static constexpr std::size_t kLanes = 64;
  /// Queries handled per pass by the batched overload.
  static constexpr std::size_t kBatch = 32;

  PackedRefs() = default;
  PackedRefs(const EmbeddingSet& set, std::span<const std::uint32_t> indices);
  /// Packs the whole set in index order.
  explicit PackedRefs(const EmbeddingSet& set);

  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }

  /// out[j] = squared_distance(query, reference j); out.size() must equal size().
  void squared_distances(std::span<const float> query, std::span<float> out) const;

  /// Batched form: out[q * size() + j] = squared_distance(*queries[q], reference j)
  /// for up to kBatch queries, each pointing at dim() floats.
  void squared_distances(std::span<const float* const> queries, std::span<float> out) const;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> tiles_;
};

/// The `rank`-th smallest (1-based) of `values`, or the largest value when
/// fewer than `rank` values exist. `values` must be non-empty.
float order_statistic(std::span<const float> values, std::size_t rank, std::vector<float>& scratch);

/// Runs body(begin, end) over [0, count) split into contiguous chunks on up to
/// `threads` workers (0 = hardware concurrency). Chunks are disjoint, so
/// per-index outputs are deterministic regardless of scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body);

unsigned resolve_threads(unsigned requested, std::size_t work_items);

}  // namespace lshpr

#include "lshpr/detail/parallel.hpp"
