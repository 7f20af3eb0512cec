#include "lshpr/distance.hpp"

#include <algorithm>
#include <cstring>
#include <thread>

#include "lshpr/error.hpp"

namespace lshpr {

float squared_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error("dimension mismatch in distance");
  float acc = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const float t = a[i] - b[i];
    acc += t * t;
  }
  return acc;
}

PackedRefs::PackedRefs(const EmbeddingSet& set, std::span<const std::uint32_t> indices)
    : count_(indices.size()), dim_(set.dim()) {
  const std::size_t blocks = (count_ + kLanes - 1) / kLanes;
  tiles_.assign(blocks * kLanes * dim_, 0.0f);
  for (std::size_t j = 0; j < count_; ++j) {
    const auto row = set.row(indices[j]);
    float* tile = tiles_.data() + (j / kLanes) * kLanes * dim_;
    const std::size_t lane = j % kLanes;
    for (std::size_t i = 0; i < dim_; ++i) tile[i * kLanes + lane] = row[i];
  }
}

PackedRefs::PackedRefs(const EmbeddingSet& set) : count_(set.size()), dim_(set.dim()) {
  const std::size_t blocks = (count_ + kLanes - 1) / kLanes;
  tiles_.assign(blocks * kLanes * dim_, 0.0f);
  for (std::size_t j = 0; j < count_; ++j) {
    const auto row = set.row(j);
    float* tile = tiles_.data() + (j / kLanes) * kLanes * dim_;
    const std::size_t lane = j % kLanes;
    for (std::size_t i = 0; i < dim_; ++i) tile[i * kLanes + lane] = row[i];
  }
}

namespace {

// 16 floats; GCC/Clang vector extension, split into narrower registers on
// targets without 512-bit vectors.
typedef float Vec __attribute__((vector_size(64)));
constexpr std::size_t kVecWidth = sizeof(Vec) / sizeof(float);
constexpr std::size_t kVecsPerTile = PackedRefs::kLanes / kVecWidth;

inline Vec load(const float* p) {
  Vec v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

// Per lane: t = x - ref; acc += t * t, coordinate by coordinate, exactly as
// squared_distance() does for one pair.
template <std::size_t Q>
void tile_pass(const float* const* queries, const float* tile, std::size_t dim, float* out, std::size_t stride,
               std::size_t live) {
  Vec acc[Q][kVecsPerTile] = {};
  for (std::size_t i = 0; i < dim; ++i) {
    Vec col[kVecsPerTile];
    for (std::size_t v = 0; v < kVecsPerTile; ++v) col[v] = load(tile + i * PackedRefs::kLanes + v * kVecWidth);
    for (std::size_t q = 0; q < Q; ++q) {
      const float x = queries[q][i];
      for (std::size_t v = 0; v < kVecsPerTile; ++v) {
        const Vec t = x - col[v];
        acc[q][v] += t * t;
      }
    }
  }
  for (std::size_t q = 0; q < Q; ++q) {
    alignas(64) float lanes[PackedRefs::kLanes];
    std::memcpy(lanes, acc[q], sizeof lanes);
    std::copy_n(lanes, live, out + q * stride);
  }
}

// Tiles outermost so each tile stays in L1 while every query visits it.
void all_tiles(const float* const* queries, std::size_t nq, const std::vector<float>& tiles, std::size_t count,
               std::size_t dim, float* out) {
  const std::size_t blocks = (count + PackedRefs::kLanes - 1) / PackedRefs::kLanes;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t base = b * PackedRefs::kLanes;
    const float* tile = tiles.data() + base * dim;
    const std::size_t live = std::min(PackedRefs::kLanes, count - base);
    std::size_t q = 0;
    for (; q + 4 <= nq; q += 4) tile_pass<4>(queries + q, tile, dim, out + q * count + base, count, live);
    switch (nq - q) {
      case 3: tile_pass<3>(queries + q, tile, dim, out + q * count + base, count, live); break;
      case 2: tile_pass<2>(queries + q, tile, dim, out + q * count + base, count, live); break;
      case 1: tile_pass<1>(queries + q, tile, dim, out + q * count + base, count, live); break;
      default: break;
    }
  }
}

}  // namespace

void PackedRefs::squared_distances(std::span<const float> query, std::span<float> out) const {
  if (query.size() != dim_) throw Error("dimension mismatch in distance");
  if (out.size() != count_) throw Error("distance output has wrong length");
  const float* q = query.data();
  all_tiles(&q, 1, tiles_, count_, dim_, out.data());
}

void PackedRefs::squared_distances(std::span<const float* const> queries, std::span<float> out) const {
  if (queries.empty() || queries.size() > kBatch) throw Error("distance batch must hold 1 to kBatch queries");
  if (out.size() != queries.size() * count_) throw Error("distance output has wrong length");
  all_tiles(queries.data(), queries.size(), tiles_, count_, dim_, out.data());
}

float order_statistic(std::span<const float> values, std::size_t rank, std::vector<float>& scratch) {
  if (values.empty()) throw Error("order statistic of an empty list");
  if (rank == 0) throw Error("order statistic rank is 1-based");
  if (rank >= values.size()) return *std::max_element(values.begin(), values.end());

  // Small ranks: bounded insertion keeps the `rank` smallest seen so far.
  if (rank <= 16) {
    float best[16];
    std::size_t filled = 0;
    for (float v : values) {
      if (filled < rank) {
        std::size_t pos = filled++;
        while (pos > 0 && best[pos - 1] > v) {
          best[pos] = best[pos - 1];
          --pos;
        }
        best[pos] = v;
      } else if (v < best[rank - 1]) {
        std::size_t pos = rank - 1;
        while (pos > 0 && best[pos - 1] > v) {
          best[pos] = best[pos - 1];
          --pos;
        }
        best[pos] = v;
      }
    }
    return best[rank - 1];
  }
  scratch.assign(values.begin(), values.end());
  auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

unsigned resolve_threads(unsigned requested, std::size_t work_items) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  // Not worth a thread for tiny inputs.
  const std::size_t useful = std::max<std::size_t>(1, work_items / 64);
  if (useful < n) n = static_cast<unsigned>(useful);
  return std::max(1u, n);
}

}  // namespace lshpr
