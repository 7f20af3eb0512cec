#include "lshpr/lsh_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "lshpr/binary_io.hpp"
#include "lshpr/distance.hpp"
#include "lshpr/error.hpp"

namespace lshpr {

namespace {

constexpr std::string_view kHyperplaneMagic = "HYP1";

double projection(std::span<const float> phi, std::span<const float> normal, float offset) {
  double acc = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) acc += static_cast<double>(phi[i]) * normal[i];
  return acc + offset;
}

}  // namespace

HyperplaneSet::HyperplaneSet(std::uint32_t count, std::uint32_t dim, std::uint64_t seed,
                             std::vector<float> normals, std::vector<float> offsets)
    : count_(count), dim_(dim), seed_(seed), normals_(std::move(normals)), offsets_(std::move(offsets)) {
  if (count_ > kMaxHyperplanes) {
    throw Error("at most " + std::to_string(kMaxHyperplanes) + " hyperplanes fit in a key, got " +
                std::to_string(count_));
  }
  if (dim_ == 0) throw Error("hyperplane dimension must be at least 1");
  if (normals_.size() != static_cast<std::size_t>(count_) * dim_ || offsets_.size() != count_) {
    throw Error("hyperplane arrays do not match H x d");
  }
  const auto finite = [](float v) { return std::isfinite(v); };
  if (!std::all_of(normals_.begin(), normals_.end(), finite) || !std::all_of(offsets_.begin(), offsets_.end(), finite)) {
    throw Error("hyperplanes contain a non-finite value");
  }
}

HyperplaneSet generate_hyperplanes(std::uint32_t count, std::uint32_t dim, std::uint64_t seed) {
  if (count > kMaxHyperplanes) {
    throw Error("at most " + std::to_string(kMaxHyperplanes) + " hyperplanes fit in a key, got " +
                std::to_string(count));
  }
  if (dim == 0) throw Error("hyperplane dimension must be at least 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> normals(static_cast<std::size_t>(count) * dim);
  for (float& v : normals) v = static_cast<float>(normal(rng));
  std::vector<float> offsets(count);
  // Top 24 bits scaled by 2^-24: exactly representable and strictly below 1.
  for (float& v : offsets) v = static_cast<float>(rng() >> 40) * 0x1p-24f;
  return HyperplaneSet(count, dim, seed, std::move(normals), std::move(offsets));
}

bool hash_point(std::span<const float> phi, std::span<const float> normal, float offset) {
  if (phi.size() != normal.size()) throw Error("dimension mismatch between point and hyperplane");
  return projection(phi, normal, offset) >= 0.0;
}

HashKey compute_key(std::span<const float> phi, const HyperplaneSet& planes) {
  if (phi.size() != planes.dim()) {
    std::ostringstream msg;
    msg << "dimension mismatch: point has " << phi.size() << " coordinates, hyperplanes " << planes.dim();
    throw Error(msg.str());
  }
  HashKey key;
  for (std::uint32_t i = 0; i < planes.size(); ++i) {
    if (projection(phi, planes.normal(i), planes.offset(i)) >= 0.0) key.bits |= std::uint64_t{1} << i;
  }
  return key;
}

std::uint32_t choose_H(std::uint64_t n_total) {
  if (n_total == 0) throw Error("choose_H needs at least one point");
  const auto h = static_cast<std::uint32_t>(std::bit_width(n_total) - 1);
  return std::min(h, kMaxHyperplanes);
}

std::span<const std::uint32_t> HashTable::bucket(HashKey key) const {
  auto it = buckets_.find(key.bits);
  if (it == buckets_.end()) return {};
  return it->second;
}

bool HashTable::shares_hyperplanes(const HashTable& other) const {
  return planes_ == other.planes_ || *planes_ == *other.planes_;
}

HashTable build_table(std::shared_ptr<const EmbeddingSet> set, std::shared_ptr<const HyperplaneSet> planes,
                      unsigned threads) {
  if (!set || !planes) throw Error("build_table needs a set and hyperplanes");
  if (set->dim() != planes->dim()) {
    std::ostringstream msg;
    msg << "dimension mismatch: set has d=" << set->dim() << ", hyperplanes d=" << planes->dim();
    throw Error(msg.str());
  }
  if (set->size() > std::numeric_limits<std::uint32_t>::max()) throw Error("set too large to index");

  HashTable table;
  table.keys_.resize(set->size());
  parallel_for(set->size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) table.keys_[i] = compute_key(set->row(i), *planes);
  });
  for (std::size_t i = 0; i < set->size(); ++i) {
    table.buckets_[table.keys_[i].bits].push_back(static_cast<std::uint32_t>(i));
  }
  table.source_ = std::move(set);
  table.planes_ = std::move(planes);
  return table;
}

void save_hyperplanes(const HyperplaneSet& planes, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.put_magic(kHyperplaneMagic);
  w.put_u32(planes.size());
  w.put_u32(planes.dim());
  w.put_u64(planes.seed());
  w.put_f32s(planes.normals());
  w.put_f32s(planes.offsets());
  io::write_file_atomic(path, w.bytes());
}

HyperplaneSet load_hyperplanes(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  r.expect_magic(kHyperplaneMagic);
  const std::uint32_t count = r.get_u32();
  const std::uint32_t dim = r.get_u32();
  const std::uint64_t seed = r.get_u64();
  if (count > kMaxHyperplanes || dim == 0) {
    throw Error(path.string() + ": malformed header (H=" + std::to_string(count) + ", d=" +
                std::to_string(dim) + ")");
  }
  const std::size_t expected = 4 * static_cast<std::size_t>(count) * (static_cast<std::size_t>(dim) + 1);
  if (r.remaining() != expected) {
    throw Error(path.string() + ": payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                std::to_string(expected));
  }
  std::vector<float> normals(static_cast<std::size_t>(count) * dim);
  std::vector<float> offsets(count);
  r.get_f32s(normals);
  r.get_f32s(offsets);
  return HyperplaneSet(count, dim, seed, std::move(normals), std::move(offsets));
}

}  // namespace lshpr
