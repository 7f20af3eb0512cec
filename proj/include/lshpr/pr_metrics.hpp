#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lshpr/distance.hpp"
#include "lshpr/embedding_io.hpp"
#include "lshpr/lsh_core.hpp"

namespace lshpr {

enum class Estimator { lsh, lsh_knn, knn };

std::string_view to_string(Estimator e);
/// Accepts "lsh", "lsh-knn"/"lsh_knn", "knn".
Estimator parse_estimator(std::string_view name);

struct EvalConfig {
  std::uint32_t k = 3;
  /// Hyperplane count; nullopt selects choose_H(|real| + |generated|).
  std::optional<std::uint32_t> hyperplanes;
  std::uint32_t runs = 3;
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::lsh_knn;
  /// Worker cap for the parallel loops; 0 = hardware concurrency.
  unsigned threads = 1;

  void validate() const;
};

/// Distance-evaluation accounting. Sums are order-independent.
struct ComparisonStats {
  std::uint64_t distance_evals = 0;
  std::uint64_t queries = 0;

  double mean_per_query() const {
    return queries ? static_cast<double>(distance_evals) / static_cast<double>(queries) : 0.0;
  }
  ComparisonStats& operator+=(const ComparisonStats& o) {
    distance_evals += o.distance_evals;
    queries += o.queries;
    return *this;
  }
  friend bool operator==(const ComparisonStats&, const ComparisonStats&) = default;
};

/// One evaluation run. `precision` scores the evaluation (generated) set
/// against the reference (real) manifold, `recall` the reverse.
struct RunScore {
  double precision = 0.0;
  double recall = 0.0;
  ComparisonStats stats;
  std::uint64_t seed = 0;
  std::uint32_t hyperplanes = 0;
};

struct PRScore {
  double precision = 0.0;
  double recall = 0.0;
  std::vector<RunScore> per_run;
  Estimator estimator = Estimator::lsh_knn;
  EvalConfig config;

  ComparisonStats total_stats() const;
};

/// Squared neighbourhood radius per source point of a table (or of a whole set
/// for the KNN baseline).
struct Radii {
  std::vector<float> squared;

  double radius(std::size_t i) const;
  std::size_t size() const { return squared.size(); }
};

/// 1 iff `key` names a non-empty bucket of `table`. The caller guarantees the
/// key came from the table's hyperplanes.
bool f_lsh(HashKey key, const HashTable& table);

/// Pure-LSH precision/recall: fraction of evaluation keys present in the
/// reference table and vice versa. Performs no distance evaluations.
RunScore precision_recall_lsh(const HashTable& reference, const HashTable& evaluation);

/// Radius of every point: the (k+1)-th smallest distance to the members of
/// its own bucket, itself included, i.e. its k-th nearest neighbour. Buckets
/// with at most k other members fall back to the farthest member, so a
/// singleton gets radius 0.
Radii region_radii(const HashTable& table, std::uint32_t k, ComparisonStats* stats = nullptr,
                   unsigned threads = 1);

/// 1 iff phi lies inside the hypersphere of at least one listed reference.
/// Every member is compared (no early exit) so the evaluation count is exact.
bool f_lsh_knn(std::span<const float> phi, const EmbeddingSet& refs, std::span<const std::uint32_t> members,
               const Radii& radii, ComparisonStats* stats = nullptr);

RunScore precision_recall_lsh_knn(const HashTable& reference, const HashTable& evaluation, std::uint32_t k,
                                  unsigned threads = 1);

/// Exhaustive k-NN manifold estimator: radii over the whole reference set and
/// membership against every hypersphere. Costs exactly n evaluations per query.
RunScore precision_recall_knn(const EmbeddingSet& reference, const EmbeddingSet& evaluation, std::uint32_t k,
                              unsigned threads = 1);

/// Whole-set radii used by the KNN baseline.
Radii knn_radii(const EmbeddingSet& set, std::uint32_t k, ComparisonStats* stats = nullptr,
                unsigned threads = 1);

struct RealismOptions {
  /// Exclude the half of the reference points with the largest radii from
  /// the max (radii themselves are still computed over full buckets).
  bool drop_largest_radii = false;
};

struct RealismReport {
  /// One score per evaluated point. +infinity marks a point coinciding with
  /// an eligible reference point; 0 marks an empty region.
  std::vector<double> scores;
  std::uint32_t k = 3;
  bool drop_largest_radii = false;

  static bool is_infinite(double score) { return score == std::numeric_limits<double>::infinity(); }
};

/// Per-point realism: max over references in the point's region of
/// radius(ref) / distance(point, ref). A score >= 1 means the point lies in
/// at least one reference hypersphere.
RealismReport realism_scores(const EmbeddingSet& evaluation, const HashTable& reference, std::uint32_t k,
                             RealismOptions options = {});

/// End-to-end driver: for each run r, hyperplanes are drawn with seed + r and
/// the configured estimator is applied; reported values are per-run means.
/// The KNN estimator uses no hyperplanes, so its runs are identical copies
/// (seed 0, H 0) of a single computation.
PRScore evaluate(const EmbeddingSet& real, const EmbeddingSet& generated, const EvalConfig& config);

}  // namespace lshpr
