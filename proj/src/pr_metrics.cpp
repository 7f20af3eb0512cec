#include "lshpr/pr_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <unordered_map>

#include "lshpr/error.hpp"

namespace lshpr {

namespace {

// A region is one bucket's members plus their packed coordinates. The KNN
// baseline is the single-region case, which makes H = 0 reduce to it exactly.
struct Region {
  std::span<const std::uint32_t> members;
  PackedRefs packed;
};

using RegionIndex = std::unordered_map<std::uint64_t, Region>;

RegionIndex index_regions(const HashTable& table) {
  RegionIndex index;
  index.reserve(table.bucket_count());
  for (const auto& [key, members] : table.buckets()) {
    index.emplace(key, Region{members, PackedRefs(table.source(), members)});
  }
  return index;
}

// Radii of region members [first, last), kBatch queries per pass.
void member_radii(const EmbeddingSet& set, const Region& region, std::size_t first, std::size_t last,
                  std::uint32_t k, Radii& radii, std::vector<float>& dist, std::vector<float>& scratch) {
  const std::size_t m = region.members.size();
  const float* queries[PackedRefs::kBatch];
  for (std::size_t i = first; i < last; i += PackedRefs::kBatch) {
    const std::size_t q = std::min(PackedRefs::kBatch, last - i);
    for (std::size_t t = 0; t < q; ++t) queries[t] = set.row(region.members[i + t]).data();
    dist.resize(q * m);
    region.packed.squared_distances(std::span<const float* const>(queries, q), dist);
    for (std::size_t t = 0; t < q; ++t) {
      // Self is in the list at distance 0, so rank k+1 is the k-th neighbour.
      radii.squared[region.members[i + t]] =
          order_statistic(std::span<const float>(dist).subspan(t * m, m), static_cast<std::size_t>(k) + 1, scratch);
    }
  }
}

Radii radii_over_regions(const EmbeddingSet& set, std::span<const Region* const> regions, std::uint32_t k,
                         ComparisonStats* stats, unsigned threads) {
  if (k == 0) throw Error("k must be at least 1");
  Radii radii;
  radii.squared.assign(set.size(), 0.0f);

  // Large regions split their members across workers; small ones are
  // distributed whole.
  constexpr std::size_t kLargeRegion = 1024;
  std::vector<const Region*> small;
  for (const Region* region : regions) {
    const std::size_t m = region->members.size();
    if (stats) {
      stats->distance_evals += static_cast<std::uint64_t>(m) * m;
      stats->queries += m;
    }
    if (m < kLargeRegion) {
      small.push_back(region);
      continue;
    }
    parallel_for(m, threads, [&](std::size_t begin, std::size_t end) {
      std::vector<float> dist, scratch;
      member_radii(set, *region, begin, end, k, radii, dist, scratch);
    });
  }
  parallel_for(small.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<float> dist, scratch;
    for (std::size_t r = begin; r < end; ++r) {
      member_radii(set, *small[r], 0, small[r]->members.size(), k, radii, dist, scratch);
    }
  });
  return radii;
}

bool covered(std::span<const float> phi, const Region& region, const Radii& radii, std::vector<float>& dist) {
  dist.resize(region.members.size());
  region.packed.squared_distances(phi, dist);
  bool hit = false;
  for (std::size_t j = 0; j < dist.size(); ++j) hit |= dist[j] <= radii.squared[region.members[j]];
  return hit;
}

// Number of evaluation points inside the reference manifold. `lookup` maps an
// evaluation index to its candidate region (nullptr = empty region).
// Consecutive points sharing a region are compared in one batch.
template <class Lookup>
std::uint64_t count_covered(const EmbeddingSet& evaluation, const Radii& radii, Lookup&& lookup,
                            ComparisonStats& stats, unsigned threads) {
  const unsigned workers = resolve_threads(threads, evaluation.size());
  const std::size_t chunk = (evaluation.size() + workers - 1) / workers;
  std::vector<std::uint64_t> hits(workers, 0);
  std::vector<std::uint64_t> evals(workers, 0);
  parallel_for(evaluation.size(), workers, [&](std::size_t begin, std::size_t end) {
    const std::size_t slot = begin / chunk;
    std::vector<float> dist;
    const float* queries[PackedRefs::kBatch];
    const Region* next = begin < end ? lookup(begin) : nullptr;
    for (std::size_t i = begin; i < end;) {
      const Region* region = next;
      std::size_t j = i + 1;
      next = j < end ? lookup(j) : nullptr;
      while (region && j < end && j - i < PackedRefs::kBatch && next == region) {
        ++j;
        next = j < end ? lookup(j) : nullptr;
      }
      if (region) {
        const std::size_t m = region->members.size();
        const std::size_t q = j - i;
        for (std::size_t t = 0; t < q; ++t) queries[t] = evaluation.row(i + t).data();
        dist.resize(q * m);
        region->packed.squared_distances(std::span<const float* const>(queries, q), dist);
        for (std::size_t t = 0; t < q; ++t) {
          bool hit = false;
          for (std::size_t r = 0; r < m; ++r) hit |= dist[t * m + r] <= radii.squared[region->members[r]];
          if (hit) ++hits[slot];
        }
        evals[slot] += q * m;
      }
      i = j;
    }
  });
  stats.queries += evaluation.size();
  stats.distance_evals += std::accumulate(evals.begin(), evals.end(), std::uint64_t{0});
  return std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
}

std::vector<const Region*> region_list(const RegionIndex& index) {
  std::vector<const Region*> list;
  list.reserve(index.size());
  for (const auto& [key, region] : index) list.push_back(&region);
  return list;
}

void require_shared(const HashTable& a, const HashTable& b) {
  if (!a.shares_hyperplanes(b)) throw Error("tables were built with different hyperplanes");
}

// Non-owning handle for sets that outlive the tables built inside a call.
std::shared_ptr<const EmbeddingSet> borrow(const EmbeddingSet& set) {
  return std::shared_ptr<const EmbeddingSet>(std::shared_ptr<const EmbeddingSet>{}, &set);
}

double fraction(std::uint64_t hits, std::size_t total) {
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::lsh: return "lsh";
    case Estimator::lsh_knn: return "lsh-knn";
    case Estimator::knn: return "knn";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "lsh") return Estimator::lsh;
  if (name == "lsh-knn" || name == "lsh_knn") return Estimator::lsh_knn;
  if (name == "knn") return Estimator::knn;
  throw Error("unknown estimator '" + std::string(name) + "' (expected lsh, lsh-knn or knn)");
}

void EvalConfig::validate() const {
  if (k == 0) throw Error("k must be at least 1");
  if (runs == 0) throw Error("runs must be at least 1");
  if (hyperplanes && *hyperplanes > kMaxHyperplanes) {
    throw Error("H must be at most " + std::to_string(kMaxHyperplanes));
  }
}

ComparisonStats PRScore::total_stats() const {
  ComparisonStats total;
  for (const auto& r : per_run) total += r.stats;
  return total;
}

double Radii::radius(std::size_t i) const { return std::sqrt(static_cast<double>(squared[i])); }

bool f_lsh(HashKey key, const HashTable& table) { return table.contains(key); }

RunScore precision_recall_lsh(const HashTable& reference, const HashTable& evaluation) {
  require_shared(reference, evaluation);
  std::uint64_t precision_hits = 0;
  for (HashKey key : evaluation.keys()) precision_hits += f_lsh(key, reference) ? 1 : 0;
  std::uint64_t recall_hits = 0;
  for (HashKey key : reference.keys()) recall_hits += f_lsh(key, evaluation) ? 1 : 0;

  RunScore score;
  score.precision = fraction(precision_hits, evaluation.source().size());
  score.recall = fraction(recall_hits, reference.source().size());
  score.stats.queries = evaluation.source().size() + reference.source().size();
  score.seed = reference.hyperplanes().seed();
  score.hyperplanes = reference.hyperplanes().size();
  return score;
}

Radii region_radii(const HashTable& table, std::uint32_t k, ComparisonStats* stats, unsigned threads) {
  const RegionIndex index = index_regions(table);
  const auto regions = region_list(index);
  return radii_over_regions(table.source(), regions, k, stats, threads);
}

Radii knn_radii(const EmbeddingSet& set, std::uint32_t k, ComparisonStats* stats, unsigned threads) {
  std::vector<std::uint32_t> all(set.size());
  std::iota(all.begin(), all.end(), 0u);
  const Region whole{all, PackedRefs(set)};
  const Region* regions[] = {&whole};
  return radii_over_regions(set, regions, k, stats, threads);
}

bool f_lsh_knn(std::span<const float> phi, const EmbeddingSet& refs, std::span<const std::uint32_t> members,
               const Radii& radii, ComparisonStats* stats) {
  if (stats) {
    stats->queries += 1;
    stats->distance_evals += members.size();
  }
  if (members.empty()) return false;
  const Region region{members, PackedRefs(refs, members)};
  std::vector<float> dist;
  return covered(phi, region, radii, dist);
}

RunScore precision_recall_lsh_knn(const HashTable& reference, const HashTable& evaluation, std::uint32_t k,
                                  unsigned threads) {
  require_shared(reference, evaluation);
  if (k == 0) throw Error("k must be at least 1");
  const RegionIndex ref_index = index_regions(reference);
  const RegionIndex eval_index = index_regions(evaluation);

  RunScore score;
  const Radii ref_radii = radii_over_regions(reference.source(), region_list(ref_index), k, &score.stats, threads);
  const Radii eval_radii =
      radii_over_regions(evaluation.source(), region_list(eval_index), k, &score.stats, threads);

  auto lookup_in = [](const RegionIndex& index, const HashTable& queries) {
    return [&index, &queries](std::size_t i) -> const Region* {
      auto it = index.find(queries.key_of(i).bits);
      return it == index.end() ? nullptr : &it->second;
    };
  };
  const std::uint64_t precision_hits = count_covered(evaluation.source(), ref_radii,
                                                     lookup_in(ref_index, evaluation), score.stats, threads);
  const std::uint64_t recall_hits =
      count_covered(reference.source(), eval_radii, lookup_in(eval_index, reference), score.stats, threads);

  score.precision = fraction(precision_hits, evaluation.source().size());
  score.recall = fraction(recall_hits, reference.source().size());
  score.seed = reference.hyperplanes().seed();
  score.hyperplanes = reference.hyperplanes().size();
  return score;
}

RunScore precision_recall_knn(const EmbeddingSet& reference, const EmbeddingSet& evaluation, std::uint32_t k,
                              unsigned threads) {
  if (reference.dim() != evaluation.dim()) throw Error("dimension mismatch between sets");
  if (k == 0) throw Error("k must be at least 1");

  std::vector<std::uint32_t> ref_all(reference.size());
  std::iota(ref_all.begin(), ref_all.end(), 0u);
  std::vector<std::uint32_t> eval_all(evaluation.size());
  std::iota(eval_all.begin(), eval_all.end(), 0u);
  const Region ref_region{ref_all, PackedRefs(reference)};
  const Region eval_region{eval_all, PackedRefs(evaluation)};
  const Region* ref_regions[] = {&ref_region};
  const Region* eval_regions[] = {&eval_region};

  RunScore score;
  const Radii ref_radii = radii_over_regions(reference, ref_regions, k, &score.stats, threads);
  const Radii eval_radii = radii_over_regions(evaluation, eval_regions, k, &score.stats, threads);
  const std::uint64_t precision_hits = count_covered(
      evaluation, ref_radii, [&](std::size_t) { return &ref_region; }, score.stats, threads);
  const std::uint64_t recall_hits = count_covered(
      reference, eval_radii, [&](std::size_t) { return &eval_region; }, score.stats, threads);

  score.precision = fraction(precision_hits, evaluation.size());
  score.recall = fraction(recall_hits, reference.size());
  return score;
}

RealismReport realism_scores(const EmbeddingSet& evaluation, const HashTable& reference, std::uint32_t k,
                             RealismOptions options) {
  if (evaluation.dim() != reference.source().dim()) throw Error("dimension mismatch between sets");
  const Radii radii = region_radii(reference, k);
  const EmbeddingSet& refs = reference.source();

  std::vector<bool> eligible(refs.size(), true);
  if (options.drop_largest_radii) {
    std::vector<std::uint32_t> order(refs.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return radii.squared[a] < radii.squared[b]; });
    for (std::size_t j = refs.size() - refs.size() / 2; j < refs.size(); ++j) eligible[order[j]] = false;
  }

  RealismReport report;
  report.k = k;
  report.drop_largest_radii = options.drop_largest_radii;
  report.scores.assign(evaluation.size(), 0.0);
  for (std::size_t i = 0; i < evaluation.size(); ++i) {
    const auto phi = evaluation.row(i);
    double best = 0.0;
    for (std::uint32_t member : reference.bucket(compute_key(phi, reference.hyperplanes()))) {
      if (!eligible[member]) continue;
      const float d2 = squared_distance(phi, refs.row(member));
      if (d2 == 0.0f) {
        best = std::numeric_limits<double>::infinity();
        break;
      }
      best = std::max(best, radii.radius(member) / std::sqrt(static_cast<double>(d2)));
    }
    report.scores[i] = best;
  }
  return report;
}

PRScore evaluate(const EmbeddingSet& real, const EmbeddingSet& generated, const EvalConfig& config) {
  config.validate();
  if (real.dim() != generated.dim()) throw Error("dimension mismatch between sets");

  PRScore result;
  result.estimator = config.estimator;
  result.config = config;
  result.per_run.reserve(config.runs);

  if (config.estimator == Estimator::knn) {
    // Seed-free: one computation stands for every run.
    const RunScore once = precision_recall_knn(real, generated, config.k, config.threads);
    result.per_run.assign(config.runs, once);
  } else {
    const std::uint32_t count = config.hyperplanes.value_or(choose_H(real.size() + generated.size()));
    const auto real_ptr = borrow(real);
    const auto gen_ptr = borrow(generated);
    for (std::uint32_t r = 0; r < config.runs; ++r) {
      auto planes = std::make_shared<const HyperplaneSet>(
          generate_hyperplanes(count, static_cast<std::uint32_t>(real.dim()), config.seed + r));
      const HashTable real_table = build_table(real_ptr, planes, config.threads);
      const HashTable gen_table = build_table(gen_ptr, planes, config.threads);
      result.per_run.push_back(config.estimator == Estimator::lsh
                                   ? precision_recall_lsh(real_table, gen_table)
                                   : precision_recall_lsh_knn(real_table, gen_table, config.k, config.threads));
    }
  }

  for (const auto& run : result.per_run) {
    result.precision += run.precision;
    result.recall += run.recall;
  }
  result.precision /= static_cast<double>(result.per_run.size());
  result.recall /= static_cast<double>(result.per_run.size());
  return result;
}

}  // namespace lshpr
