#include "lshpr/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "lshpr/error.hpp"

namespace lshpr {

namespace {

void check_series(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("score series have different lengths");
  if (a.size() < 2) throw Error("correlation needs at least 2 scores");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) throw Error("score series contains NaN");
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  check_series(a, b);
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw Error("correlation undefined for a zero-variance series");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double pearson(const ScoreSeries& a, const ScoreSeries& b) { return pearson(a.values, b.values); }

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_series(a, b);
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

double spearman(const ScoreSeries& a, const ScoreSeries& b) { return spearman(a.values, b.values); }

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.precision >= b.precision && a.recall >= b.recall && (a.precision > b.precision || a.recall > b.recall);
}

std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool dominated = std::any_of(points.begin(), points.end(),
                                       [&](const ParetoPoint& other) { return dominates(other, points[i]); });
    if (!dominated) kept.push_back(i);
  }
  std::stable_sort(kept.begin(), kept.end(), [&](std::size_t x, std::size_t y) {
    if (points[x].precision != points[y].precision) return points[x].precision > points[y].precision;
    return points[x].recall > points[y].recall;
  });
  std::vector<ParetoPoint> frontier;
  frontier.reserve(kept.size());
  for (std::size_t i : kept) frontier.push_back(points[i]);
  return frontier;
}

EmbeddingSet synthetic_set(std::size_t n, std::size_t dim, SampleDistribution distribution, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<float> values(n * dim);
  if (distribution == SampleDistribution::normal) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (float& v : values) v = static_cast<float>(normal(rng));
  } else {
    for (float& v : values) v = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1p-52 - 1.0);
  }
  return EmbeddingSet(n, dim, std::move(values));
}

std::vector<BenchRow> scaling_benchmark(const BenchConfig& config) {
  if (config.dim == 0) throw Error("benchmark dimension must be at least 1");
  if (config.sizes.empty() || config.estimators.empty()) throw Error("benchmark needs sizes and estimators");
  if (!std::is_sorted(config.sizes.begin(), config.sizes.end())) throw Error("benchmark sizes must be ascending");
  if (config.repeats == 0) throw Error("benchmark repeats must be at least 1");

  using Clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  for (std::size_t n : config.sizes) {
    if (n == 0) throw Error("benchmark sizes must be positive");
    for (std::uint32_t r = 0; r < config.repeats; ++r) {
      const std::uint64_t seed = config.seed + r;
      // Real and generated sets come from disjoint streams of the same seed.
      auto real = std::make_shared<const EmbeddingSet>(synthetic_set(n, config.dim, config.distribution, 2 * seed));
      auto gen =
          std::make_shared<const EmbeddingSet>(synthetic_set(n, config.dim, config.distribution, 2 * seed + 1));
      const std::uint32_t count = choose_H(2 * n);

      for (Estimator estimator : config.estimators) {
        BenchRow row;
        row.n = n;
        row.estimator = estimator;
        row.seed = seed;
        const auto start = Clock::now();
        RunScore score;
        if (estimator == Estimator::knn) {
          score = precision_recall_knn(*real, *gen, config.k, config.threads);
        } else {
          auto planes = std::make_shared<const HyperplaneSet>(
              generate_hyperplanes(count, static_cast<std::uint32_t>(config.dim), seed));
          const HashTable real_table = build_table(real, planes, config.threads);
          const HashTable gen_table = build_table(gen, planes, config.threads);
          score = estimator == Estimator::lsh ? precision_recall_lsh(real_table, gen_table)
                                              : precision_recall_lsh_knn(real_table, gen_table, config.k,
                                                                         config.threads);
          row.hyperplanes = count;
        }
        row.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        row.stats = score.stats;
        row.precision = score.precision;
        row.recall = score.recall;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace lshpr
