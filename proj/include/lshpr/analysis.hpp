#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lshpr/pr_metrics.hpp"

namespace lshpr {

/// Scores for a sequence of conditions (e.g. bit-widths 6..2).
struct ScoreSeries {
  std::vector<std::string> labels;
  std::vector<double> values;
};

/// Product-moment correlation. Requires equal lengths >= 2, no NaN, and
/// non-zero variance in both series.
double pearson(std::span<const double> a, std::span<const double> b);
double pearson(const ScoreSeries& a, const ScoreSeries& b);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson over average ranks.
double spearman(std::span<const double> a, std::span<const double> b);
double spearman(const ScoreSeries& a, const ScoreSeries& b);

struct ParetoPoint {
  double precision = 0.0;
  double recall = 0.0;
  std::string tag;
};

/// True when `a` is at least as good as `b` in both coordinates and strictly
/// better in one.
bool dominates(const ParetoPoint& a, const ParetoPoint& b);

/// Points not strictly dominated by any other, sorted by precision descending
/// (then recall descending, then input order). Equal points are all kept.
std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points);

enum class SampleDistribution { normal, uniform };

struct BenchConfig {
  std::size_t dim = 64;
  std::vector<std::size_t> sizes;
  std::vector<Estimator> estimators;
  std::uint64_t seed = 0;
  /// Independent data/hyperplane draws per size: seed, seed + 1, ...
  std::uint32_t repeats = 1;
  std::uint32_t k = 3;
  /// normal: N(0, 1) per coordinate; uniform: U[-1, 1) per coordinate.
  SampleDistribution distribution = SampleDistribution::normal;
  unsigned threads = 1;
};

struct BenchRow {
  std::size_t n = 0;
  Estimator estimator = Estimator::knn;
  std::uint64_t seed = 0;
  std::uint32_t hyperplanes = 0;
  double wall_seconds = 0.0;
  ComparisonStats stats;
  double precision = 0.0;
  double recall = 0.0;
};

/// For each size n (ascending) and repeat, draws a real and a generated set
/// of n points each and times every estimator on them, H = choose_H(2n).
/// Estimators run sequentially so timings are not contended.
std::vector<BenchRow> scaling_benchmark(const BenchConfig& config);

/// Synthetic set used by the benchmark.
EmbeddingSet synthetic_set(std::size_t n, std::size_t dim, SampleDistribution distribution, std::uint64_t seed);

}  // namespace lshpr
