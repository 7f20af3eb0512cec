#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lshpr/error.hpp"
#include "lshpr/pr_metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lshpr;

namespace {

std::shared_ptr<const EmbeddingSet> share(EmbeddingSet s) { return std::make_shared<const EmbeddingSet>(std::move(s)); }
std::shared_ptr<const HyperplaneSet> share(HyperplaneSet s) {
  return std::make_shared<const HyperplaneSet>(std::move(s));
}

EmbeddingSet line(std::vector<float> xs) {
  const std::size_t n = xs.size();
  return EmbeddingSet(n, 1, std::move(xs));
}

struct Tables {
  HashTable ref;
  HashTable eval;
};

Tables tables(const EmbeddingSet& ref, const EmbeddingSet& eval, std::uint32_t h, std::uint64_t seed) {
  auto planes = share(generate_hyperplanes(h, static_cast<std::uint32_t>(ref.dim()), seed));
  return {build_table(share(ref), planes), build_table(share(eval), planes)};
}

}  // namespace

TEST(Estimator, Names) {
  EXPECT_EQ(parse_estimator("lsh"), Estimator::lsh);
  EXPECT_EQ(parse_estimator("lsh-knn"), Estimator::lsh_knn);
  EXPECT_EQ(parse_estimator("lsh_knn"), Estimator::lsh_knn);
  EXPECT_EQ(parse_estimator("knn"), Estimator::knn);
  EXPECT_THROW(parse_estimator("fast"), Error);
  for (auto e : {Estimator::lsh, Estimator::lsh_knn, Estimator::knn}) EXPECT_EQ(parse_estimator(to_string(e)), e);
}

TEST(EvalConfig, Validation) {
  EvalConfig c;
  EXPECT_EQ(c.k, 3u);
  EXPECT_EQ(c.runs, 3u);
  EXPECT_FALSE(c.hyperplanes.has_value());
  EXPECT_NO_THROW(c.validate());
  c.k = 0;
  EXPECT_THROW(c.validate(), Error);
  c.k = 3;
  c.runs = 0;
  EXPECT_THROW(c.validate(), Error);
  c.runs = 1;
  c.hyperplanes = 65;
  EXPECT_THROW(c.validate(), Error);
}

TEST(FLsh, PresenceOfKey) {
  auto set = share(load_embeddings(fixture("point_key5.emb"), EmbeddingFormat::binary));
  const auto table = build_table(set, share(load_hyperplanes(fixture("planes_h3_d2.hyp"))));
  EXPECT_TRUE(f_lsh(HashKey{5}, table));
  EXPECT_FALSE(f_lsh(HashKey{2}, table));

  const auto all = build_table(share(oracle::gaussian_set(5, 3, 1)), share(generate_hyperplanes(0, 3, 0)));
  EXPECT_TRUE(f_lsh(HashKey{0}, all));
}

TEST(PrecisionRecallLsh, IdenticalAndSeparated) {
  const auto a = oracle::gaussian_set(100, 8, 1);
  const auto t = tables(a, a, 6, 3);
  const auto s = precision_recall_lsh(t.ref, t.eval);
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.stats.distance_evals, 0u);

  auto planes = share(load_hyperplanes(fixture("plane_x0_d2.hyp")));
  std::vector<std::vector<float>> left, right;
  for (int i = 0; i < 20; ++i) {
    left.push_back({-10.0f + 0.1f * static_cast<float>(i % 5), 0.2f * static_cast<float>(i)});
    right.push_back({10.0f - 0.1f * static_cast<float>(i % 5), -0.3f * static_cast<float>(i)});
  }
  const auto l = build_table(share(EmbeddingSet::from_rows(left)), planes);
  const auto r = build_table(share(EmbeddingSet::from_rows(right)), planes);
  const auto sep = precision_recall_lsh(l, r);
  EXPECT_EQ(sep.precision, 0.0);
  EXPECT_EQ(sep.recall, 0.0);
}

TEST(PrecisionRecallLsh, MatchesBruteForceOracle) {
  for (std::uint32_t h : {4u, 6u, 8u, 10u}) {
    const auto planes = load_hyperplanes(fixture("random_h" + std::to_string(h) + "_d8.hyp"));
    const auto a = oracle::gaussian_set(200, 8, h);
    const auto b = oracle::gaussian_set(200, 8, 100 + h, 0.3f);
    auto p = share(planes);
    const auto s = precision_recall_lsh(build_table(share(a), p), build_table(share(b), p));
    const auto o = oracle::pr_lsh(a, b, planes);
    EXPECT_EQ(s.precision, o.precision);
    EXPECT_EQ(s.recall, o.recall);
  }
}

TEST(PrecisionRecallLsh, RejectsMismatchedTables) {
  const auto a = oracle::gaussian_set(10, 3, 1);
  const auto t1 = build_table(share(a), share(generate_hyperplanes(4, 3, 1)));
  const auto t2 = build_table(share(a), share(generate_hyperplanes(4, 3, 2)));
  EXPECT_THROW(precision_recall_lsh(t1, t2), Error);
  EXPECT_THROW(precision_recall_lsh_knn(t1, t2, 3), Error);
}

TEST(RegionRadii, HandComputedBucket) {
  auto set = share(line({0.0f, 1.0f, 3.0f}));
  const auto table = build_table(set, share(generate_hyperplanes(0, 1, 0)));
  ComparisonStats stats;
  const auto r = region_radii(table, 1, &stats);
  EXPECT_EQ(r.radius(0), 1.0);
  EXPECT_EQ(r.radius(1), 1.0);
  EXPECT_EQ(r.radius(2), 2.0);
  EXPECT_EQ(stats.distance_evals, 9u);
  EXPECT_EQ(stats.queries, 3u);

  const auto k3 = region_radii(build_table(share(line({0.0f, 2.5f})), share(generate_hyperplanes(0, 1, 0))), 3);
  EXPECT_EQ(k3.radius(0), 2.5);
  EXPECT_EQ(k3.radius(1), 2.5);

  const auto single = region_radii(build_table(share(line({7.0f})), share(generate_hyperplanes(0, 1, 0))), 3);
  EXPECT_EQ(single.radius(0), 0.0);
  EXPECT_THROW(region_radii(table, 0), Error);
}

TEST(RegionRadii, SingletonBucketsFromSeparatingPlane) {
  auto set = share(EmbeddingSet::from_rows({{-1, 0}, {1, 0}}));
  const auto table = build_table(set, share(load_hyperplanes(fixture("plane_x0_d2.hyp"))));
  const auto r = region_radii(table, 3);
  EXPECT_EQ(r.radius(0), 0.0);
  EXPECT_EQ(r.radius(1), 0.0);
}

TEST(RegionRadii, MatchesOracleAndIsThreadInvariant) {
  const auto a = oracle::gaussian_set(3000, 12, 8);
  auto planes = share(generate_hyperplanes(3, 12, 9));
  const auto table = build_table(share(a), planes);
  const auto r1 = region_radii(table, 3, nullptr, 1);
  const auto r4 = region_radii(table, 3, nullptr, 4);
  EXPECT_EQ(r1.squared, r4.squared);
  const auto keys = oracle::keys(a, *planes);
  for (const auto& members : oracle::groups(keys)) {
    for (std::size_t i : members) {
      EXPECT_NEAR(r1.squared[i], static_cast<double>(oracle::radius2(a, i, members, 3)),
                  1e-5 * static_cast<double>(r1.squared[i]));
    }
  }
}

TEST(FLshKnn, HandComputed) {
  const auto refs = line({0.0f, 1.0f});
  const Radii radii{{1.0f, 1.0f}};
  const std::vector<std::uint32_t> members{0, 1};
  ComparisonStats stats;
  EXPECT_TRUE(f_lsh_knn(std::vector<float>{0.5f}, refs, members, radii, &stats));
  EXPECT_FALSE(f_lsh_knn(std::vector<float>{3.0f}, refs, members, radii, &stats));
  EXPECT_TRUE(f_lsh_knn(std::vector<float>{1.0f}, refs, members, Radii{{0.0f, 0.0f}}, &stats));
  EXPECT_FALSE(f_lsh_knn(std::vector<float>{0.0f}, refs, {}, radii, &stats));
  EXPECT_EQ(stats.queries, 4u);
  EXPECT_EQ(stats.distance_evals, 6u);
}

TEST(PrecisionRecallKnn, HandComputed) {
  const auto s = precision_recall_knn(line({0.0f, 1.0f}), line({0.5f, 3.0f}), 1);
  EXPECT_EQ(s.precision, 0.5);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.stats.distance_evals, 4u + 4u + 4u + 4u);
  EXPECT_EQ(s.stats.mean_per_query(), 2.0);
}

TEST(PrecisionRecallKnn, ExactCostAndOracle) {
  for (std::size_t n : {50u, 130u}) {
    const auto a = oracle::gaussian_set(n, 5, n);
    const auto b = oracle::gaussian_set(n + 7, 5, n + 1, 0.2f);
    const auto s = precision_recall_knn(a, b, 3);
    EXPECT_EQ(s.stats.distance_evals, n * n + (n + 7) * (n + 7) + 2 * n * (n + 7));
    const auto o = oracle::pr_knn(a, b, 3);
    EXPECT_EQ(s.precision, o.precision);
    EXPECT_EQ(s.recall, o.recall);
  }
  const auto a = oracle::gaussian_set(300, 4, 1);
  const auto b = oracle::gaussian_set(300, 4, 2);
  const auto s = precision_recall_knn(a, b, 3);
  EXPECT_EQ(s.stats.mean_per_query(), 300.0);
}

TEST(PrecisionRecallLshKnn, MatchesOracle) {
  for (std::uint32_t h : {4u, 6u, 8u, 10u}) {
    const auto planes = load_hyperplanes(fixture("random_h" + std::to_string(h) + "_d8.hyp"));
    const auto a = oracle::gaussian_set(200, 8, 40 + h);
    const auto b = oracle::gaussian_set(200, 8, 140 + h, 0.2f);
    auto p = share(planes);
    const auto s = precision_recall_lsh_knn(build_table(share(a), p), build_table(share(b), p), 3);
    const auto o = oracle::pr_lsh_knn(a, b, planes, 3);
    EXPECT_EQ(s.precision, o.precision);
    EXPECT_EQ(s.recall, o.recall);
  }
}

TEST(PrecisionRecallLshKnn, ZeroPlanesReduceToKnn) {
  const auto a = oracle::gaussian_set(200, 6, 71);
  const auto b = oracle::gaussian_set(200, 6, 72, 0.4f);
  const auto t = tables(a, b, 0, 0);
  const auto lk = precision_recall_lsh_knn(t.ref, t.eval, 3);
  const auto kn = precision_recall_knn(a, b, 3);
  EXPECT_EQ(lk.precision, kn.precision);
  EXPECT_EQ(lk.recall, kn.recall);
  EXPECT_EQ(lk.stats, kn.stats);
}

TEST(PrecisionRecallLshKnn, CountsEvaluations) {
  const auto a = oracle::gaussian_set(300, 8, 5);
  const auto b = oracle::gaussian_set(250, 8, 6);
  const auto t = tables(a, b, 5, 7);
  const auto s = precision_recall_lsh_knn(t.ref, t.eval, 3);
  std::uint64_t expected = 0;
  for (const auto& [key, m] : t.ref.buckets()) expected += m.size() * m.size();
  for (const auto& [key, m] : t.eval.buckets()) expected += m.size() * m.size();
  for (HashKey k : t.eval.keys()) expected += t.ref.bucket(k).size();
  for (HashKey k : t.ref.keys()) expected += t.eval.bucket(k).size();
  EXPECT_EQ(s.stats.distance_evals, expected);
  EXPECT_EQ(s.stats.queries, 2u * (300 + 250));
}

TEST(PrecisionRecallLshKnn, ThreadCountDoesNotChangeResults) {
  const auto a = oracle::gaussian_set(5000, 8, 15);
  const auto b = oracle::gaussian_set(5000, 8, 16, 0.1f);
  const auto t = tables(a, b, 4, 3);
  const auto s1 = precision_recall_lsh_knn(t.ref, t.eval, 3, 1);
  const auto s4 = precision_recall_lsh_knn(t.ref, t.eval, 3, 4);
  EXPECT_EQ(s1.precision, s4.precision);
  EXPECT_EQ(s1.recall, s4.recall);
  EXPECT_EQ(s1.stats, s4.stats);
  const auto k1 = precision_recall_knn(a, b, 3, 1);
  const auto k3 = precision_recall_knn(a, b, 3, 3);
  EXPECT_EQ(k1.precision, k3.precision);
  EXPECT_EQ(k1.recall, k3.recall);
  EXPECT_EQ(k1.stats, k3.stats);
}

TEST(Properties, IdentityRangeDualityDominanceMonotonicity) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto a = oracle::gaussian_set(150, 6, 1000 + seed);
    const auto b = oracle::gaussian_set(120, 6, 2000 + seed, 0.3f, 1.2f);
    const std::uint32_t h = choose_H(a.size() + b.size());
    const auto ab = tables(a, b, h, seed);
    const auto ba = tables(b, a, h, seed);

    const auto lsh_ab = precision_recall_lsh(ab.ref, ab.eval);
    const auto lsh_ba = precision_recall_lsh(ba.ref, ba.eval);
    EXPECT_EQ(lsh_ab.precision, lsh_ba.recall);
    EXPECT_EQ(lsh_ab.recall, lsh_ba.precision);

    double prev_p = -1, prev_r = -1;
    for (std::uint32_t k : {1u, 3u, 5u}) {
      const auto lk_ab = precision_recall_lsh_knn(ab.ref, ab.eval, k);
      const auto lk_ba = precision_recall_lsh_knn(ba.ref, ba.eval, k);
      EXPECT_EQ(lk_ab.precision, lk_ba.recall);
      EXPECT_EQ(lk_ab.recall, lk_ba.precision);
      EXPECT_LE(lk_ab.precision, lsh_ab.precision);
      EXPECT_LE(lk_ab.recall, lsh_ab.recall);
      EXPECT_GE(lk_ab.precision, prev_p);
      EXPECT_GE(lk_ab.recall, prev_r);
      prev_p = lk_ab.precision;
      prev_r = lk_ab.recall;
      for (double v : {lk_ab.precision, lk_ab.recall}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }

    const auto aa = tables(a, a, h, seed);
    for (std::uint32_t k : {1u, 3u}) {
      EXPECT_EQ(precision_recall_lsh_knn(aa.ref, aa.eval, k).precision, 1.0);
      EXPECT_EQ(precision_recall_lsh_knn(aa.ref, aa.eval, k).recall, 1.0);
      EXPECT_EQ(precision_recall_knn(a, a, k).precision, 1.0);
      EXPECT_EQ(precision_recall_knn(a, a, k).recall, 1.0);
    }
  }
}

// Mean distance evaluations per query for LSH+KNN with H = choose_H on
// uniform data; Table-1 style cost d * n / 2^H with n / 2^H <= 8.
TEST(Properties, LshKnnCostPerQueryOverSeeds) {
  double total = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const auto a = oracle::uniform_set(1024, 64, 10 + 2 * s);
    const auto b = oracle::uniform_set(1024, 64, 11 + 2 * s);
    const auto t = tables(a, b, choose_H(2048), s);
    total += precision_recall_lsh_knn(t.ref, t.eval, 3).stats.mean_per_query();
  }
  EXPECT_LE(total / seeds, 8.0);
}

TEST(Realism, HandComputed) {
  auto refs = share(line({0.0f, 1.0f}));
  const auto table = build_table(refs, share(generate_hyperplanes(0, 1, 0)));
  const auto rep = realism_scores(line({0.5f, 1.0f, 10.0f}), table, 1);
  ASSERT_EQ(rep.scores.size(), 3u);
  EXPECT_EQ(rep.scores[0], 2.0);
  EXPECT_TRUE(RealismReport::is_infinite(rep.scores[1]));
  EXPECT_NEAR(rep.scores[2], 1.0 / 9.0, 1e-15);
  EXPECT_EQ(rep.k, 1u);
}

TEST(Realism, EmptyRegionScoresZero) {
  auto refs = share(EmbeddingSet::from_rows({{-1, 0}, {-2, 0}}));
  const auto table = build_table(refs, share(load_hyperplanes(fixture("plane_x0_d2.hyp"))));
  const auto rep = realism_scores(EmbeddingSet::from_rows({{5, 0}}), table, 1);
  EXPECT_EQ(rep.scores[0], 0.0);
}

TEST(Realism, MatchesOracleAndMembership) {
  const auto a = oracle::gaussian_set(400, 6, 33);
  const auto b = oracle::gaussian_set(300, 6, 34, 0.2f);
  auto planes = share(generate_hyperplanes(5, 6, 35));
  const auto table = build_table(share(a), planes);
  const auto rep = realism_scores(b, table, 3);
  const auto expected = oracle::realism(b, a, *planes, 3);
  const auto radii = region_radii(table, 3);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_NEAR(rep.scores[i], static_cast<double>(expected[i]), 1e-5 * static_cast<double>(expected[i]));
    const bool inside = f_lsh_knn(b.row(i), a, table.bucket(compute_key(b.row(i), *planes)), radii);
    EXPECT_EQ(rep.scores[i] >= 1.0, inside) << i;
  }
}

TEST(Realism, DropLargestRadii) {
  // Radii with k=1: 0 -> 1, 1 -> 1, 3 -> 2, 10 -> 7. The two largest (3, 10) are dropped.
  auto refs = share(line({0.0f, 1.0f, 3.0f, 10.0f}));
  const auto table = build_table(refs, share(generate_hyperplanes(0, 1, 0)));
  const auto query = line({9.0f, 0.5f, 3.0f});
  const auto full = realism_scores(query, table, 1);
  const auto dropped = realism_scores(query, table, 1, RealismOptions{true});
  EXPECT_EQ(full.scores[0], 7.0);
  EXPECT_EQ(dropped.scores[0], 1.0 / 8.0);
  EXPECT_EQ(dropped.scores[1], 2.0);
  EXPECT_TRUE(RealismReport::is_infinite(full.scores[2]));
  EXPECT_EQ(dropped.scores[2], 0.5);
  EXPECT_TRUE(dropped.drop_largest_radii);
}

TEST(Evaluate, RunsAndSeeds) {
  const auto a = oracle::gaussian_set(300, 8, 1);
  const auto b = oracle::gaussian_set(300, 8, 2, 0.3f);
  EvalConfig cfg;
  cfg.seed = 40;
  const auto score = evaluate(a, b, cfg);
  ASSERT_EQ(score.per_run.size(), 3u);
  double p = 0, r = 0;
  for (std::uint32_t i = 0; i < 3; ++i) {
    const auto& run = score.per_run[i];
    EXPECT_EQ(run.seed, 40u + i);
    EXPECT_EQ(run.hyperplanes, choose_H(600));
    const auto t = tables(a, b, choose_H(600), 40 + i);
    const auto single = precision_recall_lsh_knn(t.ref, t.eval, 3);
    EXPECT_EQ(run.precision, single.precision);
    EXPECT_EQ(run.recall, single.recall);
    EXPECT_EQ(run.stats, single.stats);
    p += run.precision;
    r += run.recall;
  }
  EXPECT_EQ(score.precision, p / 3);
  EXPECT_EQ(score.recall, r / 3);

  cfg.runs = 1;
  cfg.estimator = Estimator::lsh;
  cfg.hyperplanes = 4;
  const auto one = evaluate(a, b, cfg);
  const auto t = tables(a, b, 4, 40);
  EXPECT_EQ(one.precision, precision_recall_lsh(t.ref, t.eval).precision);
  EXPECT_EQ(one.per_run[0].hyperplanes, 4u);
}

TEST(Evaluate, KnnRunsAreIdentical) {
  const auto a = oracle::gaussian_set(100, 4, 1);
  const auto b = oracle::gaussian_set(90, 4, 2);
  EvalConfig cfg;
  cfg.estimator = Estimator::knn;
  cfg.seed = 9;
  const auto s = evaluate(a, b, cfg);
  ASSERT_EQ(s.per_run.size(), 3u);
  EXPECT_EQ(s.per_run[0].precision, s.per_run[2].precision);
  EXPECT_EQ(s.per_run[0].stats, s.per_run[1].stats);
  EXPECT_EQ(s.per_run[0].seed, s.per_run[1].seed);
  EXPECT_DOUBLE_EQ(s.precision, s.per_run[0].precision);
  EXPECT_EQ(s.total_stats().distance_evals, 3 * s.per_run[0].stats.distance_evals);
  EXPECT_THROW(evaluate(a, oracle::gaussian_set(5, 3, 1), cfg), Error);
}

TEST(Evaluate, IdenticalSetsAllEstimators) {
  const auto a = oracle::gaussian_set(200, 8, 3);
  for (auto e : {Estimator::lsh, Estimator::lsh_knn, Estimator::knn}) {
    EvalConfig cfg;
    cfg.estimator = e;
    const auto s = evaluate(a, a, cfg);
    EXPECT_EQ(s.precision, 1.0);
    EXPECT_EQ(s.recall, 1.0);
  }
}
