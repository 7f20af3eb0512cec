#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "lshpr/compress.hpp"
#include "lshpr/error.hpp"

using namespace lshpr;

namespace {

std::vector<float> vals(const WeightTensor& t) { return {t.values().begin(), t.values().end()}; }

WeightTensor normal_tensor(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::vector<float> v(n);
  for (auto& x : v) x = g(rng);
  return WeightTensor::flat(std::move(v));
}

WeightTensor laplace_tensor(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<float> e(1.0f);
  std::bernoulli_distribution sign;
  std::vector<float> v(n);
  for (auto& x : v) x = sign(rng) ? e(rng) : -e(rng);
  return WeightTensor::flat(std::move(v));
}

float max_abs(const WeightTensor& t) {
  float m = 0;
  for (float x : t.values()) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

TEST(LinearQuantize, WorkedExample) {
  const auto q = linear_quantize(WeightTensor::flat({0.4f, -1.0f, 0.25f}), 2);
  EXPECT_EQ(vals(q), (std::vector<float>{0.0f, -1.0f, 0.0f}));
}

TEST(LinearQuantize, HalfRoundsAwayFromZero) {
  // L = 3 at 3 bits: 0.5 * 3 = 1.5 -> 2 and -1.5 -> -2.
  const auto q = linear_quantize(WeightTensor::flat({0.5f, -0.5f, 1.0f}), 3);
  EXPECT_FLOAT_EQ(q.values()[0], 2.0f / 3.0f);
  EXPECT_FLOAT_EQ(q.values()[1], -2.0f / 3.0f);
  EXPECT_EQ(q.values()[2], 1.0f);
}

TEST(LinearQuantize, ZerosShapeAndBits) {
  const WeightTensor zeros({0, 0, 0, 0}, {2, 2}, "z");
  EXPECT_EQ(linear_quantize(zeros, 4), zeros);
  const WeightTensor t({1, -2, 3, 4, 5, 6}, {2, 3}, "w");
  const auto q = linear_quantize(t, 8);
  EXPECT_EQ(q.shape(), t.shape());
  EXPECT_EQ(q.name(), "w");
  EXPECT_THROW(linear_quantize(t, 1), Error);
  EXPECT_THROW(linear_quantize(t, 17), Error);
  EXPECT_NO_THROW(linear_quantize(t, 16));
}

TEST(LinearQuantize, PropertiesOverRandomTensors) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto x = normal_tensor(257, seed);
    const float range = max_abs(x);
    for (std::uint32_t b : {2u, 3u, 4u, 8u}) {
      const auto q = linear_quantize(x, b);
      const double steps = (1u << (b - 1)) - 1u;
      std::set<float> levels(q.values().begin(), q.values().end());
      EXPECT_LE(levels.size(), 2 * steps + 1);
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_LE(std::fabs(q.values()[i] - x.values()[i]), range / (2 * steps) * (1 + 1e-5));
      }
      EXPECT_EQ(linear_quantize(q, b), q) << "b=" << b;

      std::vector<float> neg(x.size());
      std::transform(x.values().begin(), x.values().end(), neg.begin(), [](float v) { return -v; });
      const auto qn = linear_quantize(WeightTensor::flat(neg), b);
      for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(qn.values()[i], -q.values()[i]);
    }
  }
}

TEST(QuantizeWithRange, Clips) {
  const auto q = quantize_with_range(WeightTensor::flat({-5, 0.5f, 5}), 2, 1.0f);
  EXPECT_EQ(vals(q), (std::vector<float>{-1, 1, 1}));
  EXPECT_THROW(quantize_with_range(WeightTensor::flat({1}), 2, 0.0f), Error);
}

TEST(Mcq, WorkedVariates) {
  const std::vector<double> u{0.1, 0.7};
  const auto q = mcq_with_variates(WeightTensor::flat({0.5f, -0.5f}), u);
  EXPECT_EQ(vals(q), (std::vector<float>{0.5f, -0.5f}));

  const std::vector<double> same{0.1, 0.2};
  const auto p = mcq_with_variates(WeightTensor::flat({0.5f, -0.5f}), same);
  EXPECT_EQ(vals(p), (std::vector<float>{1.0f, 0.0f}));
}

TEST(Mcq, ZeroWeightsAreNeverHit) {
  const std::vector<double> u{0.0, 0.25, 0.5, 0.999999};
  const auto q = mcq_with_variates(WeightTensor::flat({0, 1, 0, -1, 0}), u);
  EXPECT_EQ(q.values()[0], 0.0f);
  EXPECT_EQ(q.values()[2], 0.0f);
  EXPECT_EQ(q.values()[4], 0.0f);
  EXPECT_EQ(q.values()[1], 1.0f);
  EXPECT_EQ(q.values()[3], -1.0f);
}

TEST(Mcq, ConservesL1AndSign) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = normal_tensor(300, seed);
    const auto q = mcq(x, 150, seed);
    double in = 0, out = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      in += std::fabs(x.values()[i]);
      out += std::fabs(q.values()[i]);
      if (q.values()[i] != 0.0f) {
        EXPECT_EQ(std::signbit(q.values()[i]), std::signbit(x.values()[i]));
      }
    }
    EXPECT_NEAR(out, in, 1e-5 * in);
    EXPECT_EQ(mcq(x, 150, seed), q);
  }
}

TEST(Mcq, SingleSample) {
  const auto x = normal_tensor(50, 3);
  const auto q = mcq(x, 1, 9);
  int nonzero = 0;
  double total = 0;
  for (float v : x.values()) total += std::fabs(v);
  for (float v : q.values()) {
    if (v != 0.0f) {
      ++nonzero;
      EXPECT_NEAR(std::fabs(v), total, 1e-5 * total);
    }
  }
  EXPECT_EQ(nonzero, 1);
}

TEST(Mcq, UnbiasedOverSeeds) {
  const auto x = WeightTensor::flat({0.9f, -0.1f, 0.3f, -2.0f, 0.05f, 1.2f, -0.6f, 0.4f});
  const int seeds = 1000;
  std::vector<double> sum(8, 0), sum2(8, 0);
  for (int s = 0; s < seeds; ++s) {
    const auto q = mcq(x, 16, s);
    for (int j = 0; j < 8; ++j) {
      sum[j] += q.values()[j];
      sum2[j] += static_cast<double>(q.values()[j]) * q.values()[j];
    }
  }
  for (int j = 0; j < 8; ++j) {
    const double mean = sum[j] / seeds;
    const double var = (sum2[j] - seeds * mean * mean) / (seeds - 1);
    const double se = std::sqrt(var / seeds);
    EXPECT_LE(std::fabs(mean - x.values()[j]), 3 * se) << "weight " << j;
  }
}

TEST(Mcq, Errors) {
  EXPECT_THROW(mcq(WeightTensor::flat({1}), 0, 1), Error);
  EXPECT_THROW(mcq(WeightTensor::flat({0, 0}), 5, 1), Error);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(mcq_with_variates(WeightTensor::flat({1}), bad), Error);
}

TEST(Ocs, WorkedExample) {
  const auto r = ocs_split_detailed(WeightTensor::flat({4, 1, 1}), 0.1);
  EXPECT_EQ(vals(r.tensor), (std::vector<float>{2, 1, 1, 2}));
  EXPECT_EQ(r.split_indices, (std::vector<std::uint32_t>{0}));
}

TEST(Ocs, ZeroRatioAndCounts) {
  const auto x = normal_tensor(40, 1);
  EXPECT_EQ(vals(ocs_split(x, 0.0)), vals(x));
  EXPECT_EQ(ocs_split_count(1000, 0.01), 10u);
  EXPECT_EQ(ocs_split_count(100, 0.07), 7u);
  EXPECT_EQ(ocs_split_count(3, 1.0), 3u);
  EXPECT_EQ(ocs_split_count(10, 0.15), 2u);
  EXPECT_THROW(ocs_split_count(10, 1.5), Error);
  EXPECT_THROW(ocs_split_count(10, -0.1), Error);
}

TEST(Ocs, SumPreservedAndLength) {
  const auto x = normal_tensor(1000, 5);
  const auto r = ocs_split_detailed(x, 0.01);
  ASSERT_EQ(r.tensor.size(), 1010u);
  EXPECT_EQ(r.tensor.shape(), (std::vector<std::uint32_t>{1010}));
  std::vector<float> folded(r.tensor.values().begin(), r.tensor.values().begin() + 1000);
  for (std::size_t s = 0; s < r.split_indices.size(); ++s) folded[r.split_indices[s]] += r.tensor.values()[1000 + s];
  // Halving a float is exact, so each pair sums back to the original.
  EXPECT_EQ(folded, vals(x));

  // The split entries are the largest magnitudes.
  std::vector<float> mags;
  for (float v : x.values()) mags.push_back(std::fabs(v));
  std::sort(mags.rbegin(), mags.rend());
  for (auto j : r.split_indices) EXPECT_GE(std::fabs(x.values()[j]), mags[9]);
  EXPECT_LT(max_abs(r.tensor), mags[0]);
}

TEST(Ocs, TiesPreferLowerIndex) {
  const auto r = ocs_split_detailed(WeightTensor::flat({1, -3, 3, 3}), 0.5);
  EXPECT_EQ(r.split_indices, (std::vector<std::uint32_t>{1, 2}));
}

TEST(Aciq, ClipsNormalDataAtLowBits) {
  const auto x = normal_tensor(100000, 11);
  const float range = max_abs(x);
  for (std::uint32_t b : {2u, 3u, 4u}) {
    const auto fit = aciq_fit(x, b);
    EXPECT_EQ(fit.model, ClipModel::gaussian);
    EXPECT_LT(fit.threshold, range) << "b=" << b;
    EXPECT_GT(fit.threshold, 0.0);
  }
}

TEST(Aciq, HighBitsBarelyClip) {
  const auto x = normal_tensor(20000, 12);
  EXPECT_GE(aciq_clip_threshold(x, 16), 0.9 * max_abs(x));
}

TEST(Aciq, SignSymmetric) {
  const auto x = laplace_tensor(5000, 2);
  std::vector<float> neg(x.size());
  std::transform(x.values().begin(), x.values().end(), neg.begin(), [](float v) { return -v; });
  for (std::uint32_t b : {2u, 4u}) {
    EXPECT_EQ(aciq_clip_threshold(x, b), aciq_clip_threshold(WeightTensor::flat(neg), b));
  }
}

TEST(Aciq, NoClipReproducesLinear) {
  const auto x = normal_tensor(500, 3);
  for (std::uint32_t b : {2u, 5u}) {
    EXPECT_EQ(aciq_quantize_with_threshold(x, b, max_abs(x)), linear_quantize(x, b));
    EXPECT_EQ(aciq_quantize_with_threshold(x, b, 10.0 * max_abs(x)), linear_quantize(x, b));
  }
}

TEST(Aciq, LaplaceClippingLowersError) {
  const auto x = laplace_tensor(100000, 4);
  for (std::uint32_t b : {2u, 3u, 4u}) {
    const auto fit = aciq_fit(x, b);
    EXPECT_EQ(fit.model, ClipModel::laplace);
    const double clipped = mean_squared_error(x.values(), aciq_quantize(x, b).values());
    const double plain = mean_squared_error(x.values(), linear_quantize(x, b).values());
    EXPECT_LE(clipped, plain) << "b=" << b;
  }
}

TEST(Aciq, RejectsConstantTensor) {
  EXPECT_THROW(aciq_fit(WeightTensor::flat({2, 2, 2}), 4), Error);
}

TEST(Compress, ReportFields) {
  const auto x = WeightTensor::flat({0.4f, -1.0f, 0.25f});
  CompressionSpec spec;
  spec.bits = 2;
  const auto [out, report] = compress(x, spec);
  EXPECT_EQ(vals(out), (std::vector<float>{0, -1, 0}));
  EXPECT_EQ(report.distinct_levels, 2u);
  EXPECT_DOUBLE_EQ(report.pruned_fraction, 2.0 / 3.0);
  EXPECT_NEAR(report.max_abs_error, 0.4, 1e-7);
  EXPECT_NEAR(report.l1_in, 1.65, 1e-7);
  EXPECT_DOUBLE_EQ(report.l1_out, 1.0);
  EXPECT_FALSE(report.clip_threshold.has_value());
}

TEST(Compress, OcsFoldsErrorBackOntoSource) {
  CompressionSpec spec{Scheme::ocs_lq, 8, 0, 0.1, 0};
  const auto [out, report] = compress(WeightTensor::flat({4, 1, 1}), spec);
  EXPECT_EQ(out.size(), 4u);
  // Halves 2 + 2 are exact at the new range 2, so the folded error is that of the 1s.
  EXPECT_LT(report.max_abs_error, 2.0 / 127);
}

TEST(Compress, AciqReportsThresholdAndMcqIsSeeded) {
  const auto x = normal_tensor(2000, 8);
  const auto [aout, areport] = compress(x, CompressionSpec{Scheme::aciq_lq, 3, 0, 0, 0});
  ASSERT_TRUE(areport.clip_threshold.has_value());
  EXPECT_DOUBLE_EQ(*areport.clip_threshold, aciq_clip_threshold(x, 3));
  EXPECT_LE(areport.distinct_levels, 7u);

  const CompressionSpec m{Scheme::mcq, 8, 500, 0, 42};
  EXPECT_EQ(compress(x, m).first, mcq(x, 500, 42));
  EXPECT_NEAR(compress(x, m).second.l1_out, compress(x, m).second.l1_in, 1e-6 * compress(x, m).second.l1_in);
}

TEST(Compress, SpecValidation) {
  EXPECT_THROW((CompressionSpec{Scheme::mcq, 8, 0, 0, 0}.validate()), Error);
  EXPECT_THROW((CompressionSpec{Scheme::ocs_lq, 8, 0, 1.5, 0}.validate()), Error);
  EXPECT_THROW((CompressionSpec{Scheme::lq, 1, 0, 0, 0}.validate()), Error);
  EXPECT_NO_THROW((CompressionSpec{Scheme::mcq, 1, 3, 0, 0}.validate()));
  EXPECT_EQ(parse_scheme("ocs_lq"), Scheme::ocs_lq);
  EXPECT_EQ(parse_scheme("aciq-lq"), Scheme::aciq_lq);
  EXPECT_EQ(to_string(Scheme::ocs_lq), "ocs-lq");
  EXPECT_THROW(parse_scheme("kmeans"), Error);
}
