#include "lshpr/compress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lshpr/error.hpp"

namespace lshpr {

namespace {

constexpr double kGolden = 0.6180339887498949;

void check_bits(std::uint32_t bits) {
  if (bits < kMinBits || bits > kMaxBits) {
    throw Error("bits must be in [" + std::to_string(kMinBits) + ", " + std::to_string(kMaxBits) + "], got " +
                std::to_string(bits));
  }
}

double levels(std::uint32_t bits) { return static_cast<double>((1u << (bits - 1)) - 1u); }

float max_abs(std::span<const float> v) {
  float m = 0.0f;
  for (float x : v) m = std::max(m, std::fabs(x));
  return m;
}

double l1(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += std::fabs(static_cast<double>(x));
  return s;
}

// Clip to [-range, range], then round(c * L / range) * range / L.
void quantize_into(std::span<const float> in, double range, std::uint32_t bits, std::span<float> out) {
  const double steps = levels(bits);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double c = std::clamp(static_cast<double>(in[i]), -range, range);
    const double q = std::round(c * steps / range);
    out[i] = static_cast<float>(q * range / steps);
  }
}

WeightTensor with_values(const WeightTensor& like, std::vector<float> values) {
  return WeightTensor(std::move(values), like.shape(), like.name());
}

template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
  double a = lo;
  double b = hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

double gaussian_tail_mse(double alpha, double sigma) {
  const double z = alpha / sigma;
  const double tail = 0.5 * std::erfc(z / std::sqrt(2.0));
  const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return 2.0 * ((alpha * alpha + sigma * sigma) * tail - alpha * sigma * density);
}

double laplace_tail_mse(double alpha, double scale) { return 2.0 * scale * scale * std::exp(-alpha / scale); }

}  // namespace

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::lq: return "lq";
    case Scheme::mcq: return "mcq";
    case Scheme::ocs_lq: return "ocs-lq";
    case Scheme::aciq_lq: return "aciq-lq";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "lq") return Scheme::lq;
  if (name == "mcq") return Scheme::mcq;
  if (name == "ocs-lq" || name == "ocs_lq") return Scheme::ocs_lq;
  if (name == "aciq-lq" || name == "aciq_lq") return Scheme::aciq_lq;
  throw Error("unknown scheme '" + std::string(name) + "' (expected lq, mcq, ocs-lq or aciq-lq)");
}

void CompressionSpec::validate() const {
  switch (scheme) {
    case Scheme::mcq:
      if (mcq_samples == 0) throw Error("mcq needs --mcq-samples >= 1");
      break;
    case Scheme::ocs_lq:
      if (!(expand_ratio >= 0.0 && expand_ratio <= 1.0)) throw Error("expand ratio must be in [0, 1]");
      check_bits(bits);
      break;
    case Scheme::lq:
    case Scheme::aciq_lq:
      check_bits(bits);
      break;
  }
}

WeightTensor linear_quantize(const WeightTensor& x, std::uint32_t bits) {
  check_bits(bits);
  const float range = max_abs(x.values());
  if (range == 0.0f) return x;
  std::vector<float> out(x.size());
  quantize_into(x.values(), range, bits, out);
  return with_values(x, std::move(out));
}

WeightTensor quantize_with_range(const WeightTensor& x, std::uint32_t bits, float range) {
  check_bits(bits);
  if (!(range > 0.0f) || !std::isfinite(range)) throw Error("quantization range must be positive");
  std::vector<float> out(x.size());
  quantize_into(x.values(), range, bits, out);
  return with_values(x, std::move(out));
}

WeightTensor mcq_with_variates(const WeightTensor& x, std::span<const double> variates) {
  if (variates.empty()) throw Error("mcq needs at least one sample");
  const auto values = x.values();
  const double total = l1(values);
  if (total == 0.0) throw Error("mcq on an all-zero tensor");

  std::vector<double> cdf(values.size());
  double running = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    running += std::fabs(static_cast<double>(values[j]));
    cdf[j] = running / total;
  }
  // Pin the last non-empty bin to 1 so every variate in [0, 1) lands.
  for (std::size_t j = values.size(); j-- > 0;) {
    cdf[j] = 1.0;
    if (values[j] != 0.0f) break;
  }

  std::vector<std::uint64_t> hits(values.size(), 0);
  for (double u : variates) {
    if (!(u >= 0.0 && u < 1.0)) throw Error("mcq variates must lie in [0, 1)");
    const auto j = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    ++hits[j];
  }

  const double unit = total / static_cast<double>(variates.size());
  std::vector<float> out(values.size(), 0.0f);
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (hits[j] == 0) continue;
    const double magnitude = static_cast<double>(hits[j]) * unit;
    out[j] = static_cast<float>(values[j] < 0.0f ? -magnitude : magnitude);
  }
  return with_values(x, std::move(out));
}

WeightTensor mcq(const WeightTensor& x, std::uint32_t samples, std::uint64_t seed) {
  if (samples == 0) throw Error("mcq needs at least one sample");
  std::mt19937_64 rng(seed);
  std::vector<double> variates(samples);
  // 53 random bits scaled into [0, 1).
  for (double& u : variates) u = static_cast<double>(rng() >> 11) * 0x1p-53;
  return mcq_with_variates(x, variates);
}

std::size_t ocs_split_count(std::size_t n, double expand_ratio) {
  if (!(expand_ratio >= 0.0 && expand_ratio <= 1.0)) throw Error("expand ratio must be in [0, 1]");
  const double target = expand_ratio * static_cast<double>(n);
  const double count = std::ceil(target - 1e-9 * std::max(1.0, target));
  return std::min(n, static_cast<std::size_t>(std::max(0.0, count)));
}

OcsResult ocs_split_detailed(const WeightTensor& x, double expand_ratio) {
  const auto values = x.values();
  const std::size_t splits = ocs_split_count(values.size(), expand_ratio);

  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return std::fabs(values[a]) > std::fabs(values[b]);
  });
  order.resize(splits);

  std::vector<float> out(values.begin(), values.end());
  out.reserve(values.size() + splits);
  for (std::uint32_t j : order) {
    const float half = values[j] * 0.5f;
    out[j] = half;
    out.push_back(half);
  }
  OcsResult result{WeightTensor::flat(std::move(out), x.name()), std::move(order)};
  return result;
}

WeightTensor ocs_split(const WeightTensor& x, double expand_ratio) {
  return ocs_split_detailed(x, expand_ratio).tensor;
}

double mean_squared_error(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error("MSE over tensors of different length");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = static_cast<double>(a[i]) - b[i];
    s += e * e;
  }
  return s / static_cast<double>(a.size());
}

AciqFit aciq_fit(const WeightTensor& x, std::uint32_t bits) {
  check_bits(bits);
  const auto values = x.values();
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (float v : values) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (float v : values) {
    const double c = v - mean;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m4 /= n;
  const float range = max_abs(values);
  if (m2 == 0.0 || range == 0.0f) throw Error("aciq needs a non-constant tensor");

  AciqFit fit;
  fit.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  fit.model = std::fabs(fit.excess_kurtosis - 3.0) < std::fabs(fit.excess_kurtosis) ? ClipModel::laplace
                                                                                     : ClipModel::gaussian;

  const double max_range = range;
  const double steps = levels(bits);
  auto rounding_mse = [steps](double alpha) { return alpha * alpha / (12.0 * steps * steps); };
  if (fit.model == ClipModel::gaussian) {
    const double sigma = std::sqrt(m2);
    fit.model_threshold = golden_section(
        [&](double a) { return gaussian_tail_mse(a, sigma) + rounding_mse(a); }, 0.0, max_range, 1e-6 * max_range);
  } else {
    const double scale = std::sqrt(m2 / 2.0);
    fit.model_threshold = golden_section(
        [&](double a) { return laplace_tail_mse(a, scale) + rounding_mse(a); }, 0.0, max_range, 1e-6 * max_range);
  }

  std::vector<float> buffer(values.size());
  auto empirical = [&](double alpha) {
    quantize_into(values, alpha, bits, buffer);
    return mean_squared_error(values, buffer);
  };

  constexpr int kGrid = 64;
  int best_cell = kGrid;
  double best_mse = empirical(max_range);
  for (int i = 1; i < kGrid; ++i) {
    const double mse = empirical(max_range * i / kGrid);
    if (mse < best_mse) {
      best_mse = mse;
      best_cell = i;
    }
  }
  const double lo = max_range * (best_cell - 1) / kGrid;
  const double hi = max_range * std::min(best_cell + 1, kGrid) / kGrid;
  const double refined = golden_section(empirical, std::max(lo, 1e-12 * max_range), hi, 1e-4 * max_range);

  double best = max_range * best_cell / kGrid;
  for (double candidate : {refined, fit.model_threshold}) {
    if (!(candidate > 0.0)) continue;
    const double mse = empirical(candidate);
    if (mse < best_mse) {
      best_mse = mse;
      best = candidate;
    }
  }
  fit.threshold = best;
  return fit;
}

double aciq_clip_threshold(const WeightTensor& x, std::uint32_t bits) { return aciq_fit(x, bits).threshold; }

WeightTensor aciq_quantize_with_threshold(const WeightTensor& x, std::uint32_t bits, double threshold) {
  check_bits(bits);
  const float range = max_abs(x.values());
  if (range == 0.0f) return x;
  if (!(threshold > 0.0)) throw Error("clip threshold must be positive");
  std::vector<float> out(x.size());
  quantize_into(x.values(), std::min(threshold, static_cast<double>(range)), bits, out);
  return with_values(x, std::move(out));
}

WeightTensor aciq_quantize(const WeightTensor& x, std::uint32_t bits) {
  return aciq_quantize_with_threshold(x, bits, aciq_clip_threshold(x, bits));
}

std::pair<WeightTensor, CompressionReport> compress(const WeightTensor& x, const CompressionSpec& spec) {
  spec.validate();
  CompressionReport report;
  std::vector<std::uint32_t> split_sources;

  WeightTensor out = [&] {
    switch (spec.scheme) {
      case Scheme::lq: return linear_quantize(x, spec.bits);
      case Scheme::mcq: return mcq(x, spec.mcq_samples, spec.seed);
      case Scheme::ocs_lq: {
        OcsResult split = ocs_split_detailed(x, spec.expand_ratio);
        split_sources = std::move(split.split_indices);
        return linear_quantize(split.tensor, spec.bits);
      }
      case Scheme::aciq_lq: {
        const double alpha = aciq_clip_threshold(x, spec.bits);
        report.clip_threshold = alpha;
        return aciq_quantize_with_threshold(x, spec.bits, alpha);
      }
    }
    throw Error("unknown scheme");
  }();

  const auto in = x.values();
  const auto values = out.values();
  std::vector<float> folded(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(in.size()));
  for (std::size_t s = 0; s < split_sources.size(); ++s) folded[split_sources[s]] += values[in.size() + s];

  std::vector<float> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  report.distinct_levels =
      static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  report.pruned_fraction =
      static_cast<double>(std::count(values.begin(), values.end(), 0.0f)) / static_cast<double>(values.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    report.max_abs_error =
        std::max(report.max_abs_error, std::fabs(static_cast<double>(in[i]) - static_cast<double>(folded[i])));
  }
  report.l1_in = l1(in);
  report.l1_out = l1(values);
  return {std::move(out), report};
}

}  // namespace lshpr
