#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lshpr/embedding_io.hpp"

namespace lshpr {

enum class Scheme { lq, mcq, ocs_lq, aciq_lq };

std::string_view to_string(Scheme s);
/// Accepts "lq", "mcq", "ocs-lq"/"ocs_lq", "aciq-lq"/"aciq_lq".
Scheme parse_scheme(std::string_view name);

inline constexpr std::uint32_t kMinBits = 2;
inline constexpr std::uint32_t kMaxBits = 16;

struct CompressionSpec {
  Scheme scheme = Scheme::lq;
  std::uint32_t bits = 8;          // lq, ocs_lq, aciq_lq
  std::uint32_t mcq_samples = 0;   // mcq
  double expand_ratio = 0.01;      // ocs_lq
  std::uint64_t seed = 0;          // mcq

  void validate() const;
};

/// Audit of a compressed tensor; every field is recomputable from the input
/// and the output.
struct CompressionReport {
  std::size_t distinct_levels = 0;
  double pruned_fraction = 0.0;
  /// Against the input; split entries are folded back onto their source.
  double max_abs_error = 0.0;
  double l1_in = 0.0;
  double l1_out = 0.0;
  std::optional<double> clip_threshold;
};

/// Symmetric linear quantization over the full dynamic range:
/// round(x * L / max|x|) * max|x| / L with L = 2^(b-1) - 1 and rounding half
/// away from zero. An all-zero tensor is returned unchanged.
WeightTensor linear_quantize(const WeightTensor& x, std::uint32_t bits);

/// Clip to [-range, range] and quantize with max|x| replaced by `range`.
WeightTensor quantize_with_range(const WeightTensor& x, std::uint32_t bits, float range);

/// Monte-Carlo quantization: N uniform variates are binned on the CDF of
/// |x| (index order); weight j becomes sign(x_j) * hits_j * sum|x| / N.
/// Weights never hit are pruned to exactly 0.
WeightTensor mcq(const WeightTensor& x, std::uint32_t samples, std::uint64_t seed);

/// mcq() with caller-supplied variates in [0, 1).
WeightTensor mcq_with_variates(const WeightTensor& x, std::span<const double> variates);

/// ceil(ratio * n), tolerant to the representation error of `ratio`.
std::size_t ocs_split_count(std::size_t n, double expand_ratio);

struct OcsResult {
  WeightTensor tensor;
  /// Source index of each appended half, in append order.
  std::vector<std::uint32_t> split_indices;
};

/// Outlier splitting: the ceil(r n) largest-magnitude weights (ties by lower
/// index) are halved in place and a second half is appended for each. The
/// output is flat with length n + ceil(r n).
OcsResult ocs_split_detailed(const WeightTensor& x, double expand_ratio);
WeightTensor ocs_split(const WeightTensor& x, double expand_ratio);

enum class ClipModel { gaussian, laplace };

struct AciqFit {
  ClipModel model = ClipModel::gaussian;
  double excess_kurtosis = 0.0;
  /// Minimizer of the model's expected clip + rounding error.
  double model_threshold = 0.0;
  /// Minimizer of the empirical quantization MSE; what aciq uses.
  double threshold = 0.0;
};

/// Picks the Gaussian or Laplacian model by excess kurtosis (0 vs 3), then
/// searches [0, max|x|] for the threshold with the smallest empirical MSE
/// between x and its clipped, quantized version (golden section to
/// 1e-4 * max|x|, seeded by a coarse grid and the model's optimum).
AciqFit aciq_fit(const WeightTensor& x, std::uint32_t bits);
double aciq_clip_threshold(const WeightTensor& x, std::uint32_t bits);

/// Clip at the ACIQ threshold, then quantize over [-alpha, alpha].
WeightTensor aciq_quantize(const WeightTensor& x, std::uint32_t bits);
/// Same with an explicit threshold; thresholds >= max|x| disable clipping.
WeightTensor aciq_quantize_with_threshold(const WeightTensor& x, std::uint32_t bits, double threshold);

double mean_squared_error(std::span<const float> a, std::span<const float> b);

std::pair<WeightTensor, CompressionReport> compress(const WeightTensor& x, const CompressionSpec& spec);

}  // namespace lshpr
