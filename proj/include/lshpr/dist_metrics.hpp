#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lshpr/embedding_io.hpp"

namespace lshpr {

/// First two sample moments of a set, in double precision.
struct MomentSummary {
  std::vector<double> mean;        // d
  std::vector<double> covariance;  // d x d row-major, unbiased (n - 1)
  std::size_t n = 0;
  std::size_t dim = 0;
};

MomentSummary moments(const EmbeddingSet& set);

/// Frechet distance between Gaussians with the given moments:
/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2).
/// Negative eigenvalues are clamped to 0 and the result to >= 0.
double fid_from_moments(const MomentSummary& a, const MomentSummary& b);

/// Requires at least 2 points per set.
double fid(const EmbeddingSet& a, const EmbeddingSet& b);

/// Mean over disjoint blocks of the unbiased MMD^2 estimate with kernel
/// k(x, y) = (x.y / d + 1)^3. Blocks take consecutive rows from each set and
/// any remainder is dropped. Default block size is min(n_a, n_b, 1000).
/// May be slightly negative.
double kid(const EmbeddingSet& a, const EmbeddingSet& b, std::optional<std::size_t> block_size = std::nullopt);

}  // namespace lshpr
