#include "lshpr/dist_metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "lshpr/error.hpp"

namespace lshpr {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix to_matrix(const EmbeddingSet& set, std::size_t first, std::size_t count) {
  RowMatrix m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(set.dim()));
  for (std::size_t i = 0; i < count; ++i) {
    const auto row = set.row(first + i);
    for (std::size_t j = 0; j < set.dim(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return m;
}

Eigen::MatrixXd covariance_matrix(const MomentSummary& s) {
  const auto d = static_cast<Eigen::Index>(s.dim);
  Eigen::MatrixXd c(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) c(i, j) = s.covariance[static_cast<std::size_t>(i * d + j)];
  return c;
}

double trace_sqrt_product(const Eigen::MatrixXd& sa, const Eigen::MatrixXd& sb) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_a(sa);
  if (eig_a.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Eigen::VectorXd root = eig_a.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a = eig_a.eigenvectors() * root.asDiagonal() * eig_a.eigenvectors().transpose();
  Eigen::MatrixXd m = sqrt_a * sb * sqrt_a;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_m(m, Eigen::EigenvaluesOnly);
  if (eig_m.info() != Eigen::Success) throw Error("eigendecomposition failed");
  return eig_m.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

// Unbiased MMD^2 for one pair of equally sized blocks.
double mmd2_unbiased(const RowMatrix& x, const RowMatrix& y) {
  const double d = static_cast<double>(x.cols());
  const double m = static_cast<double>(x.rows());
  auto kernel = [d](const Eigen::MatrixXd& gram) {
    return ((gram.array() / d) + 1.0).cube().matrix().eval();
  };
  const Eigen::MatrixXd kxx = kernel(x * x.transpose());
  const Eigen::MatrixXd kyy = kernel(y * y.transpose());
  // Both orientations, so swapping the arguments swaps two addends and the
  // estimate is exactly symmetric.
  const double sxy = kernel(x * y.transpose()).sum() + kernel(y * x.transpose()).sum();
  const double sxx = kxx.sum() - kxx.trace();
  const double syy = kyy.sum() - kyy.trace();
  return (sxx / (m * (m - 1.0)) + syy / (m * (m - 1.0))) - sxy / (m * m);
}

}  // namespace

MomentSummary moments(const EmbeddingSet& set) {
  if (set.size() < 2) throw Error("moment estimation needs at least 2 points");
  const std::size_t n = set.size();
  const std::size_t d = set.dim();
  MomentSummary s;
  s.n = n;
  s.dim = d;
  s.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = set.row(i);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  for (double& m : s.mean) m /= static_cast<double>(n);

  RowMatrix centered = to_matrix(set, 0, n);
  for (std::size_t j = 0; j < d; ++j) centered.col(static_cast<Eigen::Index>(j)).array() -= s.mean[j];
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());
  s.covariance.resize(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      s.covariance[i * d + j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return s;
}

double fid_from_moments(const MomentSummary& a, const MomentSummary& b) {
  if (a.dim != b.dim) throw Error("dimension mismatch between moment summaries");
  double mean_term = 0.0;
  for (std::size_t j = 0; j < a.dim; ++j) {
    const double diff = a.mean[j] - b.mean[j];
    mean_term += diff * diff;
  }
  const Eigen::MatrixXd sa = covariance_matrix(a);
  const Eigen::MatrixXd sb = covariance_matrix(b);
  const double value = mean_term + sa.trace() + sb.trace() - 2.0 * trace_sqrt_product(sa, sb);
  return std::max(0.0, value);
}

double fid(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.dim() != b.dim()) throw Error("dimension mismatch between sets");
  if (a.size() < 2 || b.size() < 2) throw Error("FID needs at least 2 points per set");
  return fid_from_moments(moments(a), moments(b));
}

double kid(const EmbeddingSet& a, const EmbeddingSet& b, std::optional<std::size_t> block_size) {
  if (a.dim() != b.dim()) throw Error("dimension mismatch between sets");
  const std::size_t n = std::min(a.size(), b.size());
  const std::size_t m = block_size.value_or(std::min<std::size_t>(n, 1000));
  if (m > n) {
    throw Error("KID block size " + std::to_string(m) + " exceeds the smaller set (" + std::to_string(n) + ")");
  }
  if (m < 2) throw Error("KID block size must be at least 2");

  const std::size_t blocks = n / m;
  double total = 0.0;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    total += mmd2_unbiased(to_matrix(a, blk * m, m), to_matrix(b, blk * m, m));
  }
  return total / static_cast<double>(blocks);
}

}  // namespace lshpr
