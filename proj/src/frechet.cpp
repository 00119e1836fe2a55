#include "qmc/frechet.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "qmc/errors.hpp"
#include "qmc/rng.hpp"

namespace qmc {

namespace {

constexpr double kPsdRelTol = 1e-6;
constexpr double kNegativityTol = 1e-6;

// PSD square root by symmetric eigendecomposition; rejects matrices with
// eigenvalues below -kPsdRelTol * max eigenvalue, clamps round-off
// negatives at zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* label) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) {
    throw NumericError(std::string("frechet_distance: eigendecomposition failed for ") + label);
  }
  Eigen::VectorXd vals = eig.eigenvalues();
  const double max_eig = std::max(vals.maxCoeff(), 0.0);
  const double floor = -kPsdRelTol * std::max(max_eig, 1e-300);
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) < floor) {
      throw NumericError(std::string("frechet_distance: covariance ") + label +
                         " is not PSD (eigenvalue " + std::to_string(vals(i)) + ")");
    }
    vals(i) = vals(i) > 0.0 ? std::sqrt(vals(i)) : 0.0;
  }
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

GaussianStats gaussian_stats(const FeatureMatrix& features) {
  const Eigen::Index n = features.n();
  if (n < 2) throw DataError("gaussian_stats: need at least 2 samples");

  GaussianStats stats;
  stats.mean = features.data.colwise().mean();
  Eigen::MatrixXd centered = features.data.rowwise() - stats.mean.transpose();
  stats.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  stats.cov = 0.5 * (stats.cov + stats.cov.transpose()).eval();  // exact symmetry
  stats.n_source = n;
  return stats;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b, double jitter) {
  if (a.dim() != b.dim()) {
    throw ShapeError("frechet_distance: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  }
  Eigen::MatrixXd cov_a = a.cov;
  Eigen::MatrixXd cov_b = b.cov;
  if (jitter > 0.0) {
    cov_a.diagonal().array() += jitter;
    cov_b.diagonal().array() += jitter;
  }

  const Eigen::MatrixXd sqrt_a = psd_sqrt(cov_a, "a");
  Eigen::MatrixXd inner = sqrt_a * cov_b * sqrt_a;
  inner = 0.5 * (inner + inner.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner);
  if (eig.info() != Eigen::Success) {
    throw NumericError("frechet_distance: eigendecomposition of the cross term failed");
  }
  double trace_sqrt = 0.0;
  const double max_eig = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  const double floor = -kPsdRelTol * std::max(max_eig, 1e-300);
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double v = eig.eigenvalues()(i);
    if (v < floor) {
      throw NumericError("frechet_distance: cross term is not PSD (eigenvalue " +
                         std::to_string(v) + ")");
    }
    if (v > 0.0) trace_sqrt += std::sqrt(v);
  }

  const double trace_term = cov_a.trace() + cov_b.trace() - 2.0 * trace_sqrt;
  if (trace_term < -kNegativityTol) {
    throw NumericError("frechet_distance: trace term " + std::to_string(trace_term) +
                       " below the negativity tolerance");
  }
  const double value = (a.mean - b.mean).squaredNorm() + trace_term;
  return value > 0.0 ? value : 0.0;
}

double fid_at_n(const FeatureMatrix& gen_features, const GaussianStats& ref, std::int64_t n,
                std::uint64_t permutation_seed, double jitter) {
  if (n > gen_features.n()) {
    throw ConfigError("fid_at_n: n exceeds the available feature rows");
  }
  const auto perm = random_permutation(static_cast<std::size_t>(gen_features.n()), permutation_seed);
  FeatureMatrix subset;
  subset.data.resize(n, gen_features.dim());
  for (std::int64_t i = 0; i < n; ++i) subset.data.row(i) = gen_features.data.row(perm[i]);
  return frechet_distance(gaussian_stats(subset), ref, jitter);
}

}  // namespace qmc
