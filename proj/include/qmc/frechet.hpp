#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace qmc {

// N x d feature vectors (one row per sample). Entries must be finite.
struct FeatureMatrix {
  Eigen::MatrixXd data;

  Eigen::Index n() const { return data.rows(); }
  int dim() const { return static_cast<int>(data.cols()); }
};

// Mean vector and covariance matrix of a feature distribution.
struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::int64_t n_source = 0;  // samples used for the estimate; 0 = analytic

  int dim() const { return static_cast<int>(mean.size()); }
};

// Column means and the unbiased (1/(N-1)) sample covariance.
// Throws DataError when N < 2.
GaussianStats gaussian_stats(const FeatureMatrix& features);

// Frechet distance between two Gaussians,
//   ||m_a - m_b||^2 + Tr(C_a + C_b - 2 (C_a C_b)^{1/2}),
// with the cross term evaluated as Tr of the PSD square root of
// S = C_a^{1/2} C_b C_a^{1/2} (same trace, symmetric eigenproblem).
// jitter > 0 adds jitter * I to both covariances before anything else.
// Covariance eigenvalues below -1e-6 * max eigenvalue raise NumericError
// (not PSD); small negatives are clamped to zero. A trace term below
// -1e-6 raises NumericError; the final value is clipped at 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b, double jitter = 0.0);

// FID of a seeded random subset: shuffle rows with the permutation drawn
// from permutation_seed, keep the first n, fit stats, compare with ref.
double fid_at_n(const FeatureMatrix& gen_features, const GaussianStats& ref, std::int64_t n,
                std::uint64_t permutation_seed, double jitter = 0.0);

}  // namespace qmc
