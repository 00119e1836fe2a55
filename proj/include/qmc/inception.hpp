#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>

namespace qmc {

// N x K class-posterior rows p(y | x_i). Rows must sum to 1 within 1e-6.
struct PosteriorMatrix {
  Eigen::MatrixXd probs;

  Eigen::Index n() const { return probs.rows(); }
  int k() const { return static_cast<int>(probs.cols()); }
};

// Inception Score with the marginal estimated from the same samples:
// exp of the mean row-wise KL divergence to the column-mean marginal.
// p log p is taken as 0 at p = 0, so one-hot rows are legal.
// Throws DataError for rows failing the stochasticity check.
double inception_score(const PosteriorMatrix& posteriors);

// Score of a seeded random subset of n rows.
double is_at_n(const PosteriorMatrix& posteriors, std::int64_t n, std::uint64_t permutation_seed);

// Mean and sample standard deviation of per-split scores after one seeded
// shuffle into `splits` contiguous blocks (the last block absorbs the
// remainder). std is 0 when splits == 1.
std::pair<double, double> is_with_splits(const PosteriorMatrix& posteriors, int splits,
                                         std::uint64_t seed);

}  // namespace qmc
