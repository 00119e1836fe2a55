#include "qmc/inception.hpp"

#include <cassert>
#include <cmath>
#include <vector>

#include "qmc/errors.hpp"
#include "qmc/rng.hpp"

namespace qmc {

namespace {

constexpr double kRowSumTol = 1e-6;

void validate(const PosteriorMatrix& posteriors) {
  if (posteriors.n() < 1) throw DataError("inception_score: need at least one row");
  if (posteriors.k() < 2) throw DataError("inception_score: need at least two classes");
  for (Eigen::Index i = 0; i < posteriors.n(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < posteriors.probs.cols(); ++j) {
      const double p = posteriors.probs(i, j);
      if (!(p >= 0.0 && p <= 1.0) || !std::isfinite(p)) {
        throw DataError("invalid posterior: entry (" + std::to_string(i) + "," +
                        std::to_string(j) + ") outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      throw DataError("invalid posterior: row " + std::to_string(i) + " sums to " +
                      std::to_string(sum));
    }
  }
}

double score_of_block(const Eigen::MatrixXd& probs) {
  const Eigen::Index n = probs.rows();
  const Eigen::Index k = probs.cols();
  Eigen::VectorXd marginal = probs.colwise().mean();

  double mean_kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double kl = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double p = probs(i, j);
      if (p > 0.0) {
        // marginal(j) >= p/n > 0 whenever p > 0: the marginal is the mean.
        assert(marginal(j) > 0.0);
        kl += p * (std::log(p) - std::log(marginal(j)));
      }
    }
    mean_kl += kl;
  }
  mean_kl /= static_cast<double>(n);
  return std::exp(mean_kl);
}

}  // namespace

double inception_score(const PosteriorMatrix& posteriors) {
  validate(posteriors);
  return score_of_block(posteriors.probs);
}

double is_at_n(const PosteriorMatrix& posteriors, std::int64_t n, std::uint64_t permutation_seed) {
  if (n < 1 || n > posteriors.n()) {
    throw ConfigError("is_at_n: n must lie in [1, rows]");
  }
  validate(posteriors);
  const auto perm = random_permutation(static_cast<std::size_t>(posteriors.n()), permutation_seed);
  Eigen::MatrixXd subset(n, posteriors.k());
  for (std::int64_t i = 0; i < n; ++i) subset.row(i) = posteriors.probs.row(perm[i]);
  return score_of_block(subset);
}

std::pair<double, double> is_with_splits(const PosteriorMatrix& posteriors, int splits,
                                         std::uint64_t seed) {
  if (splits < 1) throw ConfigError("is_with_splits: splits must be >= 1");
  if (splits > 1 && splits > posteriors.n() / 2) {
    throw ConfigError("is_with_splits: splits must not exceed rows/2");
  }
  validate(posteriors);

  const Eigen::Index n = posteriors.n();
  const auto perm = random_permutation(static_cast<std::size_t>(n), seed);
  Eigen::MatrixXd shuffled(n, posteriors.k());
  for (Eigen::Index i = 0; i < n; ++i) shuffled.row(i) = posteriors.probs.row(perm[i]);

  const Eigen::Index base = n / splits;
  std::vector<double> scores;
  scores.reserve(splits);
  for (int s = 0; s < splits; ++s) {
    const Eigen::Index begin = static_cast<Eigen::Index>(s) * base;
    const Eigen::Index size = s + 1 == splits ? n - begin : base;  // last takes the remainder
    scores.push_back(score_of_block(shuffled.middleRows(begin, size)));
  }

  double mean = 0.0;
  for (double v : scores) mean += v;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  if (scores.size() > 1) {
    for (double v : scores) var += (v - mean) * (v - mean);
    var /= static_cast<double>(scores.size() - 1);
  }
  return {mean, std::sqrt(var)};
}

}  // namespace qmc
