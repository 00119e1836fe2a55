#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "qmc/extrapolate.hpp"
#include "qmc/frechet.hpp"
#include "qmc/gaussianize.hpp"
#include "qmc/inception.hpp"

namespace qmc {

// Pushes standard-normal latents through z -> A z + b, so the feature
// distribution is exactly N(b, A A^T) and every limiting score is known.
struct AffineGaussianGenerator {
  Eigen::MatrixXd weight;  // d_out x d_in
  Eigen::VectorXd bias;    // d_out

  int latent_dim() const { return static_cast<int>(weight.cols()); }
  int feature_dim() const { return static_cast<int>(weight.rows()); }
  Eigen::MatrixXd pushforward_cov() const { return weight * weight.transpose(); }
};

FeatureMatrix generate_features(const AffineGaussianGenerator& gen, const SamplerSpec& sampler,
                                NormalTransform transform, std::uint64_t start_index,
                                std::int64_t n);

// Seeded dense generator with entries scale * z_ij / sqrt(latent_dim) and
// zero bias, so the pushforward covariance concentrates near scale^2 * I.
AffineGaussianGenerator random_affine_generator(int feature_dim, int latent_dim,
                                                std::uint64_t seed, double scale = 1.0);

// Frechet distance between the exact pushforward N(b, A A^T) and the
// reference moments; no sampling anywhere.
double true_fid(const AffineGaussianGenerator& gen, const Eigen::VectorXd& ref_mean,
                const Eigen::MatrixXd& ref_cov);

// Two-class posterior model: p(1|x) ~ Beta(alpha, beta), rows (p, 1-p).
struct TwoClassPosteriorOracle {
  double alpha = 1.0;
  double beta = 1.0;
};

PosteriorMatrix generate_posteriors(const TwoClassPosteriorOracle& oracle,
                                    const SamplerSpec& sampler, std::uint64_t start_index,
                                    std::int64_t n);

struct BruteForceScore {
  double value = 0.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
};

// Brute-force limiting Inception Score of the oracle:
// exp(E[p log p + (1-p) log(1-p)] + H(p_bar)) with p_bar analytic and the
// expectation estimated from `oracle_samples` Beta draws.
BruteForceScore true_is(const TwoClassPosteriorOracle& oracle,
                        std::int64_t oracle_samples = 10'000'000, std::uint64_t seed = 0);

// One sampler column of a bias/variance study.
struct StudySampler {
  std::string name;          // e.g. "normal", "sobol_inv", "sobol_bm"
  SamplerSpec spec;
  NormalTransform transform = NormalTransform::icdf;
};

StudySampler normal_sampler(int dimension);
StudySampler sobol_inv_sampler(int dimension);
StudySampler sobol_bm_sampler(int dimension);

struct StudyCell {
  std::int64_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> scores;  // one per replicate
};

struct SamplerSeries {
  std::string name;
  std::vector<StudyCell> cells;
  ExtrapolationFit mean_fit;   // per-n means vs 1/n (the plotted line)
  ExtrapolationFit point_fit;  // every replicate point vs 1/n (honest SEs)
  std::vector<double> f_values;  // per-cell baseline-variance / this-variance
  double pooled_f = 0.0;         // summed baseline variance / summed variance
  double mean_f = 0.0;           // mean of the per-cell ratios
  double unit_discrepancy = 0.0;  // centered L2 of 1024 raw unit points
};

struct StudyReport {
  Metric metric = Metric::fid;
  std::vector<std::int64_t> n_grid;
  int replicates = 0;
  std::uint64_t seed = 0;
  int baseline_index = -1;  // sampler the F values are measured against
  std::vector<SamplerSeries> samplers;
};

// Per (sampler, n, replicate): a fresh point set (distinct scramble or PRNG
// seed per replicate) of size n, the score against ref. Cell seeds are
// derive_seed(derive_seed(derive_seed(seed, sampler_idx), n_idx), r), so
// studies reproduce exactly. Cells run in parallel.
StudyReport bias_study(const AffineGaussianGenerator& gen, const GaussianStats& ref,
                       const std::vector<StudySampler>& samplers,
                       const std::vector<std::int64_t>& n_grid, int replicates,
                       std::uint64_t seed);

StudyReport bias_study(const TwoClassPosteriorOracle& oracle,
                       const std::vector<StudySampler>& samplers,
                       const std::vector<std::int64_t>& n_grid, int replicates,
                       std::uint64_t seed);

struct CrossingOptions {
  std::vector<std::int64_t> n_grid = {250, 500, 1000, 2000, 4000, 8000, 14000, 20000};
  int replicates = 50;
  std::uint64_t seed = 0;
  // extrapolation settings used for the intercept-agreement check
  std::int64_t pool_size = 20'000;
  std::int64_t min_batch = 500;
  int num_points = 15;
  int inner_replicates = 8;  // per-pool extrapolations averaged per ranking
};

struct CrossingReport {
  std::vector<std::int64_t> n_grid;
  std::vector<double> mean_a, std_a, mean_b, std_b;
  std::vector<std::vector<double>> scores_a, scores_b;  // [n_idx][replicate]
  double true_fid_a = 0.0, true_fid_b = 0.0;
  double crossing_n = 0.0;        // where the mean curves change order
  double flip_fraction = 0.0;     // replicates whose smallest-n/largest-n rankings differ
  double intercept_agreement = 0.0;  // replicates whose intercept ranking matches truth
  int replicates = 0;
};

// Reproduces the ranking-flip phenomenon: two generators whose finite-n
// score ordering inverts across the grid while extrapolated intercepts
// keep the true ordering. Throws ConstructionError when the mean curves
// never change order on the grid.
CrossingReport crossing_demo(const AffineGaussianGenerator& gen_a,
                             const AffineGaussianGenerator& gen_b, const GaussianStats& ref,
                             const CrossingOptions& options);

// Built-in generator pair (and reference) tuned so the curves cross inside
// the default grid.
struct CrossingSetup {
  AffineGaussianGenerator gen_a;
  AffineGaussianGenerator gen_b;
  GaussianStats ref;
};
CrossingSetup default_crossing_setup();

}  // namespace qmc
