#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "qmc/frechet.hpp"
#include "qmc/inception.hpp"

namespace qmc {

enum class Metric { fid, is };
enum class ScheduleScheme { regular_in_n, regular_in_inv_n };
enum class ResampleMode { shuffle_prefix, with_replacement };

struct ScoreSeries {
  Metric metric = Metric::fid;
  std::vector<std::pair<std::int64_t, double>> entries;  // (n, score), n ascending
};

struct ExtrapolationFit {
  double intercept = 0.0;     // score at 1/n -> 0
  double slope = 0.0;         // bias constant
  double r_squared = 0.0;     // 1 by convention for a zero-variance response
  double residual_std = 0.0;
  double intercept_se = 0.0;
  double slope_se = 0.0;
  ScheduleScheme scheme = ScheduleScheme::regular_in_n;
  bool weighted = false;
};

struct InfinityConfig {
  std::int64_t pool_size = 50'000;
  int num_points = 15;            // scores computed for the fit
  std::int64_t min_batch = 5'000;  // smallest batch a score is trusted at
  ScheduleScheme scheme = ScheduleScheme::regular_in_n;
  int replicates = 1;
  bool weighted = false;
  ResampleMode resample = ResampleMode::shuffle_prefix;
};

// Batch sizes to evaluate the score at. regular_in_n spaces them evenly in
// n from min_batch to pool_size inclusive; regular_in_inv_n spaces 1/n
// evenly between 1/min_batch and 1/pool_size. Rounded to integers and
// deduplicated; fewer than 3 surviving values is a ConfigError.
std::vector<std::int64_t> batch_schedule(const InfinityConfig& config);

// Least squares of score on 1/n. weighted uses weights proportional to n
// (variance model Var ~ 1/n). The intercept estimates the score at
// unlimited sample size.
ExtrapolationFit fit_inverse_n(const ScoreSeries& series, bool weighted);

struct InfinityResult {
  ExtrapolationFit fit;       // fit of replicate 0
  ScoreSeries series;         // series of replicate 0
  std::vector<double> replicate_intercepts;
  double replicate_mean = 0.0;
  double replicate_std = 0.0;  // 0 when replicates == 1
  bool low_r2_warning = false;  // replicate-0 fit has r_squared < 0.5
};

// Generic engine: score_at(n, seed) must return the metric computed on a
// fresh seeded draw of n samples. Replicate r uses derive_seed(run_seed, r)
// and, within it, derive_seed(replicate_seed, i) for schedule entry i.
// Replicates run in parallel.
InfinityResult score_infinity(Metric metric,
                              const std::function<double(std::int64_t, std::uint64_t)>& score_at,
                              const InfinityConfig& config, std::uint64_t run_seed);

// FID extrapolated to unlimited sample count over the first
// config.pool_size rows of the pool.
InfinityResult fid_infinity(const FeatureMatrix& pool, const GaussianStats& ref,
                            const InfinityConfig& config, std::uint64_t run_seed,
                            double jitter = 0.0);

// Same for the Inception Score.
InfinityResult is_infinity(const PosteriorMatrix& pool, const InfinityConfig& config,
                           std::uint64_t run_seed);

}  // namespace qmc
