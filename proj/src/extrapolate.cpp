#include "qmc/extrapolate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qmc/errors.hpp"
#include "qmc/parallel.hpp"
#include "qmc/rng.hpp"

namespace qmc {

std::vector<std::int64_t> batch_schedule(const InfinityConfig& config) {
  if (config.num_points < 3) throw ConfigError("batch_schedule: need at least 3 points");
  if (config.min_batch < 1) throw ConfigError("batch_schedule: min_batch must be >= 1");
  if (config.min_batch >= config.pool_size) {
    throw ConfigError("batch_schedule: min_batch must be smaller than pool_size");
  }

  const int t = config.num_points;
  const double lo = static_cast<double>(config.min_batch);
  const double hi = static_cast<double>(config.pool_size);
  std::vector<std::int64_t> sizes;
  sizes.reserve(t);
  for (int i = 0; i < t; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(t - 1);
    double value;
    if (config.scheme == ScheduleScheme::regular_in_n) {
      value = lo + frac * (hi - lo);
    } else {
      const double inv = 1.0 / lo + frac * (1.0 / hi - 1.0 / lo);
      value = 1.0 / inv;
    }
    sizes.push_back(std::llround(value));
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  if (sizes.size() < 3) {
    throw ConfigError("batch_schedule: deduplication left fewer than 3 batch sizes");
  }
  return sizes;
}

ExtrapolationFit fit_inverse_n(const ScoreSeries& series, bool weighted) {
  const std::size_t k = series.entries.size();
  if (k < 3) throw ConfigError("fit_inverse_n: need at least 3 points");

  double w_sum = 0.0, x_mean = 0.0, y_mean = 0.0;
  std::vector<double> x(k), y(k), w(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& [n, score] = series.entries[i];
    if (n < 1) throw ConfigError("fit_inverse_n: n values must be positive");
    x[i] = 1.0 / static_cast<double>(n);
    y[i] = score;
    w[i] = weighted ? static_cast<double>(n) : 1.0;
    w_sum += w[i];
    x_mean += w[i] * x[i];
    y_mean += w[i] * y[i];
  }
  x_mean /= w_sum;
  y_mean /= w_sum;

  double sxx = 0.0, sxy = 0.0, syy = 0.0, xx_scale = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += w[i] * (x[i] - x_mean) * (x[i] - x_mean);
    sxy += w[i] * (x[i] - x_mean) * (y[i] - y_mean);
    syy += w[i] * (y[i] - y_mean) * (y[i] - y_mean);
    xx_scale += w[i] * x[i] * x[i];
  }
  if (!(sxx > 1e-20 * xx_scale)) {
    throw NumericError("fit_inverse_n: degenerate design, all 1/n values equal");
  }

  ExtrapolationFit fit;
  fit.weighted = weighted;
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;

  double ssr = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += w[i] * r * r;
  }
  // Zero-variance response: a flat line is a perfect fit by convention.
  const double scale = std::max(1.0, y_mean * y_mean);
  fit.r_squared = syy <= 1e-24 * scale ? 1.0 : 1.0 - ssr / syy;
  fit.r_squared = std::clamp(fit.r_squared, 0.0, 1.0);

  const double dof = static_cast<double>(k) - 2.0;
  const double sigma2 = dof > 0.0 ? ssr / dof : 0.0;  // in the weighted metric
  fit.residual_std = std::sqrt(sigma2 * static_cast<double>(k) / w_sum);
  fit.slope_se = std::sqrt(sigma2 / sxx);
  fit.intercept_se = std::sqrt(sigma2 * (1.0 / w_sum + x_mean * x_mean / sxx));
  return fit;
}

InfinityResult score_infinity(Metric metric,
                              const std::function<double(std::int64_t, std::uint64_t)>& score_at,
                              const InfinityConfig& config, std::uint64_t run_seed) {
  if (config.replicates < 1) throw ConfigError("score_infinity: replicates must be >= 1");
  const auto schedule = batch_schedule(config);

  std::vector<ScoreSeries> series(config.replicates);
  std::vector<ExtrapolationFit> fits(config.replicates);
  parallel_for(config.replicates, [&](std::int64_t r) {
    const std::uint64_t rep_seed = derive_seed(run_seed, static_cast<std::uint64_t>(r));
    ScoreSeries s;
    s.metric = metric;
    s.entries.reserve(schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      const std::uint64_t batch_seed = derive_seed(rep_seed, i);
      s.entries.emplace_back(schedule[i], score_at(schedule[i], batch_seed));
    }
    fits[r] = fit_inverse_n(s, config.weighted);
    fits[r].scheme = config.scheme;
    series[r] = std::move(s);
  });

  InfinityResult result;
  result.fit = fits[0];
  result.series = std::move(series[0]);
  result.low_r2_warning = result.fit.r_squared < 0.5;
  result.replicate_intercepts.reserve(config.replicates);
  for (const auto& f : fits) result.replicate_intercepts.push_back(f.intercept);

  double mean = 0.0;
  for (double v : result.replicate_intercepts) mean += v;
  mean /= static_cast<double>(result.replicate_intercepts.size());
  double var = 0.0;
  if (result.replicate_intercepts.size() > 1) {
    for (double v : result.replicate_intercepts) var += (v - mean) * (v - mean);
    var /= static_cast<double>(result.replicate_intercepts.size() - 1);
  }
  result.replicate_mean = mean;
  result.replicate_std = std::sqrt(var);
  return result;
}

namespace {

// Bootstrap subset: n row indices drawn with replacement.
template <typename Mat>
Mat resample_rows(const Mat& source, std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Mat out(n, source.cols());
  const auto rows = static_cast<std::uint64_t>(source.rows());
  for (std::int64_t i = 0; i < n; ++i) {
    out.row(i) = source.row(static_cast<Eigen::Index>(uniform_below(rng, rows)));
  }
  return out;
}

}  // namespace

InfinityResult fid_infinity(const FeatureMatrix& pool, const GaussianStats& ref,
                            const InfinityConfig& config, std::uint64_t run_seed, double jitter) {
  if (pool.n() < config.pool_size) {
    throw ConfigError("fid_infinity: pool has " + std::to_string(pool.n()) +
                      " rows, config.pool_size needs " + std::to_string(config.pool_size));
  }
  FeatureMatrix view{pool.data.topRows(config.pool_size)};
  auto score_at = [&view, &ref, &config, jitter](std::int64_t n, std::uint64_t seed) {
    if (config.resample == ResampleMode::shuffle_prefix) {
      return fid_at_n(view, ref, n, seed, jitter);
    }
    FeatureMatrix sample{resample_rows(view.data, n, seed)};
    return frechet_distance(gaussian_stats(sample), ref, jitter);
  };
  return score_infinity(Metric::fid, score_at, config, run_seed);
}

InfinityResult is_infinity(const PosteriorMatrix& pool, const InfinityConfig& config,
                           std::uint64_t run_seed) {
  if (pool.n() < config.pool_size) {
    throw ConfigError("is_infinity: pool has " + std::to_string(pool.n()) +
                      " rows, config.pool_size needs " + std::to_string(config.pool_size));
  }
  PosteriorMatrix view{pool.probs.topRows(config.pool_size)};
  auto score_at = [&view, &config](std::int64_t n, std::uint64_t seed) {
    if (config.resample == ResampleMode::shuffle_prefix) {
      return is_at_n(view, n, seed);
    }
    PosteriorMatrix sample{resample_rows(view.probs, n, seed)};
    return inception_score(sample);
  };
  return score_infinity(Metric::is, score_at, config, run_seed);
}

}  // namespace qmc
