#include <doctest.h>

#include <cmath>
#include <random>

#include "qmc/extrapolate.hpp"
#include "qmc/oracles.hpp"
#include "qmc/rng.hpp"

using namespace qmc;

namespace {

// Independent normal-equations solve in long double.
struct OlsOracle {
  long double intercept, slope;
};

OlsOracle ols_oracle(const ScoreSeries& series, bool weighted) {
  long double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [n, y] : series.entries) {
    const long double w = weighted ? static_cast<long double>(n) : 1.0L;
    const long double x = 1.0L / static_cast<long double>(n);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const long double det = sw * sxx - sx * sx;
  return {(sxx * sy - sx * sxy) / det, (sw * sxy - sx * sy) / det};
}

InfinityConfig config(std::int64_t min_batch, std::int64_t pool, int t,
                      ScheduleScheme scheme = ScheduleScheme::regular_in_n) {
  InfinityConfig c;
  c.min_batch = min_batch;
  c.pool_size = pool;
  c.num_points = t;
  c.scheme = scheme;
  return c;
}

}  // namespace

TEST_CASE("batch_schedule spacing rules") {
  auto arithmetic = batch_schedule(config(5000, 50000, 10));
  REQUIRE(arithmetic.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(arithmetic[i] == 5000 * (i + 1));

  auto inv = batch_schedule(config(5000, 50000, 3, ScheduleScheme::regular_in_inv_n));
  REQUIRE(inv.size() == 3);
  CHECK(inv[0] == 5000);
  CHECK(inv[1] == 9091);  // 1/n midway between 1/5000 and 1/50000
  CHECK(inv[2] == 50000);

  auto tight = batch_schedule(config(4998, 5000, 3));
  REQUIRE(tight.size() == 3);
  CHECK(tight[0] == 4998);
  CHECK(tight[1] == 4999);
  CHECK(tight[2] == 5000);
}

TEST_CASE("batch_schedule configuration errors") {
  CHECK_THROWS_AS(batch_schedule(config(5000, 5000, 5)), ConfigError);   // min == pool
  CHECK_THROWS_AS(batch_schedule(config(100, 50000, 2)), ConfigError);   // t < 3
  CHECK_THROWS_AS(batch_schedule(config(4999, 5000, 12)), ConfigError);  // dedup below 3
}

TEST_CASE("fit_inverse_n recovers exact linear data") {
  ScoreSeries series{Metric::fid, {{10, 2.0 + 7.0 / 10}, {20, 2.0 + 7.0 / 20}, {40, 2.0 + 7.0 / 40}}};
  auto fit = fit_inverse_n(series, false);
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.slope == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_inverse_n zero-variance convention") {
  ScoreSeries series{Metric::is, {{5, 3.25}, {50, 3.25}, {500, 3.25}}};
  auto fit = fit_inverse_n(series, false);
  CHECK(fit.intercept == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(fit.slope == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.r_squared == 1.0);  // flat response counts as a perfect fit
}

TEST_CASE("fit_inverse_n matches the closed-form normal equations") {
  std::mt19937_64 rng(4);
  for (bool weighted : {false, true}) {
    ScoreSeries series{Metric::fid, {}};
    for (int i = 0; i < 12; ++i) {
      const std::int64_t n = 100 * (i + 1);
      series.entries.emplace_back(n, 5.0 + 120.0 / n + 0.01 * uniform_open01(rng));
    }
    auto fit = fit_inverse_n(series, weighted);
    auto oracle = ols_oracle(series, weighted);
    CHECK(fit.intercept == doctest::Approx(static_cast<double>(oracle.intercept)).epsilon(1e-10));
    CHECK(fit.slope == doctest::Approx(static_cast<double>(oracle.slope)).epsilon(1e-10));
    CHECK(fit.r_squared >= 0.0);
    CHECK(fit.r_squared <= 1.0);
  }
}

TEST_CASE("fit_inverse_n degenerate designs") {
  ScoreSeries two{Metric::fid, {{10, 1.0}, {20, 2.0}}};
  CHECK_THROWS_AS(fit_inverse_n(two, false), ConfigError);
  ScoreSeries same{Metric::fid, {{10, 1.0}, {10, 2.0}, {10, 3.0}}};
  CHECK_THROWS_AS(fit_inverse_n(same, false), NumericError);
}

TEST_CASE("score_infinity plumbing: determinism, replicates, warning flag") {
  // synthetic score function: s(n) = 1 + 50/n plus seed-dependent noise
  auto score_at = [](std::int64_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return 1.0 + 50.0 / static_cast<double>(n) + 0.01 * (uniform_open01(rng) - 0.5);
  };
  InfinityConfig cfg = config(100, 1000, 8);
  cfg.replicates = 6;

  auto a = score_infinity(Metric::fid, score_at, cfg, 42);
  auto b = score_infinity(Metric::fid, score_at, cfg, 42);
  CHECK(a.fit.intercept == b.fit.intercept);
  CHECK(a.replicate_intercepts == b.replicate_intercepts);
  CHECK(a.replicate_intercepts.size() == 6);
  CHECK(a.replicate_std > 0.0);
  CHECK(a.fit.intercept == doctest::Approx(1.0).epsilon(0.02));
  CHECK_FALSE(a.low_r2_warning);

  cfg.replicates = 1;
  auto single = score_infinity(Metric::fid, score_at, cfg, 7);
  CHECK(single.replicate_std == 0.0);
  CHECK(single.replicate_mean == single.fit.intercept);

  // pure noise trips the low-quality warning
  auto noise = [](std::int64_t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return uniform_open01(rng);
  };
  CHECK(score_infinity(Metric::fid, noise, cfg, 3).low_r2_warning);
}

TEST_CASE("fid_infinity and is_infinity over fixed pools") {
  const auto gen = random_affine_generator(8, 4, 91);
  GaussianStats ref{gen.bias, gen.pushforward_cov(), 0};
  auto pool = generate_features(gen, SamplerSpec{SamplerKind::sobol, 4, 6, true},
                                NormalTransform::icdf, 1, 4000);

  InfinityConfig cfg = config(200, 4000, 10);
  cfg.replicates = 3;
  auto result = fid_infinity(pool, ref, cfg, 11);
  CHECK(result.series.entries.size() == 10);
  CHECK(result.series.entries.front().first == 200);
  CHECK(result.series.entries.back().first == 4000);
  CHECK(std::abs(result.fit.intercept) < 0.1);
  auto again = fid_infinity(pool, ref, cfg, 11);
  CHECK(result.fit.intercept == again.fit.intercept);

  // bootstrap resampling is a distinct, working path
  InfinityConfig boot = cfg;
  boot.resample = ResampleMode::with_replacement;
  auto booted = fid_infinity(pool, ref, boot, 11);
  CHECK(booted.fit.intercept != result.fit.intercept);
  CHECK(std::abs(booted.fit.intercept) < 0.2);

  CHECK_THROWS_AS(fid_infinity(pool, ref, config(200, 4001, 10), 1), ConfigError);

  TwoClassPosteriorOracle oracle{2.0, 5.0};
  auto posteriors = generate_posteriors(oracle, SamplerSpec{SamplerKind::sobol, 1, 2, true}, 1,
                                        2000);
  InfinityConfig is_cfg = config(100, 2000, 8);
  auto is_result = is_infinity(posteriors, is_cfg, 5);
  CHECK(is_result.fit.intercept == doctest::Approx(1.067).epsilon(0.02));
}

TEST_CASE("regular-in-n schedules extrapolate no worse than inverse spacing") {
  const auto gen = random_affine_generator(8, 4, 2024);
  GaussianStats push{gen.bias, gen.pushforward_cov(), 0};
  const int reps = 30;
  double stds[2];
  int idx = 0;
  for (auto scheme : {ScheduleScheme::regular_in_n, ScheduleScheme::regular_in_inv_n}) {
    InfinityConfig cfg = config(250, 8000, 12, scheme);
    std::vector<double> intercepts;
    for (int r = 0; r < reps; ++r) {
      auto pool = generate_features(
          gen, SamplerSpec{SamplerKind::iid_uniform, 4, derive_seed(800, r), false},
          NormalTransform::icdf, 1, 8000);
      intercepts.push_back(fid_infinity(pool, push, cfg, derive_seed(801, r)).fit.intercept);
    }
    double mean = 0, var = 0;
    for (double v : intercepts) mean += v;
    mean /= reps;
    for (double v : intercepts) var += (v - mean) * (v - mean);
    stds[idx++] = std::sqrt(var / (reps - 1));
  }
  CHECK(stds[0] <= 1.25 * stds[1]);
}

TEST_CASE("sobol pools give intercept variance at or below IID pools") {
  const auto gen = random_affine_generator(8, 4, 2024);
  GaussianStats push{gen.bias, gen.pushforward_cov(), 0};
  const int reps = 30;
  double vars[2];
  int idx = 0;
  for (bool sobol : {true, false}) {
    InfinityConfig cfg = config(250, 8000, 12);
    std::vector<double> intercepts;
    for (int r = 0; r < reps; ++r) {
      SamplerSpec spec = sobol ? SamplerSpec{SamplerKind::sobol, 4, derive_seed(810, r), true}
                               : SamplerSpec{SamplerKind::iid_uniform, 4, derive_seed(810, r), false};
      auto pool = generate_features(gen, spec, NormalTransform::icdf, 1, 8000);
      intercepts.push_back(fid_infinity(pool, push, cfg, derive_seed(811, r)).fit.intercept);
    }
    double mean = 0, var = 0;
    for (double v : intercepts) mean += v;
    mean /= reps;
    for (double v : intercepts) var += (v - mean) * (v - mean);
    vars[idx++] = var / (reps - 1);
  }
  // allow equality up to the one-sided 5% F quantile at (29, 29) dof
  const double f_crit = 1.8608;
  CHECK(vars[0] <= f_crit * vars[1]);
}

TEST_CASE("intercept variance does not grow with pool size") {
  const auto gen = random_affine_generator(8, 4, 2024);
  GaussianStats push{gen.bias, gen.pushforward_cov(), 0};
  const int reps = 30;
  std::vector<double> stds;
  for (std::int64_t pool_size : {2500, 5000, 10000}) {
    InfinityConfig cfg = config(250, pool_size, 12);
    std::vector<double> intercepts;
    for (int r = 0; r < reps; ++r) {
      auto pool = generate_features(
          gen, SamplerSpec{SamplerKind::iid_uniform, 4, derive_seed(820, r), false},
          NormalTransform::icdf, 1, pool_size);
      intercepts.push_back(fid_infinity(pool, push, cfg, derive_seed(821, r)).fit.intercept);
    }
    double mean = 0, var = 0;
    for (double v : intercepts) mean += v;
    mean /= reps;
    for (double v : intercepts) var += (v - mean) * (v - mean);
    stds.push_back(std::sqrt(var / (reps - 1)));
  }
  CHECK(stds[1] <= 1.10 * stds[0]);
  CHECK(stds[2] <= 1.10 * stds[1]);
}

TEST_CASE("fit quality is high when the pool dwarfs the smallest batch") {
  const auto gen = random_affine_generator(16, 8, 2024);
  GaussianStats push{gen.bias, gen.pushforward_cov(), 0};
  std::vector<double> r2;
  for (int r = 0; r < 30; ++r) {
    auto pool = generate_features(
        gen, SamplerSpec{SamplerKind::iid_uniform, 8, derive_seed(830, r), false},
        NormalTransform::icdf, 1, 10000);
    InfinityConfig cfg = config(500, 10000, 15);
    r2.push_back(fid_infinity(pool, push, cfg, derive_seed(831, r)).fit.r_squared);
  }
  std::sort(r2.begin(), r2.end());
  CHECK(0.5 * (r2[14] + r2[15]) >= 0.9);  // median
}
