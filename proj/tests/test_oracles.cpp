#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "qmc/beta.hpp"
#include "qmc/oracles.hpp"
#include "qmc/rng.hpp"

using namespace qmc;

namespace {

// Jacobi eigenvalue sweep in long double, test-only, no Eigen involved.
template <int N>
std::array<long double, N> jacobi_eigenvalues(std::array<std::array<long double, N>, N> m) {
  for (int sweep = 0; sweep < 60; ++sweep) {
    long double off = 0.0L;
    for (int p = 0; p < N; ++p)
      for (int q = p + 1; q < N; ++q) off += m[p][q] * m[p][q];
    if (off < 1e-30L) break;
    for (int p = 0; p < N; ++p) {
      for (int q = p + 1; q < N; ++q) {
        if (std::abs(m[p][q]) < 1e-36L) continue;
        const long double theta = (m[q][q] - m[p][p]) / (2.0L * m[p][q]);
        const long double t = (theta >= 0 ? 1.0L : -1.0L) /
                              (std::abs(theta) + std::sqrt(theta * theta + 1.0L));
        const long double c = 1.0L / std::sqrt(t * t + 1.0L);
        const long double s = t * c;
        for (int k = 0; k < N; ++k) {
          const long double mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (int k = 0; k < N; ++k) {
          const long double mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
    }
  }
  std::array<long double, N> eig;
  for (int i = 0; i < N; ++i) eig[i] = m[i][i];
  return eig;
}

// Extended-precision Frechet distance for small d via Jacobi decompositions.
template <int N>
long double fid_oracle(const Eigen::VectorXd& ma, const Eigen::MatrixXd& a,
                       const Eigen::VectorXd& mb, const Eigen::MatrixXd& b) {
  std::array<std::array<long double, N>, N> am, bm;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      am[i][j] = static_cast<long double>(a(i, j));
      bm[i][j] = static_cast<long double>(b(i, j));
    }
  // sqrt(A) via eigenvectors: run Jacobi keeping the rotations applied to I
  std::array<std::array<long double, N>, N> v{};
  for (int i = 0; i < N; ++i) v[i][i] = 1.0L;
  auto m = am;
  for (int sweep = 0; sweep < 60; ++sweep) {
    for (int p = 0; p < N; ++p) {
      for (int q = p + 1; q < N; ++q) {
        if (std::abs(m[p][q]) < 1e-36L) continue;
        const long double theta = (m[q][q] - m[p][p]) / (2.0L * m[p][q]);
        const long double t = (theta >= 0 ? 1.0L : -1.0L) /
                              (std::abs(theta) + std::sqrt(theta * theta + 1.0L));
        const long double c = 1.0L / std::sqrt(t * t + 1.0L);
        const long double s = t * c;
        for (int k = 0; k < N; ++k) {
          const long double mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
          const long double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
        for (int k = 0; k < N; ++k) {
          const long double mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
    }
  }
  std::array<std::array<long double, N>, N> sqrt_a{};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        sqrt_a[i][j] += v[i][k] * std::sqrt(std::max(0.0L, m[k][k])) * v[j][k];

  // S = sqrt(A) B sqrt(A)
  std::array<std::array<long double, N>, N> tmp{}, inner{};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) tmp[i][j] += sqrt_a[i][k] * bm[k][j];
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) inner[i][j] += tmp[i][k] * sqrt_a[k][j];

  auto eig = jacobi_eigenvalues<N>(inner);
  long double trace_sqrt = 0.0L, trace_a = 0.0L, trace_b = 0.0L, mean_term = 0.0L;
  for (int i = 0; i < N; ++i) {
    trace_sqrt += std::sqrt(std::max(0.0L, eig[i]));
    trace_a += am[i][i];
    trace_b += bm[i][i];
    const long double dm = static_cast<long double>(ma(i)) - mb(i);
    mean_term += dm * dm;
  }
  return mean_term + trace_a + trace_b - 2.0L * trace_sqrt;
}

}  // namespace

TEST_CASE("generate_features reproduces the affine map") {
  SamplerSpec spec{SamplerKind::sobol, 3, 5, true};

  AffineGaussianGenerator identity{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3)};
  auto latents = normal_points(spec, NormalTransform::icdf, 1, 50);
  auto features = generate_features(identity, spec, NormalTransform::icdf, 1, 50);
  CHECK((features.data - latents.points).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd v(2);
  v << 3.0, -1.0;
  AffineGaussianGenerator constant{Eigen::MatrixXd::Zero(2, 3), v};
  auto rows = generate_features(constant, spec, NormalTransform::icdf, 1, 20);
  for (int i = 0; i < 20; ++i) {
    CHECK(rows.data(i, 0) == 3.0);
    CHECK(rows.data(i, 1) == -1.0);
  }
  auto stats = gaussian_stats(rows);
  CHECK((stats.mean - v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(stats.cov.cwiseAbs().maxCoeff() == 0.0);

  AffineGaussianGenerator doubled{2.0 * Eigen::MatrixXd::Identity(1, 1),
                                  Eigen::VectorXd::Zero(1)};
  auto scaled = generate_features(doubled, SamplerSpec{SamplerKind::sobol, 1, 5, true},
                                  NormalTransform::icdf, 1, 1 << 14);
  const double var = gaussian_stats(scaled).cov(0, 0);
  CHECK(std::abs(var - 4.0) < 0.12);  // 3% of the pushforward variance 4

  CHECK_THROWS_AS(generate_features(identity, SamplerSpec{SamplerKind::sobol, 4, 5, true},
                                    NormalTransform::icdf, 1, 8),
                  ShapeError);
}

TEST_CASE("true_fid closed cases and the extended-precision oracle") {
  AffineGaussianGenerator identity{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)};
  CHECK(true_fid(identity, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)) == 0.0);

  AffineGaussianGenerator shifted{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Ones(1)};
  CHECK(true_fid(shifted, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const auto gen = random_affine_generator(4, 4, 31);
  const Eigen::VectorXd ref_mean = Eigen::VectorXd::Zero(4);
  const Eigen::MatrixXd ref_cov = Eigen::MatrixXd::Identity(4, 4);
  const double got = true_fid(gen, ref_mean, ref_cov);
  const double expected = static_cast<double>(
      fid_oracle<4>(gen.bias, gen.pushforward_cov(), ref_mean, ref_cov));
  CHECK(got == doctest::Approx(expected).epsilon(1e-8));

  // pushforward of the generator itself is exactly distance zero
  GaussianStats push{gen.bias, gen.pushforward_cov(), 0};
  CHECK(true_fid(gen, push.mean, push.cov) == 0.0);
}

TEST_CASE("beta quantile plumbing") {
  CHECK(beta_icdf(0.5, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(regularized_incomplete_beta(0.25, 2.0, 2.0) ==
        doctest::Approx(0.15625).epsilon(1e-10));  // 3x^2 - 2x^3 at 1/4
  for (double u : {0.01, 0.2, 0.5, 0.9, 0.999}) {
    const double x = beta_icdf(u, 2.0, 5.0);
    CHECK(regularized_incomplete_beta(x, 2.0, 5.0) == doctest::Approx(u).epsilon(1e-9));
  }
  CHECK_THROWS_AS(beta_icdf(0.0, 2.0, 5.0), DomainError);
  CHECK_THROWS_AS(beta_icdf(0.5, -1.0, 5.0), DomainError);
}

TEST_CASE("generate_posteriors matches beta moments") {
  const std::int64_t n = 20000;
  auto check_moments = [n](double alpha, double beta, std::uint64_t seed) {
    TwoClassPosteriorOracle oracle{alpha, beta};
    auto p = generate_posteriors(oracle, SamplerSpec{SamplerKind::iid_uniform, 1, seed, false}, 1,
                                 n);
    REQUIRE(p.k() == 2);
    for (std::int64_t i = 0; i < n; ++i) {
      CHECK(p.probs(i, 0) > 0.0);
      CHECK(p.probs(i, 0) < 1.0);
      CHECK(p.probs(i, 0) + p.probs(i, 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const double mean = p.probs.col(0).mean();
    const double expect = alpha / (alpha + beta);
    const double var = alpha * beta /
                       ((alpha + beta) * (alpha + beta) * (alpha + beta + 1.0));
    CHECK(std::abs(mean - expect) < 5.0 * std::sqrt(var / n));
    return p;
  };
  check_moments(3.0, 3.0, 41);      // symmetric: mean 1/2
  auto flat = check_moments(1.0, 1.0, 42);  // uniform: also check the variance
  const double sample_var =
      (flat.probs.col(0).array() - flat.probs.col(0).mean()).square().sum() / (flat.n() - 1);
  CHECK(std::abs(sample_var - 1.0 / 12.0) < 5.0 * std::sqrt(1.0 / 180.0 / flat.n()));
  check_moments(2.0, 5.0, 43);      // mean 2/7

  TwoClassPosteriorOracle oracle{2.0, 5.0};
  CHECK_THROWS_AS(
      generate_posteriors(oracle, SamplerSpec{SamplerKind::iid_uniform, 1, 1, false}, 1, 0),
      DataError);
  CHECK_THROWS_AS(
      generate_posteriors(oracle, SamplerSpec{SamplerKind::iid_uniform, 2, 1, false}, 1, 5),
      ShapeError);
}

TEST_CASE("true_is self-consistency and bounds") {
  TwoClassPosteriorOracle flat{1.0, 1.0};
  auto run_a = true_is(flat, 1'000'000, 1);
  auto run_b = true_is(flat, 1'000'000, 2);
  const double combined =
      std::sqrt(run_a.standard_error * run_a.standard_error +
                run_b.standard_error * run_b.standard_error);
  CHECK(std::abs(run_a.value - run_b.value) < 3.0 * combined);
  // closed form exp(ln 2 - 1/2)
  CHECK(run_a.value == doctest::Approx(1.2130613194252668).epsilon(5e-4));

  for (auto [a, b] : {std::pair{2.0, 5.0}, {0.5, 0.5}, {4.0, 1.0}}) {
    auto score = true_is(TwoClassPosteriorOracle{a, b}, 1'000'000, 3);
    CHECK(score.value >= 1.0);
    CHECK(score.value <= 2.0);
  }

  // concentrated posterior: every row is close to the marginal, score -> 1
  auto degenerate = true_is(TwoClassPosteriorOracle{1e6, 1e6}, 1'000'000, 4);
  CHECK(degenerate.value == doctest::Approx(1.0).epsilon(1e-4));

  CHECK_THROWS_AS(true_is(flat, 1000, 1), ConfigError);
}

TEST_CASE("bias_study finds generator-dependent slopes") {
  const int d = 8;
  GaussianStats ref{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d), 0};
  AffineGaussianGenerator g1{Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)};
  AffineGaussianGenerator g3{3.0 * Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)};
  std::vector<std::int64_t> grid = {250, 500, 1000, 2000, 4000};

  auto r1 = bias_study(g1, ref, {normal_sampler(d)}, grid, 40, 11);
  auto r3 = bias_study(g3, ref, {normal_sampler(d)}, grid, 40, 12);
  const auto& f1 = r1.samplers[0].point_fit;
  const auto& f3 = r3.samplers[0].point_fit;
  const double combined = std::sqrt(f1.slope_se * f1.slope_se + f3.slope_se * f3.slope_se);
  CHECK(f3.slope - f1.slope > 3.0 * combined);
}

TEST_CASE("bias_study on a perfect generator shows the pure bias term") {
  const auto gen = random_affine_generator(8, 4, 77);
  GaussianStats push{gen.bias, gen.pushforward_cov(), 0};
  auto report = bias_study(gen, push, {normal_sampler(4), sobol_inv_sampler(4)},
                           {250, 500, 1000, 2000, 4000}, 40, 13);
  const auto& normal = report.samplers[0];
  CHECK(normal.point_fit.slope > 3.0 * normal.point_fit.slope_se);
  CHECK(std::abs(normal.point_fit.intercept) <= 3.0 * normal.point_fit.intercept_se);
  CHECK(normal.mean_fit.r_squared > 0.9);

  // mean FID falls as n grows (positive bias)
  for (std::size_t i = 0; i + 1 < normal.cells.size(); ++i) {
    CHECK(normal.cells[i].mean > normal.cells[i + 1].mean);
  }

  // the scrambled-Sobol column is the low-variance one
  REQUIRE(report.baseline_index == 0);
  const auto& sobol = report.samplers[1];
  CHECK(sobol.pooled_f > 1.0);
  CHECK(sobol.unit_discrepancy < normal.unit_discrepancy);
  CHECK(report.samplers[0].pooled_f == doctest::Approx(1.0));
}

TEST_CASE("bias_study on the posterior oracle has a negative slope") {
  TwoClassPosteriorOracle oracle{0.01, 0.01};
  auto report = bias_study(oracle, {normal_sampler(1)}, {128, 256, 512, 1024, 2048}, 100, 14);
  const auto& fit = report.samplers[0].point_fit;
  CHECK(fit.slope < 0.0);
  CHECK(fit.slope < -3.0 * fit.slope_se);
}

TEST_CASE("bias_study input validation") {
  const auto gen = random_affine_generator(4, 2, 1);
  GaussianStats push{gen.bias, gen.pushforward_cov(), 0};
  CHECK_THROWS_AS(bias_study(gen, push, {normal_sampler(2)}, {100, 100}, 10, 1), ConfigError);
  CHECK_THROWS_AS(bias_study(gen, push, {normal_sampler(2)}, {200, 100}, 10, 1), ConfigError);
  CHECK_THROWS_AS(bias_study(gen, push, {normal_sampler(2)}, {100, 200}, 1, 1), ConfigError);
  CHECK_THROWS_AS(bias_study(gen, push, {}, {100, 200}, 10, 1), ConfigError);
}

TEST_CASE("crossing_demo flips finite-n rankings but not the intercepts") {
  auto setup = default_crossing_setup();
  CHECK(setup.gen_a.feature_dim() == 16);
  const double true_a = true_fid(setup.gen_a, setup.ref.mean, setup.ref.cov);
  const double true_b = true_fid(setup.gen_b, setup.ref.mean, setup.ref.cov);
  CHECK(true_a < true_b);

  CrossingOptions options;
  options.seed = 5;
  options.replicates = 24;
  options.n_grid = {250, 1000, 4000, 20000};
  options.inner_replicates = 4;
  auto report = crossing_demo(setup.gen_a, setup.gen_b, setup.ref, options);

  CHECK(report.true_fid_a == doctest::Approx(true_a));
  CHECK(report.mean_a.front() > report.mean_b.front());  // worse at small n
  CHECK(report.mean_a.back() < report.mean_b.back());    // better in the limit
  CHECK(report.crossing_n > 250);
  CHECK(report.crossing_n < 20000);
  CHECK(report.intercept_agreement >= 0.9);
}

TEST_CASE("identical generators flip rankings like a coin") {
  auto setup = default_crossing_setup();
  CrossingOptions options;
  options.seed = 17;
  options.replicates = 48;
  options.n_grid = {250, 500, 1000, 2000, 4000, 8000, 20000};
  options.inner_replicates = 2;
  options.pool_size = 4000;
  options.min_batch = 250;
  auto report = crossing_demo(setup.gen_a, setup.gen_a, setup.ref, options);
  // binomial 3-sigma band around 1/2 at 48 replicates
  const double band = 3.0 * std::sqrt(0.25 / options.replicates);
  CHECK(report.flip_fraction > 0.5 - band);
  CHECK(report.flip_fraction < 0.5 + band);
}
