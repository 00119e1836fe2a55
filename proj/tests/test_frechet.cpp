#include <doctest.h>

#include <cmath>
#include <random>

#include "qmc/frechet.hpp"
#include "qmc/gaussianize.hpp"
#include "qmc/rng.hpp"
#include "qmc/sampler.hpp"

using namespace qmc;

namespace {

// Closed-form 2x2 oracle in extended precision. For SPD A, B:
//   Tr((A B)^{1/2}) = sqrt(Tr(A B) + 2 sqrt(det A det B))
// so the whole distance needs no iterative eigensolver.
long double fid2_oracle(const Eigen::Vector2d& ma, const Eigen::Matrix2d& a,
                        const Eigen::Vector2d& mb, const Eigen::Matrix2d& b) {
  const long double tr_ab = static_cast<long double>(a(0, 0)) * b(0, 0) +
                            static_cast<long double>(a(0, 1)) * b(1, 0) +
                            static_cast<long double>(a(1, 0)) * b(0, 1) +
                            static_cast<long double>(a(1, 1)) * b(1, 1);
  const long double det_a =
      static_cast<long double>(a(0, 0)) * a(1, 1) - static_cast<long double>(a(0, 1)) * a(1, 0);
  const long double det_b =
      static_cast<long double>(b(0, 0)) * b(1, 1) - static_cast<long double>(b(0, 1)) * b(1, 0);
  const long double cross = std::sqrt(std::max(0.0L, tr_ab + 2.0L * std::sqrt(det_a * det_b)));
  const long double dm0 = static_cast<long double>(ma(0)) - mb(0);
  const long double dm1 = static_cast<long double>(ma(1)) - mb(1);
  return dm0 * dm0 + dm1 * dm1 + a(0, 0) + a(1, 1) + b(0, 0) + b(1, 1) - 2.0L * cross;
}

GaussianStats stats_of(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  return GaussianStats{std::move(mean), std::move(cov), 0};
}

GaussianStats random_stats(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd root(d, d);
  Eigen::VectorXd mean(d);
  for (int i = 0; i < d; ++i) {
    mean(i) = icdf_normal(uniform_open01(rng));
    for (int j = 0; j < d; ++j) root(i, j) = icdf_normal(uniform_open01(rng));
  }
  return stats_of(mean, root * root.transpose() / d);
}

}  // namespace

TEST_CASE("gaussian_stats on tiny hand cases") {
  FeatureMatrix two{Eigen::MatrixXd(2, 1)};
  two.data << 0.0, 2.0;
  auto stats = gaussian_stats(two);
  CHECK(stats.mean(0) == 1.0);
  CHECK(stats.cov(0, 0) == 2.0);  // 1/(N-1) normalisation
  CHECK(stats.n_source == 2);

  FeatureMatrix constant{Eigen::MatrixXd::Constant(5, 3, 4.2)};
  CHECK(gaussian_stats(constant).cov.cwiseAbs().maxCoeff() == 0.0);

  FeatureMatrix three{Eigen::MatrixXd(3, 2)};
  three.data << 1, 0, 0, 1, -1, -1;
  auto s3 = gaussian_stats(three);
  CHECK(s3.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s3.cov(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s3.cov(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s3.cov(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  FeatureMatrix single{Eigen::MatrixXd::Zero(1, 2)};
  CHECK_THROWS_AS(gaussian_stats(single), DataError);
}

TEST_CASE("frechet_distance identity and 1-D hand values") {
  auto a = random_stats(4, 1);
  CHECK(frechet_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));

  auto m0v1 = stats_of(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  auto m1v1 = stats_of(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Identity(1, 1));
  CHECK(frechet_distance(m0v1, m1v1) == doctest::Approx(1.0).epsilon(1e-12));

  auto v4 = stats_of(Eigen::VectorXd::Zero(1), 4.0 * Eigen::MatrixXd::Identity(1, 1));
  CHECK(frechet_distance(v4, m0v1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("frechet_distance matches the extended-precision 2x2 oracle") {
  Eigen::Matrix2d ca;
  ca << 2, 1, 1, 2;
  auto a = stats_of(Eigen::VectorXd::Zero(2), ca);
  auto b = stats_of(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  // closed form: 6 - 2 (1 + sqrt(3))
  CHECK(frechet_distance(a, b) == doctest::Approx(0.53589838486224541).epsilon(1e-10));

  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    auto sa = random_stats(2, derive_seed(100, trial));
    auto sb = random_stats(2, derive_seed(200, trial));
    const double expected = static_cast<double>(
        fid2_oracle(sa.mean.head<2>(), sa.cov.topLeftCorner<2, 2>(), sb.mean.head<2>(),
                    sb.cov.topLeftCorner<2, 2>()));
    CHECK(frechet_distance(sa, sb) == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("frechet_distance is symmetric") {
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_stats(6, derive_seed(300, trial));
    auto b = random_stats(6, derive_seed(400, trial));
    const double ab = frechet_distance(a, b);
    const double ba = frechet_distance(b, a);
    CHECK(std::abs(ab - ba) <= 1e-8 * std::max(1.0, std::abs(ab)));
  }
}

TEST_CASE("translating both means is free, translating one adds its norm") {
  auto a = random_stats(5, 11);
  GaussianStats b = a;
  Eigen::VectorXd v(5);
  v << 0.3, -1.2, 0.5, 2.0, -0.7;

  GaussianStats a_shift = a, b_shift = b;
  a_shift.mean += v;
  b_shift.mean += v;
  CHECK(frechet_distance(a_shift, b_shift) ==
        doctest::Approx(frechet_distance(a, b)).epsilon(1e-9));

  // equal covariances: a lone mean shift contributes exactly ||v||^2
  CHECK(frechet_distance(a_shift, b) ==
        doctest::Approx(frechet_distance(a, b) + v.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("diagonal covariances reduce to the scalar closed form") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 6;
    Eigen::VectorXd ma(d), mb(d), ca(d), cb(d);
    for (int i = 0; i < d; ++i) {
      ma(i) = icdf_normal(uniform_open01(rng));
      mb(i) = icdf_normal(uniform_open01(rng));
      ca(i) = 0.1 + 3.0 * uniform_open01(rng);
      cb(i) = 0.1 + 3.0 * uniform_open01(rng);
    }
    double expected = 0.0;
    for (int i = 0; i < d; ++i) {
      expected += (ma(i) - mb(i)) * (ma(i) - mb(i)) +
                  (std::sqrt(ca(i)) - std::sqrt(cb(i))) * (std::sqrt(ca(i)) - std::sqrt(cb(i)));
    }
    const double got = frechet_distance(stats_of(ma, ca.asDiagonal()), stats_of(mb, cb.asDiagonal()));
    CHECK(got == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("frechet_distance error paths") {
  auto a = random_stats(3, 1);
  auto b = random_stats(4, 2);
  CHECK_THROWS_AS(frechet_distance(a, b), ShapeError);

  Eigen::Matrix2d bad;
  bad << 1.0, 1.001, 1.001, 1.0;  // eigenvalue -0.001
  auto bad_stats = stats_of(Eigen::VectorXd::Zero(2), bad);
  auto id = stats_of(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(frechet_distance(bad_stats, id), NumericError);
  // jitter flag repairs it explicitly
  CHECK_NOTHROW(frechet_distance(bad_stats, id, 0.01));

  // exactly singular is legal: rank-deficient covariances have a PSD root
  Eigen::Matrix2d singular;
  singular << 1, 1, 1, 1;
  CHECK_NOTHROW(frechet_distance(stats_of(Eigen::VectorXd::Zero(2), singular), id));
}

TEST_CASE("fid_at_n full-set value ignores the permutation seed") {
  auto pts = normal_points(SamplerSpec{SamplerKind::sobol, 3, 2, true}, NormalTransform::icdf, 1,
                           500);
  FeatureMatrix features{pts.points};
  auto ref = random_stats(3, 9);
  const double direct = frechet_distance(gaussian_stats(features), ref);
  CHECK(fid_at_n(features, ref, 500, 1) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(fid_at_n(features, ref, 500, 999) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(fid_at_n(features, ref, 200, 1) != fid_at_n(features, ref, 200, 2));
  CHECK_THROWS_AS(fid_at_n(features, ref, 501, 1), ConfigError);
}

TEST_CASE("mean estimates converge at the root-n rate") {
  // log-log slope of ||mean error|| vs N should sit near -1/2
  std::vector<double> log_n, log_err;
  for (int k = 8; k <= 14; k += 2) {
    const std::int64_t n = std::int64_t{1} << k;
    double err = 0.0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
      auto pts = normal_points(SamplerSpec{SamplerKind::iid_uniform, 4, derive_seed(50, 10 * k + r),
                                           false},
                               NormalTransform::icdf, 0, n);
      err += gaussian_stats(FeatureMatrix{pts.points}).mean.norm();
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_err.push_back(std::log(err / reps));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto k = static_cast<double>(log_n.size());
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sx += log_n[i];
    sy += log_err[i];
    sxx += log_n[i] * log_n[i];
    sxy += log_n[i] * log_err[i];
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}
