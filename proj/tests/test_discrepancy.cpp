#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qmc/discrepancy.hpp"
#include "qmc/sampler.hpp"

using namespace qmc;

namespace {

// Direct long-double evaluation of the closed form, written independently
// of the implementation.
long double cd_oracle(const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  const Eigen::Index d = p.cols();
  long double term1 = std::pow(13.0L / 12.0L, static_cast<long double>(d));
  long double term2 = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    long double prod = 1.0L;
    for (Eigen::Index k = 0; k < d; ++k) {
      const long double a = std::abs(static_cast<long double>(p(i, k)) - 0.5L);
      prod *= 1.0L + 0.5L * a - 0.5L * a * a;
    }
    term2 += prod;
  }
  long double term3 = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      long double prod = 1.0L;
      for (Eigen::Index k = 0; k < d; ++k) {
        const long double ai = std::abs(static_cast<long double>(p(i, k)) - 0.5L);
        const long double aj = std::abs(static_cast<long double>(p(j, k)) - 0.5L);
        const long double diff = std::abs(static_cast<long double>(p(i, k)) - p(j, k));
        prod *= 1.0L + 0.5L * (ai + aj - diff);
      }
      term3 += prod;
    }
  }
  const long double nn = static_cast<long double>(n);
  return std::sqrt(std::max(0.0L, term1 - 2.0L / nn * term2 + term3 / (nn * nn)));
}

}  // namespace

TEST_CASE("single midpoint matches the hand-evaluated closed form") {
  // for the midpoint the double sum collapses to (13/12)^d - 1
  for (int d : {1, 2, 3, 8}) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, d, 0.5);
    const double expected = std::sqrt(std::pow(13.0 / 12.0, d) - 1.0);
    CHECK(centered_l2_discrepancy(p) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(centered_l2_discrepancy(Eigen::MatrixXd::Constant(1, 2, 0.5)) ==
        doctest::Approx(5.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("small point sets match the independent long-double oracle") {
  Eigen::MatrixXd p(3, 2);
  p << 0.1, 0.7, 0.45, 0.25, 0.9, 0.95;
  CHECK(centered_l2_discrepancy(p) ==
        doctest::Approx(static_cast<double>(cd_oracle(p))).epsilon(1e-12));
  auto sob = sobol_points(SamplerSpec{SamplerKind::sobol, 3, 1, true}, 1, 64);
  CHECK(centered_l2_discrepancy(sob) ==
        doctest::Approx(static_cast<double>(cd_oracle(sob.points))).epsilon(1e-12));
}

TEST_CASE("duplicating every point leaves the discrepancy unchanged") {
  auto set = sobol_points(SamplerSpec{SamplerKind::sobol, 2, 5, true}, 1, 100);
  Eigen::MatrixXd doubled(200, 2);
  doubled << set.points, set.points;
  CHECK(centered_l2_discrepancy(doubled) ==
        doctest::Approx(centered_l2_discrepancy(set.points)).epsilon(1e-12));
}

TEST_CASE("sobol discrepancy sits below the IID 5th percentile") {
  for (auto [k, d] : {std::pair{6, 2}, {8, 2}, {10, 2}, {6, 8}, {8, 8}}) {
    const std::int64_t n = std::int64_t{1} << k;
    const double sob =
        centered_l2_discrepancy(sobol_points(SamplerSpec{SamplerKind::sobol, d, 31, true}, 1, n));
    std::vector<double> iid;
    for (int s = 0; s < 100; ++s) {
      iid.push_back(centered_l2_discrepancy(
          uniform_points(SamplerSpec{SamplerKind::iid_uniform, d, 1000u + s, false}, n)));
    }
    std::sort(iid.begin(), iid.end());
    CHECK(sob < iid[4]);  // 5th percentile of 100 draws
  }
}

TEST_CASE("1024 sobol points beat at least 95 of 100 IID sets in 2-D") {
  const double sob =
      centered_l2_discrepancy(sobol_points(SamplerSpec{SamplerKind::sobol, 2, 9, true}, 1, 1024));
  int beaten = 0;
  for (int s = 0; s < 100; ++s) {
    const double iid = centered_l2_discrepancy(
        uniform_points(SamplerSpec{SamplerKind::iid_uniform, 2, 2000u + s, false}, 1024));
    if (sob < iid) ++beaten;
  }
  CHECK(beaten >= 95);
}

TEST_CASE("sobol integrates the identity better than the IID median") {
  const std::int64_t n = 1024;
  auto sob = sobol_points(SamplerSpec{SamplerKind::sobol, 1, 3, true}, 1, n);
  const double sob_err = std::abs(sob.points.col(0).mean() - 0.5);
  std::vector<double> errors;
  for (int s = 0; s < 100; ++s) {
    auto iid = uniform_points(SamplerSpec{SamplerKind::iid_uniform, 1, 3000u + s, false}, n);
    errors.push_back(std::abs(iid.points.col(0).mean() - 0.5));
  }
  std::sort(errors.begin(), errors.end());
  const double median = 0.5 * (errors[49] + errors[50]);
  CHECK(sob_err < median);
}
