#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "qmc/gaussianize.hpp"
#include "qmc/sampler.hpp"

using namespace qmc;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Quantile by bisection on the erfc-based CDF; independent of the AS241
// rational approximation under test. The upper tail goes through the
// symmetry Q(u) = -Q(1-u) because erfc only carries full precision on the
// lower side; 1-u is exact for u >= 1/2 (Sterbenz).
double icdf_bisection_oracle(double u) {
  if (u > 0.5) return -icdf_bisection_oracle(1.0 - u);
  double lo = -42.0, hi = 0.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("icdf_normal nails the median and fixed quantiles") {
  CHECK(icdf_normal(0.5) == 0.0);
  // high-precision reference values
  CHECK(icdf_normal(1e-12) == doctest::Approx(-7.0344838253011319).epsilon(1e-12));
  CHECK(icdf_normal(1e-4) == doctest::Approx(-3.7190164854556806).epsilon(1e-12));
  CHECK(icdf_normal(0.025) == doctest::Approx(-1.9599639845400542).epsilon(1e-12));
  CHECK(icdf_normal(0.3) == doctest::Approx(-0.52440051270804078).epsilon(1e-12));
  CHECK(icdf_normal(0.6) == doctest::Approx(0.25334710313579980).epsilon(1e-12));
  CHECK(icdf_normal(0.975) == doctest::Approx(1.9599639845400542).epsilon(1e-12));
  CHECK(icdf_normal(0.99999) == doctest::Approx(4.2648907939228246).epsilon(1e-12));
  // the documented example: Phi(1) maps back to 1
  CHECK(std::abs(icdf_normal(0.8413447461) - 1.0) < 1e-6);
}

TEST_CASE("icdf_normal is antisymmetric and strictly increasing") {
  double prev = -1e300;
  for (int i = 1; i < 4000; ++i) {
    const double u = i / 4000.0;
    const double q = icdf_normal(u);
    CHECK(std::abs(q + icdf_normal(1.0 - u)) < 1e-10);
    CHECK(q > prev);
    prev = q;
  }
}

TEST_CASE("icdf_normal stays within 1e-9 of the bisection oracle") {
  double worst = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double u = (i + 0.5) / 4000.0;
    worst = std::max(worst, std::abs(icdf_normal(u) - icdf_bisection_oracle(u)));
  }
  for (int e = 2; e <= 12; ++e) {
    const double u = std::pow(10.0, -e);
    worst = std::max(worst, std::abs(icdf_normal(u) - icdf_bisection_oracle(u)));
    worst = std::max(worst, std::abs(icdf_normal(1.0 - u) - icdf_bisection_oracle(1.0 - u)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("icdf_normal rejects the boundary") {
  CHECK_THROWS_AS(icdf_normal(0.0), DomainError);
  CHECK_THROWS_AS(icdf_normal(1.0), DomainError);
  CHECK_THROWS_AS(icdf_normal(-0.5), DomainError);
  CHECK_THROWS_AS(icdf_normal(1.5), DomainError);
}

TEST_CASE("box_muller reproduces the fixed pairs") {
  auto [a0, a1] = box_muller(1.0, 0.3);
  CHECK(a0 == 0.0);
  CHECK(a1 == 0.0);
  auto [b0, b1] = box_muller(0.6065306597126334, 0.25);  // e^{-1/2}, quarter turn
  CHECK(std::abs(b0) < 1e-12);
  CHECK(b1 == doctest::Approx(1.0).epsilon(1e-12));
  auto [c0, c1] = box_muller(0.13533528323661269, 0.5);  // e^{-2}, half turn
  CHECK(c0 == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::abs(c1) < 1e-12);
  CHECK_THROWS_AS(box_muller(0.0, 0.5), DomainError);
}

TEST_CASE("box_muller radius identity holds to round-off") {
  auto u = sobol_points(SamplerSpec{SamplerKind::sobol, 2, 8, true}, 1, 500);
  for (int i = 0; i < 500; ++i) {
    const auto [z0, z1] = box_muller(u.points(i, 0), u.points(i, 1));
    const double radius2 = z0 * z0 + z1 * z1;
    const double expected = -2.0 * std::log(u.points(i, 0));
    CHECK(std::abs(radius2 - expected) <= 1e-12 * std::max(1.0, expected));
  }
}

TEST_CASE("normal_points moment checks, both transforms") {
  CHECK(normal_points(SamplerSpec{SamplerKind::sobol, 1, 0, true}, NormalTransform::icdf, 1, 0)
            .points.rows() == 0);

  auto icdf_set = normal_points(SamplerSpec{SamplerKind::sobol, 2, 3, true},
                                NormalTransform::icdf, 1, 1 << 14);
  auto bm_set = normal_points(SamplerSpec{SamplerKind::sobol, 2, 3, true},
                              NormalTransform::box_muller, 1, 1 << 14);
  CHECK((icdf_set.points - bm_set.points).cwiseAbs().maxCoeff() > 1e-6);
  for (const auto* set : {&icdf_set, &bm_set}) {
    for (int j = 0; j < 2; ++j) {
      const auto col = set->points.col(j);
      const double mean = col.mean();
      const double var = (col.array() - mean).square().sum() / (col.size() - 1);
      CHECK(std::abs(mean) < 0.01);
      CHECK(std::abs(var - 1.0) < 0.02);
    }
  }

  // IID baseline sampler
  auto base = normal_points(SamplerSpec{SamplerKind::iid_uniform, 1, 17, false},
                            NormalTransform::icdf, 0, 1 << 14);
  CHECK(std::abs(base.points.col(0).mean()) < 0.03);

  CHECK_THROWS_AS(normal_points(SamplerSpec{SamplerKind::sobol, 3, 0, true},
                                NormalTransform::box_muller, 1, 8),
                  ShapeError);
}

TEST_CASE("sobol-icdf empirical CDF is within 0.005 of the normal CDF") {
  const std::int64_t n = 1 << 16;
  auto set =
      normal_points(SamplerSpec{SamplerKind::sobol, 1, 12, true}, NormalTransform::icdf, 1, n);
  std::vector<double> values(set.points.col(0).data(), set.points.col(0).data() + n);
  std::sort(values.begin(), values.end());
  double sup = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double cdf = normal_cdf(values[i]);
    sup = std::max(sup, std::abs(cdf - static_cast<double>(i) / n));
    sup = std::max(sup, std::abs(cdf - static_cast<double>(i + 1) / n));
  }
  CHECK(sup <= 0.005);
}

TEST_CASE("cached sampler draws without replacement and refills on schedule") {
  SamplerSpec spec{SamplerKind::sobol, 3, 21, true};
  CachedNormalSampler sampler(spec, NormalTransform::icdf, 100, 5);
  CHECK(sampler.refill_count() == 0);

  auto first = sampler.draw(10);
  auto second = sampler.draw(10);
  CHECK(sampler.refill_count() == 1);  // the initial fill
  std::set<std::array<double, 3>> rows;
  for (const auto* m : {&first, &second}) {
    for (int i = 0; i < 10; ++i) rows.insert({(*m)(i, 0), (*m)(i, 1), (*m)(i, 2)});
  }
  CHECK(rows.size() == 20);

  for (int i = 0; i < 8; ++i) sampler.draw(10);  // consume up to capacity exactly
  CHECK(sampler.refill_count() == 1);
  sampler.draw(10);
  CHECK(sampler.refill_count() == 2);

  CHECK_THROWS_AS(sampler.draw(101), ConfigError);
  CHECK_THROWS_AS(sampler.draw(0), ConfigError);
}

TEST_CASE("cached sampler streams are deterministic per seed") {
  SamplerSpec spec{SamplerKind::sobol, 2, 4, true};
  CachedNormalSampler a(spec, NormalTransform::icdf, 64, 9);
  CachedNormalSampler b(spec, NormalTransform::icdf, 64, 9);
  for (int i = 0; i < 5; ++i) {
    CHECK((a.draw(20) - b.draw(20)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("one cache generation is a permutation of the underlying points") {
  SamplerSpec spec{SamplerKind::sobol, 2, 13, true};
  const std::int64_t capacity = 64;
  CachedNormalSampler sampler(spec, NormalTransform::icdf, capacity, 3);

  std::vector<std::array<double, 2>> drawn;
  for (int i = 0; i < 8; ++i) {
    auto block = sampler.draw(8);
    for (int r = 0; r < 8; ++r) drawn.push_back({block(r, 0), block(r, 1)});
  }
  CHECK(sampler.refill_count() == 1);

  auto direct = normal_points(spec, NormalTransform::icdf, kDefaultSobolStart, capacity);
  std::vector<std::array<double, 2>> expected;
  for (std::int64_t i = 0; i < capacity; ++i) {
    expected.push_back({direct.points(i, 0), direct.points(i, 1)});
  }
  std::sort(drawn.begin(), drawn.end());
  std::sort(expected.begin(), expected.end());
  CHECK(drawn == expected);
}
