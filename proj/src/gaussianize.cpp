#include "qmc/gaussianize.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "qmc/errors.hpp"
#include "qmc/rng.hpp"

namespace qmc {

double icdf_normal(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("icdf_normal: u must lie strictly in (0,1)");
  }

  // AS241 PPND16 coefficients.
  static const double a[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static const double b[7] = {
      4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3};
  static const double c[8] = {
      1.42343711074968357734e0,  4.63033784615654529590e0,  5.76949722146069140550e0,
      3.64784832476320460504e0,  1.27045825245236838258e0,  2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static const double dd[7] = {
      2.05319162663775882187e0,  1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9};
  static const double e[8] = {
      6.65790464350110377720e0,  5.46378491116411436990e0,  1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double f[7] = {
      5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15};

  const double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((a[7] * r + a[6]) * r + a[5]) * r + a[4]) * r + a[3]) * r + a[2]) * r + a[1]) * r +
            a[0]) /
           (((((((b[6] * r + b[5]) * r + b[4]) * r + b[3]) * r + b[2]) * r + b[1]) * r + b[0]) * r +
            1.0);
  }

  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((c[7] * r + c[6]) * r + c[5]) * r + c[4]) * r + c[3]) * r + c[2]) * r + c[1]) * r +
             c[0]) /
            (((((((dd[6] * r + dd[5]) * r + dd[4]) * r + dd[3]) * r + dd[2]) * r + dd[1]) * r +
              dd[0]) * r +
             1.0);
  } else {
    r -= 5.0;
    value = (((((((e[7] * r + e[6]) * r + e[5]) * r + e[4]) * r + e[3]) * r + e[2]) * r + e[1]) * r +
             e[0]) /
            (((((((f[6] * r + f[5]) * r + f[4]) * r + f[3]) * r + f[2]) * r + f[1]) * r + f[0]) * r +
             1.0);
  }
  return q < 0.0 ? -value : value;
}

std::pair<double, double> box_muller(double u_even, double u_odd) {
  if (!(u_even > 0.0)) {
    throw DomainError("box_muller: u_even must be > 0 (log singularity at 0)");
  }
  const double radius = std::sqrt(-2.0 * std::log(u_even));
  const double angle = 2.0 * std::numbers::pi * u_odd;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

namespace {

Eigen::MatrixXd apply_transform(Eigen::MatrixXd u, NormalTransform transform) {
  const Eigen::Index n = u.rows();
  const Eigen::Index d = u.cols();
  if (transform == NormalTransform::icdf) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) u(i, j) = icdf_normal(u(i, j));
    return u;
  }
  if (d % 2 != 0) {
    throw ShapeError("box_muller transform requires an even dimension");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; j += 2) {
      const auto [z0, z1] = box_muller(u(i, j), u(i, j + 1));
      u(i, j) = z0;
      u(i, j + 1) = z1;
    }
  }
  return u;
}

}  // namespace

NormalPointSet normal_points(const SamplerSpec& spec, NormalTransform transform,
                             std::uint64_t start_index, std::int64_t n) {
  UnitPointSet uniforms = spec.kind == SamplerKind::sobol ? sobol_points(spec, start_index, n)
                                                          : uniform_points(spec, n);
  NormalPointSet out;
  out.points = apply_transform(std::move(uniforms.points), transform);
  out.transform = transform;
  out.source_spec = spec;
  out.start_index = uniforms.start_index;
  return out;
}

CachedNormalSampler::CachedNormalSampler(const SamplerSpec& spec, NormalTransform transform,
                                         std::int64_t cache_capacity, std::uint64_t shuffle_seed,
                                         std::uint64_t start_index)
    : spec_(spec),
      transform_(transform),
      capacity_(cache_capacity),
      shuffle_seed_(shuffle_seed),
      next_index_(start_index) {
  if (capacity_ < 1) throw ConfigError("CachedNormalSampler: cache_capacity must be >= 1");
  cache_.resize(0, spec.dimension);
}

void CachedNormalSampler::refill() {
  NormalPointSet fresh = normal_points(spec_, transform_, next_index_, capacity_);
  if (spec_.kind == SamplerKind::sobol) next_index_ += static_cast<std::uint64_t>(capacity_);
  else spec_.seed = derive_seed(spec_.seed, 0x1dULL);  // advance the IID stream

  const auto perm =
      random_permutation(static_cast<std::size_t>(capacity_),
                         derive_seed(shuffle_seed_, static_cast<std::uint64_t>(refill_count_)));
  cache_.resize(capacity_, spec_.dimension);
  for (std::int64_t i = 0; i < capacity_; ++i) cache_.row(i) = fresh.points.row(perm[i]);
  cursor_ = 0;
  ++refill_count_;
}

Eigen::MatrixXd CachedNormalSampler::draw(std::int64_t batch) {
  if (batch < 1) throw ConfigError("CachedNormalSampler::draw: batch must be >= 1");
  if (batch > capacity_) {
    throw ConfigError("CachedNormalSampler::draw: batch exceeds cache_capacity");
  }
  if (remaining() < batch) refill();
  Eigen::MatrixXd out = cache_.middleRows(cursor_, batch);
  cursor_ += batch;
  return out;
}

}  // namespace qmc
