#include "qmc/beta.hpp"

#include <cmath>

#include "qmc/errors.hpp"

namespace qmc {

namespace {

// Continued fraction for the incomplete beta function, modified Lentz.
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw NumericError("regularized_incomplete_beta: continued fraction did not converge");
}

// ln_norm = ln(1 / B(a,b)), hoisted out of the bisection loop.
double incomplete_beta_with_norm(double x, double a, double b, double ln_norm) {
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = ln_norm + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - std::exp(ln_front) * beta_continued_fraction(1.0 - x, b, a) / b;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) {
    throw DomainError("regularized_incomplete_beta: a and b must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("regularized_incomplete_beta: x must lie in [0,1]");
  }
  const double ln_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  return incomplete_beta_with_norm(x, a, b, ln_norm);
}

double beta_icdf(double u, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) {
    throw DomainError("beta_icdf: a and b must be positive");
  }
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("beta_icdf: u must lie strictly in (0,1)");
  }
  const double ln_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 50 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (incomplete_beta_with_norm(mid, a, b, ln_norm) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace qmc
