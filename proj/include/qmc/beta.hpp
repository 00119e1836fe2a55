#pragma once

namespace qmc {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation (Lentz). a, b > 0, x in [0, 1].
double regularized_incomplete_beta(double x, double a, double b);

// Quantile of the Beta(a, b) distribution by bisection on I_x(a, b);
// 50 iterations, well past the 1e-12 target tolerance.
double beta_icdf(double u, double a, double b);

}  // namespace qmc
