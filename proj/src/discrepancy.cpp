#include "qmc/discrepancy.hpp"

#include <cmath>

#include "qmc/errors.hpp"

namespace qmc {

double centered_l2_discrepancy(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 1) throw ConfigError("centered_l2_discrepancy: need at least one point");

  // Hickernell's closed form:
  //   CD^2 = (13/12)^d
  //        - (2/N) sum_i prod_k (1 + |x|/2 - x^2/2)           with x = x_ik - 1/2
  //        + (1/N^2) sum_ij prod_k (1 + (|x_i|+|x_j|-|x_i-x_j|)/2)
  Eigen::MatrixXd centered = points.array() - 0.5;
  Eigen::MatrixXd absc = centered.cwiseAbs();

  double sum_single = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double prod = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double a = absc(i, k);
      prod *= 1.0 + 0.5 * a - 0.5 * a * a;
    }
    sum_single += prod;
  }

  double sum_pair = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    // diagonal term: |x_i - x_i| = 0
    double diag = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) diag *= 1.0 + absc(i, k);
    sum_pair += diag;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double prod = 1.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        prod *= 1.0 + 0.5 * (absc(i, k) + absc(j, k) - std::abs(centered(i, k) - centered(j, k)));
      }
      sum_pair += 2.0 * prod;
    }
  }

  const double nd = static_cast<double>(n);
  double cd2 = std::pow(13.0 / 12.0, static_cast<double>(d)) - 2.0 / nd * sum_single +
               sum_pair / (nd * nd);
  if (cd2 < 0.0) cd2 = 0.0;  // round-off only; the form is a squared norm
  return std::sqrt(cd2);
}

}  // namespace qmc
