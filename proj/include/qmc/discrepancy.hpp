#pragma once

#include <Eigen/Core>

#include "qmc/sampler.hpp"

namespace qmc {

// Centered L2 discrepancy of a point set in [0,1)^d, evaluated with the
// closed-form double sum (O(N^2 d)). Used by tests and the bias-study
// report, not on any hot path.
double centered_l2_discrepancy(const Eigen::MatrixXd& points);

inline double centered_l2_discrepancy(const UnitPointSet& set) {
  return centered_l2_discrepancy(set.points);
}

}  // namespace qmc
