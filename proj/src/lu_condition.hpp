#pragma once

#include <Eigen/Dense>
#include <limits>

namespace algmech::detail {

// Condition estimate from a computed LU factorization. rcond() alone can
// report 1 for exactly singular matrices (zero pivots confuse the 1-norm
// estimator), so the U-diagonal spread is folded in as well.
inline double lu_condition(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
  const auto diag = lu.matrixLU().diagonal();
  double dmax = diag.cwiseAbs().maxCoeff();
  double dmin = diag.cwiseAbs().minCoeff();
  if (dmin == 0.0 || dmax == 0.0) return std::numeric_limits<double>::infinity();
  double from_diag = dmax / dmin;
  double rc = lu.rcond();
  double from_rcond =
      rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  return std::max(from_diag, from_rcond);
}

}  // namespace algmech::detail
