#pragma once

#include <Eigen/Dense>

namespace reeb {

// Half-dimension cap: the largest model is S^7 in R^8, which keeps every
// pointwise matrix on the stack.
inline constexpr int kMaxHalfDim = 3;
inline constexpr int kMaxCoords = 2 * kMaxHalfDim + 2;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxCoords, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxCoords, kMaxCoords>;

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// a ∧ b as an antisymmetric matrix: (a∧b)(u,v) = a(u)b(v) - a(v)b(u).
inline Mat wedge(const Vec& a, const Vec& b) {
  return a * b.transpose() - b * a.transpose();
}

}  // namespace reeb
