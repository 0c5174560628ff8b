#pragma once

#include <Eigen/Dense>

namespace ppmm {

/// Result of a symmetric positive semidefinite square root. `root` is
/// symmetric and root*root reproduces `input` up to the clamping applied
/// to slightly negative eigenvalues.
struct MatrixRoot {
  Eigen::MatrixXd input;
  Eigen::MatrixXd root;
  bool floor_applied = false;
};

bool is_symmetric(const Eigen::MatrixXd& m, double tol);

/// Square root via symmetric eigendecomposition. Eigenvalues below
/// clamp_rel * max|eigenvalue| are clamped to zero (sets floor_applied).
MatrixRoot symmetric_sqrt(const Eigen::MatrixXd& m, double clamp_rel = 1e-12);

/// Inverse square root with eigenvalues floored at ridge * largest
/// eigenvalue before inversion. Throws when the matrix is numerically zero.
Eigen::MatrixXd symmetric_inverse_sqrt(const Eigen::MatrixXd& m, double ridge);

/// Descending eigenvalues of a symmetric matrix.
Eigen::VectorXd symmetric_eigenvalues_desc(const Eigen::MatrixXd& m);

}  // namespace ppmm
