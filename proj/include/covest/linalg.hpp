#pragma once

#include <Eigen/Dense>

namespace covest {

struct SymmetricEigen {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;  // ascending, clamped at zero
};

/// Eigendecomposition of a symmetric PSD matrix. Eigenvalues in
/// [-tol * max(1, lambda_max), 0) are clamped to zero; anything more negative
/// throws std::domain_error.
SymmetricEigen psd_eigen(const Eigen::MatrixXd& a, double tol = 1e-10);

/// Symmetric F with F F^T = A + shift I, built from psd_eigen(A).
Eigen::MatrixXd psd_sqrt(const SymmetricEigen& eig, double shift = 0.0);
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a, double tol = 1e-10);

}  // namespace covest
