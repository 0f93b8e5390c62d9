#include "covest/linalg.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace covest {

SymmetricEigen psd_eigen(const Eigen::MatrixXd& a, double tol) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("psd_eigen: expected a nonempty square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("psd_eigen: eigensolver failed");
  Eigen::VectorXd lambda = es.eigenvalues();
  const double scale = std::max(1.0, lambda.maxCoeff());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -tol * scale) {
      throw std::domain_error("matrix is not positive semidefinite (eigenvalue " +
                              std::to_string(lambda[i]) + ")");
    }
    lambda[i] = std::max(lambda[i], 0.0);
  }
  return SymmetricEigen{es.eigenvectors(), std::move(lambda)};
}

Eigen::MatrixXd psd_sqrt(const SymmetricEigen& eig, double shift) {
  const Eigen::VectorXd root = (eig.values.array() + shift).max(0.0).sqrt().matrix();
  return eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a, double tol) { return psd_sqrt(psd_eigen(a, tol)); }

}  // namespace covest
