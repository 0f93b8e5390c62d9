#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "covest/sampling.hpp"

namespace covest {

/// Symmetric n x n estimate of the covariance together with the number of
/// samples behind it and the number of batches merged into it. The matrix is
/// not necessarily positive semidefinite.
struct CovarianceEstimate {
  Eigen::MatrixXd matrix;
  std::size_t sample_count = 0;
  std::size_t iteration = 0;

  /// The empty estimate (all zeros, T = 0, iteration 0) that
  /// running averages start from.
  static CovarianceEstimate zero(Eigen::Index n);
  Eigen::Index dim() const noexcept { return matrix.rows(); }
};

/// (1/T) sum_k y_k y_k^T ⊙ Xi^dagger over rows of `observed` (T x n).
/// The result carries iteration = 1. Throws std::invalid_argument on an empty
/// sample set or a dimension mismatch.
CovarianceEstimate estimate_cov(const Eigen::MatrixXd& observed, const MaskDistribution& p);
CovarianceEstimate estimate_cov(std::span<const MaskedSample> samples, const MaskDistribution& p);

/// Running-average merge: batch/(t+1) + prev * t/(t+1) with t = prev.iteration.
/// Returns iteration t + 1 and the summed sample count.
CovarianceEstimate merge_estimates(const CovarianceEstimate& prev, const CovarianceEstimate& batch);

/// ||est - truth||_F / ||truth||_F. Throws std::domain_error when truth = 0.
double relative_frobenius_error(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth);
double relative_frobenius_error(const CovarianceEstimate& est, const Eigen::MatrixXd& truth);

}  // namespace covest
