#pragma once

#include <Eigen/Dense>

// Data-parallel inner loops. Every kernel has a plain serial reference
// (`*_serial`) kept for testing and benchmarking against the OpenMP version.
namespace covest::kernels {

/// Rows per partial sum in the parallel kernels. The partition does not
/// depend on the thread count, so results are bitwise reproducible for any
/// number of threads.
inline constexpr Eigen::Index kChunkRows = 64;

/// Returns sum_k row_k^T row_k (n x n, symmetric) for a T x n sample matrix.
Eigen::MatrixXd outer_sum_serial(const Eigen::MatrixXd& rows);
Eigen::MatrixXd outer_sum_parallel(const Eigen::MatrixXd& rows);

/// rows ⊙ (u < p) row-wise, where u holds one uniform per entry. Returns the
/// number of observed entries; `observed` is resized to match `rows`.
std::size_t apply_masks_serial(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& uniforms,
                               const Eigen::VectorXd& p, Eigen::MatrixXd& observed);
std::size_t apply_masks_parallel(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& uniforms,
                                 const Eigen::VectorXd& p, Eigen::MatrixXd& observed);

}  // namespace covest::kernels
