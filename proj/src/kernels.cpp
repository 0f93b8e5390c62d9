#include "covest/kernels.hpp"

#include <stdexcept>
#include <vector>

#include <omp.h>

namespace covest::kernels {

Eigen::MatrixXd outer_sum_serial(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.cols();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double yj = rows(k, j);
      if (yj == 0.0) continue;
      for (Eigen::Index i = j; i < n; ++i) acc(i, j) += rows(k, i) * yj;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) acc(j, i) = acc(i, j);
  }
  return acc;
}

Eigen::MatrixXd outer_sum_parallel(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.cols();
  const Eigen::Index t = rows.rows();
  const Eigen::Index chunks = (t + kChunkRows - 1) / kChunkRows;
  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * kChunkRows;
    const Eigen::Index len = std::min(kChunkRows, t - begin);
    auto block = rows.middleRows(begin, len);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    s.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    partial[static_cast<std::size_t>(c)] = std::move(s);
  }

  // Fixed-order reduction.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : partial) acc += s;
  acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
  return acc;
}

namespace {
void check_mask_shapes(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& uniforms,
                       const Eigen::VectorXd& p) {
  if (uniforms.rows() != rows.rows() || uniforms.cols() != rows.cols() ||
      p.size() != rows.cols()) {
    throw std::invalid_argument("apply_masks: shape mismatch");
  }
}
}  // namespace

std::size_t apply_masks_serial(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& uniforms,
                               const Eigen::VectorXd& p, Eigen::MatrixXd& observed) {
  check_mask_shapes(rows, uniforms, p);
  observed.setZero(rows.rows(), rows.cols());
  std::size_t count = 0;
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    for (Eigen::Index i = 0; i < rows.cols(); ++i) {
      if (uniforms(k, i) < p[i]) {
        observed(k, i) = rows(k, i);
        ++count;
      }
    }
  }
  return count;
}

std::size_t apply_masks_parallel(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& uniforms,
                                 const Eigen::VectorXd& p, Eigen::MatrixXd& observed) {
  check_mask_shapes(rows, uniforms, p);
  observed.resize(rows.rows(), rows.cols());
  const Eigen::Index cols = rows.cols();
  const Eigen::Index t = rows.rows();
  std::size_t count = 0;
#pragma omp parallel for schedule(static) reduction(+ : count)
  for (Eigen::Index i = 0; i < cols; ++i) {
    for (Eigen::Index k = 0; k < t; ++k) {
      const bool seen = uniforms(k, i) < p[i];
      observed(k, i) = seen ? rows(k, i) : 0.0;
      count += seen ? 1 : 0;
    }
  }
  return count;
}

}  // namespace covest::kernels
