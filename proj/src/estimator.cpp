#include "covest/estimator.hpp"

#include <stdexcept>
#include <string>

#include "covest/kernels.hpp"

namespace covest {

CovarianceEstimate CovarianceEstimate::zero(Eigen::Index n) {
  return CovarianceEstimate{Eigen::MatrixXd::Zero(n, n), 0, 0};
}

CovarianceEstimate estimate_cov(const Eigen::MatrixXd& observed, const MaskDistribution& p) {
  if (observed.rows() == 0) throw std::invalid_argument("estimate_cov: no samples");
  if (observed.cols() != p.dim()) {
    throw std::invalid_argument("estimate_cov: samples have dimension " +
                                std::to_string(observed.cols()) + ", distribution has " +
                                std::to_string(p.dim()));
  }
  const auto t = static_cast<std::size_t>(observed.rows());
  Eigen::MatrixXd m = kernels::outer_sum_parallel(observed);
  m *= 1.0 / static_cast<double>(t);
  m = m.cwiseProduct(hadamard_inverse(make_xi(p)));
  return CovarianceEstimate{std::move(m), t, 1};
}

CovarianceEstimate estimate_cov(std::span<const MaskedSample> samples, const MaskDistribution& p) {
  if (samples.empty()) throw std::invalid_argument("estimate_cov: no samples");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(samples.size()), p.dim());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].observed.size() != p.dim()) {
      throw std::invalid_argument("estimate_cov: sample " + std::to_string(k) +
                                  " has dimension " +
                                  std::to_string(samples[k].observed.size()));
    }
    rows.row(static_cast<Eigen::Index>(k)) = samples[k].observed.transpose();
  }
  return estimate_cov(rows, p);
}

CovarianceEstimate merge_estimates(const CovarianceEstimate& prev, const CovarianceEstimate& batch) {
  if (prev.dim() != batch.dim() || prev.matrix.cols() != batch.matrix.cols()) {
    throw std::invalid_argument("merge_estimates: dimension mismatch");
  }
  const double t = static_cast<double>(prev.iteration);
  CovarianceEstimate out;
  if (prev.iteration == 0) {
    out.matrix = batch.matrix;
  } else {
    out.matrix = (1.0 / (t + 1.0)) * batch.matrix + (t / (t + 1.0)) * prev.matrix;
  }
  out.sample_count = prev.sample_count + batch.sample_count;
  out.iteration = prev.iteration + 1;
  return out;
}

double relative_frobenius_error(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
    throw std::invalid_argument("relative_frobenius_error: dimension mismatch");
  }
  const double denom = truth.norm();
  if (denom == 0.0) throw std::domain_error("relative_frobenius_error: truth is the zero matrix");
  return (est - truth).norm() / denom;
}

double relative_frobenius_error(const CovarianceEstimate& est, const Eigen::MatrixXd& truth) {
  return relative_frobenius_error(est.matrix, truth);
}

}  // namespace covest
