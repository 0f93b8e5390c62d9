#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "covest/sampling.hpp"

namespace covest {

/// Error-bound diagnostics for the masked estimator at a given sample count.
struct BoundReport {
  Eigen::MatrixXd h_matrix;
  double h_norm_q = 0.0;
  double q = 2.0;
  double erank = 0.0;
  double bound_value = 0.0;
  double eta = 0.0;
  double gamma = 1.0;
  std::size_t samples = 0;
  /// 2 sigma^2 erank ||Sigma|| / min(p)^2; present when q >= 2.
  std::optional<double> erank_bound;
};

/// Computable surrogate for H under ||x_i||_psi2 = sigma sqrt(Sigma_ii):
/// sigma^2 Sigma_ii / p_i on the diagonal, sigma^2 sqrt(Sigma_ii Sigma_jj)/(p_i p_j) off it.
/// Throws std::invalid_argument on a negative diagonal entry or shape mismatch.
Eigen::MatrixXd h_matrix(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                         double subgauss = 1.0);

/// (sum_ij |m_ij|^q)^(1/q). Throws std::invalid_argument for q < 1.
double entrywise_norm(const Eigen::MatrixXd& m, double q);

/// Largest eigenvalue of a symmetric PSD matrix.
double spectral_norm_psd(const Eigen::MatrixXd& sigma_matrix);

/// tr(Sigma) / ||Sigma||. Throws std::domain_error for the zero matrix or an
/// eigenvalue below -1e-8 * max(1, ||Sigma||).
double effective_rank(const Eigen::MatrixXd& sigma_matrix);

/// ||H||_q * max(sqrt(gamma L / T), gamma L / T) with L = 2 log n + log eta.
double theorem1_bound(double h_norm_q, std::size_t n, std::size_t samples, double eta,
                      double gamma);

/// 2 sigma^2 erank(Sigma) ||Sigma|| / min(p)^2, checked against ||H||_q.
/// Throws std::invalid_argument for q < 2; std::logic_error if the checked
/// inequality fails.
double h_norm_erank_bound(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                          double subgauss, double q);

BoundReport make_bound_report(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                              double subgauss, double q, std::size_t samples, double eta,
                              double gamma);

struct GammaCalibration {
  double gamma = 0.0;
  double exceed_fraction = 0.0;  // on the calibration trials, at `gamma`
  double target = 0.0;           // 2 / eta
  std::size_t trials = 0;
};

/// Smallest gamma such that at most a 2/eta fraction of Gaussian trials
/// (T masked samples each) have ||Sigma_hat - Sigma||_q above the bound.
GammaCalibration calibrate_gamma(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                                 double subgauss, double q, std::size_t samples, double eta,
                                 std::size_t trials, std::uint64_t seed);

/// Fraction of fresh trials whose error exceeds the bound at a fixed gamma.
double bound_exceed_fraction(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                             double subgauss, double q, std::size_t samples, double eta,
                             double gamma, std::size_t trials, std::uint64_t seed);

}  // namespace covest
