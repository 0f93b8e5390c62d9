#include "covest/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "covest/estimator.hpp"
#include "covest/linalg.hpp"
#include "covest/rng.hpp"

namespace covest {

Eigen::MatrixXd h_matrix(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                         double subgauss) {
  const Eigen::Index n = sigma_matrix.rows();
  if (sigma_matrix.cols() != n || p.dim() != n) {
    throw std::invalid_argument("h_matrix: dimension mismatch");
  }
  if (!(subgauss > 0.0)) throw std::invalid_argument("h_matrix: sub-Gaussian ratio must be > 0");
  const Eigen::VectorXd d = sigma_matrix.diagonal();
  if ((d.array() < 0.0).any()) {
    throw std::invalid_argument("h_matrix: covariance has a negative diagonal entry");
  }
  const double s2 = subgauss * subgauss;
  const Eigen::VectorXd root = d.cwiseSqrt();
  const Eigen::VectorXd& pv = p.probabilities();
  Eigen::MatrixXd h = s2 * (root * root.transpose()).cwiseQuotient(pv * pv.transpose());
  h.diagonal() = s2 * d.cwiseQuotient(pv);
  return h;
}

double entrywise_norm(const Eigen::MatrixXd& m, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("entrywise_norm: q must be >= 1");
  if (!m.allFinite()) throw std::invalid_argument("entrywise_norm: non-finite entry");
  if (q == 2.0) return m.norm();
  if (q == 1.0) return m.cwiseAbs().sum();
  // Scale by the largest magnitude so |m|^q cannot overflow.
  const double top = m.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  const double s = (m.cwiseAbs() / top).array().pow(q).sum();
  return top * std::pow(s, 1.0 / q);
}

namespace {
Eigen::VectorXd checked_psd_eigenvalues(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("expected a nonempty square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double top = lambda.maxCoeff();
  if (!(top > 0.0)) throw std::domain_error("matrix has no positive eigenvalue (zero matrix?)");
  if (lambda.minCoeff() < -1e-8 * std::max(1.0, top)) {
    throw std::domain_error("matrix is not positive semidefinite (eigenvalue " +
                            std::to_string(lambda.minCoeff()) + ")");
  }
  return lambda;
}
}  // namespace

double spectral_norm_psd(const Eigen::MatrixXd& sigma_matrix) {
  return checked_psd_eigenvalues(sigma_matrix).maxCoeff();
}

double effective_rank(const Eigen::MatrixXd& sigma_matrix) {
  const Eigen::VectorXd lambda = checked_psd_eigenvalues(sigma_matrix);
  return sigma_matrix.trace() / lambda.maxCoeff();
}

double theorem1_bound(double h_norm_q, std::size_t n, std::size_t samples, double eta,
                      double gamma) {
  if (samples < 1) throw std::invalid_argument("theorem1_bound: T must be >= 1");
  if (n < 1) throw std::invalid_argument("theorem1_bound: n must be >= 1");
  if (!(eta > 1.0)) throw std::invalid_argument("theorem1_bound: eta must be > 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("theorem1_bound: gamma must be > 0");
  if (!(h_norm_q >= 0.0)) throw std::invalid_argument("theorem1_bound: ||H||_q must be >= 0");
  const double rate =
      gamma * (2.0 * std::log(static_cast<double>(n)) + std::log(eta)) / static_cast<double>(samples);
  return h_norm_q * std::max(std::sqrt(rate), rate);
}

double h_norm_erank_bound(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                          double subgauss, double q) {
  if (!(q >= 2.0)) throw std::invalid_argument("erank bound on ||H||_q requires q >= 2");
  const Eigen::VectorXd lambda = checked_psd_eigenvalues(sigma_matrix);
  const double spectral = lambda.maxCoeff();
  const double erank = sigma_matrix.trace() / spectral;
  const double pmin = p.min_probability();
  const double bound = 2.0 * subgauss * subgauss * erank * spectral / (pmin * pmin);
  const double lhs = entrywise_norm(h_matrix(sigma_matrix, p, subgauss), q);
  if (lhs > bound * (1.0 + 1e-12)) {
    throw std::logic_error("||H||_q = " + std::to_string(lhs) + " exceeds its erank bound " +
                           std::to_string(bound));
  }
  return bound;
}

BoundReport make_bound_report(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                              double subgauss, double q, std::size_t samples, double eta,
                              double gamma) {
  BoundReport r;
  r.h_matrix = h_matrix(sigma_matrix, p, subgauss);
  r.h_norm_q = entrywise_norm(r.h_matrix, q);
  r.q = q;
  r.erank = effective_rank(sigma_matrix);
  r.eta = eta;
  r.gamma = gamma;
  r.samples = samples;
  r.bound_value = theorem1_bound(r.h_norm_q, static_cast<std::size_t>(sigma_matrix.rows()),
                                 samples, eta, gamma);
  if (q >= 2.0) r.erank_bound = h_norm_erank_bound(sigma_matrix, p, subgauss, q);
  return r;
}

namespace {

// ||Sigma_hat - Sigma||_q for `trials` independent Gaussian runs of T samples.
std::vector<double> trial_errors(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                                 double q, std::size_t samples, std::size_t trials,
                                 std::uint64_t seed) {
  const Eigen::Index n = sigma_matrix.rows();
  const Eigen::MatrixXd factor = psd_sqrt(sigma_matrix);
  std::vector<double> errors(trials);
  const auto total = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < total; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    Eigen::MatrixXd y(static_cast<Eigen::Index>(samples), n);
    Eigen::VectorXd g(n);
    for (Eigen::Index k = 0; k < y.rows(); ++k) {
      for (Eigen::Index i = 0; i < n; ++i) g[i] = rng.normal();
      const Eigen::VectorXd x = factor * g;
      for (Eigen::Index i = 0; i < n; ++i) y(k, i) = rng.uniform() < p[i] ? x[i] : 0.0;
    }
    const CovarianceEstimate est = estimate_cov(y, p);
    errors[static_cast<std::size_t>(r)] = entrywise_norm(est.matrix - sigma_matrix, q);
  }
  return errors;
}

void check_calibration_args(std::size_t samples, double eta, std::size_t trials) {
  if (trials < 1) throw std::invalid_argument("calibration needs at least one trial");
  if (samples < 1) throw std::invalid_argument("calibration needs T >= 1");
  if (!(eta > 2.0)) throw std::invalid_argument("calibration needs eta > 2 (coverage 1 - 2/eta)");
}

}  // namespace

GammaCalibration calibrate_gamma(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                                 double subgauss, double q, std::size_t samples, double eta,
                                 std::size_t trials, std::uint64_t seed) {
  check_calibration_args(samples, eta, trials);
  const double h_norm = entrywise_norm(h_matrix(sigma_matrix, p, subgauss), q);
  const double log_term =
      2.0 * std::log(static_cast<double>(sigma_matrix.rows())) + std::log(eta);
  const std::vector<double> errors = trial_errors(sigma_matrix, p, q, samples, trials, seed);

  // Smallest gamma that makes the bound reach each trial's error:
  // max(sqrt(g a), g a) >= r  <=>  g >= min(r^2, r) / a, with a = log_term / T.
  const double a = log_term / static_cast<double>(samples);
  std::vector<double> needed(trials);
  for (std::size_t r = 0; r < trials; ++r) {
    const double ratio = errors[r] / h_norm;
    needed[r] = std::min(ratio * ratio, ratio) / a;
  }
  std::sort(needed.begin(), needed.end());
  const double target = 2.0 / eta;
  const auto allowed = static_cast<std::size_t>(std::floor(target * static_cast<double>(trials)));

  GammaCalibration out;
  out.target = target;
  out.trials = trials;
  // Nudged up so a trial sitting exactly on the bound is covered.
  out.gamma = allowed >= trials ? std::numeric_limits<double>::min()
                                : needed[trials - 1 - allowed] * (1.0 + 1e-12);
  out.gamma = std::max(out.gamma, std::numeric_limits<double>::min());
  const double bound = theorem1_bound(h_norm, static_cast<std::size_t>(sigma_matrix.rows()),
                                      samples, eta, out.gamma);
  const auto exceed = std::count_if(errors.begin(), errors.end(), [&](double e) { return e > bound; });
  out.exceed_fraction = static_cast<double>(exceed) / static_cast<double>(trials);
  return out;
}

double bound_exceed_fraction(const Eigen::MatrixXd& sigma_matrix, const MaskDistribution& p,
                             double subgauss, double q, std::size_t samples, double eta,
                             double gamma, std::size_t trials, std::uint64_t seed) {
  check_calibration_args(samples, eta, trials);
  const double h_norm = entrywise_norm(h_matrix(sigma_matrix, p, subgauss), q);
  const double bound = theorem1_bound(h_norm, static_cast<std::size_t>(sigma_matrix.rows()),
                                      samples, eta, gamma);
  const std::vector<double> errors = trial_errors(sigma_matrix, p, q, samples, trials, seed);
  const auto exceed = std::count_if(errors.begin(), errors.end(), [&](double e) { return e > bound; });
  return static_cast<double>(exceed) / static_cast<double>(trials);
}

}  // namespace covest
